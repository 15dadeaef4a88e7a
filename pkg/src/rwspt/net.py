"""Places with hierarchical labels, transitions, nets, systems and firing.

A place label is a nonempty sequence of ``(tag, index)`` pairs.  The
rightmost pair is the root of the hierarchy: ``p(<"a";0> <"L";1>)`` is the
``a`` place of line 1.  Places are ordered by comparing their pairs from
the root towards the leaf, which keeps every subtree of the hierarchy
contiguous in sorted order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence, Tuple

from .errors import DuplicateTransitionError, NotEnabledError, UnknownTransitionError
from .multiset import EMPTY, Bag

Pair = Tuple[str, int]
Label = Tuple[Pair, ...]


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


@dataclass(frozen=True, slots=True)
class Place:
    """A place identified by its label (leaf pair first, root pair last)."""

    label: Label
    _key: Label = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        label = tuple((str(t), int(i)) for t, i in self.label)
        if not label:
            raise ValueError("place label must be nonempty")
        for tag, idx in label:
            if not tag:
                raise ValueError("label tags must be nonempty strings")
            if idx < 0:
                raise ValueError("label indices must be natural numbers")
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "_key", label[::-1])

    @classmethod
    def of(cls, *pairs: Pair) -> "Place":
        """``Place.of(("a", 0), ("L", 1))`` is ``p(<"a";0> <"L";1>)``."""
        return cls(tuple(pairs))

    @property
    def key(self) -> Label:
        """Sort key: pairs read from the root towards the leaf."""
        return self._key

    @property
    def root(self) -> Pair:
        return self.label[-1]

    def prefixed(self, tag: str, index: int) -> "Place":
        """Place nested one level deeper under a new root ``(tag, index)``."""
        return Place(self.label + ((tag, index),))

    def __lt__(self, other: "Place") -> bool:
        return self._key < other._key

    def __le__(self, other: "Place") -> bool:
        return self._key <= other._key

    def __gt__(self, other: "Place") -> bool:
        return self._key > other._key

    def __ge__(self, other: "Place") -> bool:
        return self._key >= other._key

    def __str__(self) -> str:
        return "p(" + " ".join(f"< {_quote(t)} ; {i} >" for t, i in self.label) + ")"


def place_text(p: Place) -> str:
    return str(p)


def bag_text(b: Bag) -> str:
    return b.to_text(place_text)


def rate_text(rate: float) -> str:
    """Shortest round-trip decimal form of a rate."""
    return repr(float(rate))


@dataclass(frozen=True)
class Transition:
    """A transition with input, output and inhibitor arcs plus a tag and a rate.

    Equality compares every field including the rate; :attr:`identity`
    leaves the rate out and is what a :class:`Net` keeps unique.
    """

    input: Bag = EMPTY
    output: Bag = EMPTY
    inhibitor: Bag = EMPTY
    tag: str = "t"
    rate: float = 1.0

    def __post_init__(self):
        for name in ("input", "output", "inhibitor"):
            value = getattr(self, name)
            if not isinstance(value, Bag):
                object.__setattr__(self, name, Bag(value))
        rate = float(self.rate)
        if not math.isfinite(rate) or rate <= 0.0:
            raise ValueError(f"transition rate must be positive and finite, got {self.rate!r}")
        object.__setattr__(self, "rate", rate)
        if not isinstance(self.tag, str):
            raise TypeError("transition tag must be a string")

    @property
    def identity(self) -> tuple:
        return (self.input, self.output, self.inhibitor, self.tag)

    @cached_property
    def places(self) -> frozenset:
        return frozenset(self.input) | frozenset(self.output) | frozenset(self.inhibitor)

    @cached_property
    def arcs_text(self) -> str:
        return f"[{bag_text(self.input)}, {bag_text(self.output)}, {bag_text(self.inhibitor)}]"

    @cached_property
    def text(self) -> str:
        return f"{self.arcs_text} |-> << {_quote(self.tag)}, {rate_text(self.rate)} >>"

    @cached_property
    def sort_key(self) -> tuple:
        return (self.tag, self.arcs_text, self.rate)

    def relabel(self, f: Callable[[Place], Place]) -> "Transition":
        """Transition with every place replaced by ``f(place)``."""
        return Transition(
            self.input.map_elements(f),
            self.output.map_elements(f),
            self.inhibitor.map_elements(f),
            self.tag,
            self.rate,
        )

    def __str__(self) -> str:
        return self.text


class Net:
    """A finite sequence of transitions.

    Semantics and equality ignore transition order; serialization keeps it.
    """

    __slots__ = ("transitions", "_set", "_hash", "__dict__")

    def __init__(self, transitions: Iterable[Transition] = ()):
        self.transitions: Tuple[Transition, ...] = tuple(transitions)
        seen = {}
        for t in self.transitions:
            if not isinstance(t, Transition):
                raise TypeError(f"expected Transition, got {type(t).__name__}")
            ident = t.identity
            if ident in seen:
                raise DuplicateTransitionError(f"duplicate transition {t.arcs_text} tagged {t.tag!r}")
            seen[ident] = t
        self._set = frozenset(self.transitions)
        self._hash = hash(self._set)

    @cached_property
    def places(self) -> frozenset:
        out: set = set()
        for t in self.transitions:
            out |= t.places
        return frozenset(out)

    @cached_property
    def sorted_places(self) -> Tuple[Place, ...]:
        return tuple(sorted(self.places))

    @cached_property
    def canonical_transitions(self) -> Tuple[Transition, ...]:
        """Transitions sorted by (tag, serialized arcs)."""
        return tuple(sorted(self.transitions, key=lambda t: t.sort_key))

    def __contains__(self, t: object) -> bool:
        return t in self._set

    def __iter__(self):
        return iter(self.transitions)

    def __len__(self) -> int:
        return len(self.transitions)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Net):
            return NotImplemented
        return self is other or (self._hash == other._hash and self._set == other._set)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Net({len(self.transitions)} transitions, {len(self.places)} places)"

    def relabel(self, f: Callable[[Place], Place]) -> "Net":
        return Net(t.relabel(f) for t in self.transitions)


@dataclass(frozen=True)
class System:
    """A net together with a marking over its places."""

    net: Net
    marking: Bag = EMPTY

    def __post_init__(self):
        if not isinstance(self.marking, Bag):
            object.__setattr__(self, "marking", Bag(self.marking))
        places = self.net.places
        for p in self.marking:
            if p not in places:
                raise ValueError(f"marked place {p} does not occur in the net")

    @cached_property
    def _hash(self) -> int:
        return hash((self.net, self.marking))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, System):
            return NotImplemented
        return self is other or (self.marking == other.marking and self.net == other.net)


def places(n: Net) -> frozenset:
    """Union of the supports of all arcs of ``n``."""
    return n.places


def _enabled(t: Transition, m: Bag) -> bool:
    if not t.input.leq(m):
        return False
    get = m.multiplicity
    return all(get(p) < h for p, h in t.inhibitor.items())


def enabled(t: Transition, s: System) -> bool:
    """``I(t) <= m`` and ``m(p) < H(t)(p)`` for every inhibitor arc."""
    if t not in s.net:
        raise UnknownTransitionError(f"transition {t} is not part of the net")
    return _enabled(t, s.marking)


def fire(t: Transition, s: System) -> System:
    """Successor marking ``m - I(t) + O(t)`` on the same net."""
    if not enabled(t, s):
        raise NotEnabledError(f"transition {t} is not enabled")
    return System(s.net, s.marking.subtract(t.input).add(t.output))


def enabled_transitions(s: System) -> list:
    """Enabled transitions in net order."""
    m = s.marking
    return [t for t in s.net.transitions if _enabled(t, m)]


def system(transitions: Sequence[Transition], marking: Mapping[Place, int] | Bag | None = None) -> System:
    """Convenience constructor."""
    return System(Net(transitions), marking if isinstance(marking, Bag) else Bag(marking or {}))
