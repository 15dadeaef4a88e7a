"""Finite multisets (bags) over a totally ordered element domain.

A :class:`Bag` is an immutable value.  Entries are kept sorted by element,
so iteration and serialization are deterministic.  Zero multiplicities are
never stored.
"""

from __future__ import annotations

from typing import Any, Callable, Generic, Iterable, Iterator, Mapping, Tuple, TypeVar

from .errors import UnderflowError

E = TypeVar("E")

#: Largest multiplicity accepted; larger values raise ``OverflowError``.
MAX_MULTIPLICITY = 2**63 - 1

#: Literal used for the empty bag in the textual format.
NIL = "nilP"


def _check_count(k: Any) -> int:
    if isinstance(k, bool) or not isinstance(k, int):
        raise TypeError(f"multiplicity must be an int, got {k!r}")
    if k < 0:
        raise ValueError(f"multiplicity must be non-negative, got {k}")
    if k > MAX_MULTIPLICITY:
        raise OverflowError(f"multiplicity {k} exceeds {MAX_MULTIPLICITY}")
    return k


class Bag(Generic[E]):
    """Immutable multiset.

    Parameters
    ----------
    entries:
        Either a mapping ``element -> multiplicity`` or an iterable of
        ``(element, multiplicity)`` pairs.  Repeated elements in the iterable
        form are summed; zero multiplicities are dropped.

    Examples
    --------
    >>> Bag({"a": 2}) + Bag({"a": 1, "b": 1})
    Bag({'a': 3, 'b': 1})
    >>> Bag({"a": 3}).multiplicity("b")
    0
    """

    __slots__ = ("_map", "_items", "_hash")

    def __init__(self, entries: Mapping[E, int] | Iterable[Tuple[E, int]] | None = None):
        acc: dict = {}
        if entries is not None:
            pairs = entries.items() if isinstance(entries, Mapping) else entries
            for e, k in pairs:
                _check_count(k)
                if k:
                    acc[e] = acc.get(e, 0) + k
        for k in acc.values():
            _check_count(k)
        self._items: Tuple[Tuple[E, int], ...] = tuple(sorted(acc.items(), key=lambda ek: ek[0]))
        self._map = dict(self._items)
        self._hash: int | None = None

    @classmethod
    def _from_sorted(cls, items: Iterable[Tuple[E, int]]) -> "Bag[E]":
        """Build from pairs already sorted by element with positive counts."""
        bag = cls.__new__(cls)
        bag._items = tuple(items)
        bag._map = dict(bag._items)
        bag._hash = None
        return bag

    @classmethod
    def of(cls, *elements: E) -> "Bag[E]":
        """Bag with one occurrence per listed element (repeats accumulate)."""
        return cls((e, 1) for e in elements)

    # -- queries ---------------------------------------------------------
    def multiplicity(self, e: E) -> int:
        return self._map.get(e, 0)

    __getitem__ = multiplicity

    def items(self) -> Tuple[Tuple[E, int], ...]:
        """Entries as ``(element, multiplicity)`` pairs in element order."""
        return self._items

    def support(self) -> Tuple[E, ...]:
        return tuple(e for e, _ in self._items)

    def total(self) -> int:
        """Sum of all multiplicities."""
        return sum(k for _, k in self._items)

    def __iter__(self) -> Iterator[E]:
        return (e for e, _ in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __bool__(self) -> bool:
        return bool(self._items)

    def __contains__(self, e: object) -> bool:
        return e in self._map

    # -- arithmetic -----------------------------------------------------
    def add(self, other: "Bag[E]") -> "Bag[E]":
        if not other._items:
            return self
        if not self._items:
            return other
        acc = dict(self._map)
        for e, k in other._items:
            acc[e] = acc.get(e, 0) + k
        return Bag(acc)

    def subtract(self, other: "Bag[E]") -> "Bag[E]":
        """Component-wise difference; raises :class:`UnderflowError` if ``other`` is not contained."""
        if not other._items:
            return self
        acc = dict(self._map)
        for e, k in other._items:
            have = acc.get(e, 0)
            if have < k:
                raise UnderflowError(f"cannot remove {k} of {e!r}: only {have} present")
            if have == k:
                del acc[e]
            else:
                acc[e] = have - k
        return Bag._from_sorted((e, acc[e]) for e, _ in self._items if e in acc)

    def scale(self, factor: int) -> "Bag[E]":
        _check_count(factor)
        return Bag((e, k * factor) for e, k in self._items)

    def leq(self, other: "Bag[E]") -> bool:
        get = other._map.get
        return all(k <= get(e, 0) for e, k in self._items)

    def map_elements(self, f: Callable[[E], Any]) -> "Bag":
        """Image of the bag under ``f`` (multiplicities of merged elements add)."""
        return Bag((f(e), k) for e, k in self._items)

    def restrict(self, keep: Callable[[E], bool]) -> "Bag[E]":
        return Bag._from_sorted((e, k) for e, k in self._items if keep(e))

    __add__ = add
    __sub__ = subtract
    __le__ = leq

    def __ge__(self, other: "Bag[E]") -> bool:
        return other.leq(self)

    # -- value semantics --------------------------------------------------
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Bag):
            return NotImplemented
        return self._map == other._map

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._map.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"Bag({dict(self._items)!r})"

    def to_text(self, fmt: Callable[[E], str] = str) -> str:
        """Canonical text ``k1 . e1 + k2 . e2``; the empty bag is ``nilP``."""
        if not self._items:
            return NIL
        return " + ".join(f"{k} . {fmt(e)}" for e, k in self._items)


EMPTY: Bag = Bag()


def add(a: Bag, b: Bag) -> Bag:
    return a.add(b)


def subtract(a: Bag, b: Bag) -> Bag:
    return a.subtract(b)


def leq(a: Bag, b: Bag) -> bool:
    return a.leq(b)


def multiplicity(a: Bag, e) -> int:
    return a.multiplicity(e)
