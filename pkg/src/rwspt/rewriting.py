"""Stochastic rewrite rules over systems.

A :class:`Rule` enumerates ground instances (matches) of itself in a system
and rewrites the system for a chosen match.  The built-in firing rule has
one match per enabled transition and uses that transition's own rate.
Other rules may change the net itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, List, Sequence, Union

from .errors import StaleMatchError
from .net import System, Transition, enabled_transitions, fire
from .symmetry import normalize

#: Rate marker of rules whose instances carry their own rate.
PER_TRANSITION = "per-transition"

FIRING = "firing"


@dataclass(frozen=True)
class Match:
    """One ground instance of a rule.

    ``witness`` identifies the instance (a transition for the firing rule, a
    tuple of places for structural rules); ``label`` names the edge it
    produces in a transition system.
    """

    rule: str
    witness: Hashable
    rate: float
    label: str


@dataclass(frozen=True, eq=False)
class Rule:
    """A named rewrite rule.

    Parameters
    ----------
    name:
        Rule name, used as the edge label of its instances.
    rate:
        Positive rate of every instance, or :data:`PER_TRANSITION` when the
        witnesses are transitions carrying their own rate.
    matcher:
        Pure function returning the witnesses applicable to a system, in a
        deterministic order and without repetitions.
    transformer:
        Pure function rewriting a system for one witness.
    """

    name: str
    rate: Union[float, str]
    matcher: Callable[[System], Sequence[Hashable]] = field(repr=False)
    transformer: Callable[[System, Hashable], System] = field(repr=False)

    def __post_init__(self):
        if self.rate != PER_TRANSITION:
            r = float(self.rate)
            if not math.isfinite(r) or r <= 0:
                raise ValueError(f"rule {self.name!r} needs a positive finite rate")
            object.__setattr__(self, "rate", r)

    def match_of(self, witness: Hashable) -> Match:
        if self.rate == PER_TRANSITION:
            return Match(self.name, witness, witness.rate, witness.tag)
        return Match(self.name, witness, self.rate, self.name)


def firing_rule() -> Rule:
    """The rule firing any enabled transition at its own rate."""
    return Rule(FIRING, PER_TRANSITION, enabled_transitions, lambda s, t: fire(t, s))


def matches(r: Rule, s: System) -> List[Match]:
    """All instances of ``r`` in ``s`` (``s`` need not be normalized)."""
    return [r.match_of(w) for w in r.matcher(s)]


def apply(r: Rule, s: System, m: Match) -> System:
    """Rewrite ``s`` with match ``m`` of rule ``r``; the result is not normalized."""
    if m.rule != r.name or m.witness not in r.matcher(s):
        raise StaleMatchError(f"match {m.witness!r} of rule {r.name!r} is not applicable")
    return r.transformer(s, m.witness)


def successors(s: System, rules: Sequence[Rule]):
    """Yield ``(match, successor)`` for every instance of every rule, unnormalized."""
    for r in rules:
        for w in r.matcher(s):
            yield r.match_of(w), r.transformer(s, w)


@dataclass
class Successor:
    """Aggregated rates towards one normalized successor."""

    rates: Dict[str, float]
    total: float
    count: int


def successor_distribution(s: System, rules: Sequence[Rule]) -> Dict[System, Successor]:
    """Cumulative rates per normalized successor of a normalized ``s``.

    Rates of all instances reaching the same normal form are summed per
    edge label (transition tag for firings, rule name otherwise).  The
    mapping preserves first-discovery order.
    """
    buckets: Dict[System, Dict[str, List[float]]] = {}
    for m, t in successors(s, rules):
        per_label = buckets.setdefault(normalize(t), {})
        per_label.setdefault(m.label, []).append(m.rate)
    out: Dict[System, Successor] = {}
    for target, per_label in buckets.items():
        rates = {lab: math.fsum(rs) for lab, rs in per_label.items()}
        out[target] = Successor(
            rates,
            math.fsum(r for rs in per_label.values() for r in rs),
            sum(len(rs) for rs in per_label.values()),
        )
    return out
