import functools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwspt.algebra import replicate
from rwspt.errors import StaleMatchError
from rwspt.models import PLConfig, build_nplsys, degradation_rules
from rwspt.multiset import EMPTY, Bag
from rwspt.net import Net, Place, System, Transition
from rwspt.rewriting import (
    PER_TRANSITION,
    Match,
    Rule,
    apply,
    firing_rule,
    matches,
    successor_distribution,
    successors,
)
from rwspt.statespace import build_ordinary
from rwspt.symmetry import automorphic_equivalent, normalize, random_permutation

S0, W0, W1, A0, F0 = (Place.of(p) for p in [("s", 0), ("w", 0), ("w", 1), ("a", 0), ("f", 0)])
LD = Transition(Bag({S0: 2}), Bag({W0: 1, W1: 1}), EMPTY, "ld", 0.5)
LN = Transition(Bag({W0: 1}), Bag({A0: 1}), Bag({F0: 1}), "ln", 0.1)
SMALL = Net([LD, LN])

CFG = PLConfig(N=2, K=2, M=2)
RULES = degradation_rules(CFG)
FIRING, FAULT, RECONF, DISCONNECT = RULES


def test_firing_matches_examples():
    ms = matches(firing_rule(), System(SMALL, Bag({S0: 2})))
    assert [m.witness for m in ms] == [LD]
    assert ms[0].rate == 0.5 and ms[0].label == "ld" and ms[0].rule == "firing"
    assert matches(firing_rule(), System(SMALL, EMPTY)) == []
    assert firing_rule().rate == PER_TRANSITION


def test_initial_production_system_has_two_loads_and_four_faults():
    s = build_nplsys(CFG)
    loads = matches(FIRING, s)
    assert [m.label for m in loads] == ["ld", "ld"]
    assert len(matches(FAULT, s)) == 4
    assert matches(RECONF, s) == [] and matches(DISCONNECT, s) == []


def test_apply_firing_and_identity_rule():
    s = System(SMALL, Bag({S0: 2}))
    (m,) = matches(firing_rule(), s)
    assert apply(firing_rule(), s, m).marking == Bag({W0: 1, W1: 1})
    ident = Rule("id", 1.0, lambda u: ["x"], lambda u, w: u)
    assert apply(ident, s, matches(ident, s)[0]) == s


def test_stale_match_is_rejected():
    s = System(SMALL, Bag({S0: 2}))
    (m,) = matches(firing_rule(), s)
    with pytest.raises(StaleMatchError):
        apply(firing_rule(), System(SMALL, EMPTY), m)
    with pytest.raises(StaleMatchError):
        apply(FAULT, s, m)  # belongs to another rule
    with pytest.raises(StaleMatchError):
        apply(firing_rule(), s, Match("firing", LN, 0.1, "ln"))


def test_rule_rate_validation():
    with pytest.raises(ValueError):
        Rule("bad", 0.0, lambda s: [], lambda s, w: s)
    with pytest.raises(ValueError):
        Rule("bad", float("nan"), lambda s: [], lambda s, w: s)


def test_successor_distribution_aggregates_match_multiplicity():
    s = normalize(build_nplsys(CFG))
    dist = successor_distribution(s, RULES)
    by_label = {}
    for succ in dist.values():
        for label, rate in succ.rates.items():
            by_label.setdefault(label, []).append(rate)
    assert by_label == {"ld": [1.0], "fault": [0.004]}
    assert all(succ.count in (2, 4) for succ in dist.values())


def test_successor_distribution_of_absorbing_state_is_empty():
    s = System(SMALL, EMPTY)
    assert successor_distribution(s, [firing_rule()]) == {}


def test_two_symmetric_transitions_merge_into_one_successor():
    robot = Net([Transition(Bag({Place.of(("w", 0)): 1}), Bag({Place.of(("a", 0)): 1}), EMPTY, "ln", 0.1)])
    net = replicate(robot, "R", 2)
    w = lambda i: Place.of(("w", 0), ("R", i))  # noqa: E731
    s = normalize(System(net, Bag({w(0): 1, w(1): 1})))
    dist = successor_distribution(s, [firing_rule()])
    # brute force: both unnormalized successors are automorphic
    raw = [t for _, t in successors(s, [firing_rule()])]
    assert len(raw) == 2 and automorphic_equivalent(raw[0], raw[1])
    (succ,) = dist.values()
    assert succ.rates == {"ln": 0.2} and succ.count == 2


@functools.lru_cache(maxsize=None)
def _reachable(cfg, limit=400):
    ts = build_ordinary(build_nplsys(cfg), degradation_rules(cfg), limit=10**6)
    return tuple(ts.states[:limit])


@pytest.mark.parametrize("n", [1, 2])
def test_rate_conservation_on_reachable_states(n):
    cfg = PLConfig(N=n)
    rules = degradation_rules(cfg)
    for s in _reachable(cfg):
        u = normalize(s)
        direct = math.fsum(m.rate for m, _ in successors(u, rules))
        dist = successor_distribution(u, rules)
        assert math.isclose(math.fsum(x.total for x in dist.values()), direct, rel_tol=1e-12)
        assert sum(x.count for x in dist.values()) == sum(1 for _ in successors(u, rules))


def _witness_image(sigma, w):
    if isinstance(w, Transition):
        return sigma.transition(w)
    if isinstance(w, Place):
        return sigma.place(w)
    return tuple(_witness_image(sigma, x) for x in w)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([1, 2]))
def test_parametricity_of_production_rules(seed, n):
    cfg = PLConfig(N=n)
    rules = degradation_rules(cfg)
    states = _reachable(cfg)
    rng = random.Random(seed)
    s = rng.choice(states)
    sigma = random_permutation(s.net, rng)
    u = sigma.system(s)
    for r in rules:
        ms = matches(r, s)
        mu = matches(r, u)
        assert {_witness_image(sigma, m.witness) for m in ms} == {m.witness for m in mu}
        for m in ms:
            image = r.match_of(_witness_image(sigma, m.witness))
            assert image.rate == m.rate
            assert normalize(apply(r, u, image)) == normalize(apply(r, s, m))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32))
def test_equivalent_states_have_identical_successor_distributions(seed):
    cfg = PLConfig(N=2)
    rules = degradation_rules(cfg)
    rng = random.Random(seed)
    s = rng.choice(_reachable(cfg))
    u = random_permutation(s.net, rng).system(s)
    ds, du = successor_distribution(s, rules), successor_distribution(u, rules)
    assert {k: v.rates for k, v in ds.items()} == {k: v.rates for k, v in du.items()}


def test_firing_only_graph_is_subgraph_of_full_graph():
    cfg = PLConfig(N=1)
    s0 = build_nplsys(cfg)
    full = build_ordinary(s0, degradation_rules(cfg))
    only = build_ordinary(s0, [firing_rule()])
    assert set(only.states) <= set(full.states)
    full_edges = {(full.states[e.source], full.states[e.target], e.label) for e in full.edges}
    for e in only.edges:
        assert (only.states[e.source], only.states[e.target], e.label) in full_edges
