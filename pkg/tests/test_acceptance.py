"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines are printed even when
output capture is on) or ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import contextlib
import functools
import math
import random
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg

sys.path.insert(0, str(Path(__file__).parent))

from oracles import enabled_by_formula, fire_by_formula, orbit_size, random_bag, random_net  # noqa: E402
from rwspt.ctmc import reliability, time_grid, transient  # noqa: E402
from rwspt.models import PLConfig, build_nplsys, degradation_rules  # noqa: E402
from rwspt.net import System, enabled, fire  # noqa: E402
from rwspt.rewriting import successor_distribution  # noqa: E402
from rwspt.statespace import Edge, LumpedCTMC, build_ordinary, build_quotient, verify_lumping  # noqa: E402
from rwspt.symmetry import normalize  # noqa: E402

# counts reported for the original model: (ordinary, finals), (quotient, finals)
REFERENCE_COUNTS = {1: ((60, 2), (42, 2)), 2: ((779, 4), (295, 2)), 3: (None, (1059, 2))}
CASES_CRITERION_4 = 1000
TRIPLES_CRITERION_5 = 10_000
CHAINS_CRITERION_6 = 100


def report(number: int, ok: bool, detail: str, capsys=None) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ctx = capsys.disabled() if capsys is not None else contextlib.nullcontext()
    with ctx:
        print(("\n" if capsys is not None else "") + line)


def model(n: int):
    cfg = PLConfig(N=n, K=2, M=2)
    return build_nplsys(cfg), degradation_rules(cfg)


@functools.lru_cache(maxsize=None)
def ordinary(n: int):
    t = time.perf_counter()
    ts = build_ordinary(*model(n))
    return ts, time.perf_counter() - t


@functools.lru_cache(maxsize=None)
def quotient(n: int):
    t = time.perf_counter()
    ts, chain = build_quotient(*model(n))
    return ts, chain, time.perf_counter() - t


# -- criterion 1 -----------------------------------------------------------------


def criterion_1():
    parts, ok = [], True
    for n in (1, 2):
        t = time.perf_counter()
        ts, _ = ordinary(n)
        _, chain, _ = quotient(n)
        rep = verify_lumping(ts, chain, rtol=1e-9)
        elapsed = time.perf_counter() - t
        ok &= rep.ok and elapsed < 60
        parts.append(f"N={n}: {len(rep.violations)} violations over {rep.checked_states} states, {elapsed:.1f}s")
    return ok, "lumping verified; " + "; ".join(parts)


# -- criterion 2 -----------------------------------------------------------------


def criterion_2():
    got, exact = [], True
    for n, (ref_ord, ref_q) in REFERENCE_COUNTS.items():
        q, _, _ = quotient(n)
        gq = (len(q), len(q.finals))
        exact &= gq == ref_q
        text = f"N={n} quotient {gq[0]}({gq[1]}) vs {ref_q[0]}({ref_q[1]})"
        if ref_ord is not None:
            o, _ = ordinary(n)
            go = (len(o), len(o.finals))
            exact &= go == ref_ord
            text = f"N={n} ordinary {go[0]}({go[1]}) vs {ref_ord[0]}({ref_ord[1]}), " + text.split(" ", 1)[1]
        got.append(text)
    finals = {n: len(quotient(n)[0].finals) for n in (1, 2, 3, 4)}
    c1, _ = criterion_1()
    c3, _ = criterion_3()
    deviation_ok = c1 and c3 and all(v == 2 for v in finals.values())
    if exact:
        return True, "exact counts; " + "; ".join(got)
    finals_text = ", ".join(f"N={n}: {v}" for n, v in finals.items())
    return deviation_ok, (
        "exact counts NOT reproduced (documented deviation of the reconstructed model); "
        + "; ".join(got)
        + f"; fallback conditions: criterion 1 {'holds' if c1 else 'fails'}, criterion 3 "
        + f"{'holds' if c3 else 'fails'}, quotient finals {finals_text}"
    )


# -- criterion 3 -----------------------------------------------------------------


def criterion_3():
    s0, rules = model(2)
    dist = successor_distribution(normalize(s0), rules)
    rates = sorted((lab, r) for succ in dist.values() for lab, r in succ.rates.items())
    ok = rates == [("fault", 0.004), ("ld", 1.0)] and 4 * 0.001 == 0.004 and 2 * 0.5 == 1.0
    return ok, f"initial quotient edges {rates} (expected ld 1.0, fault 0.004, exact equality)"


# -- criterion 4 -----------------------------------------------------------------


def criterion_4(cases: int = CASES_CRITERION_4):
    from test_symmetry import _case, check_normal_form_properties

    failures, brute = [], 0
    for seed in range(cases):
        _, s = _case(seed)
        brute += orbit_size(s.net) <= 4000
        try:
            check_normal_form_properties(seed, n_perms=100, brute=True)
        except AssertionError as exc:  # pragma: no cover - reported below
            failures.append((seed, str(exc)[:80]))
    ok = not failures and brute == cases
    return ok, (
        f"{cases} generated cases (<=3 levels, groups <=4), {brute} brute-forced, "
        f"{len(failures)} failures" + (f"; first: {failures[0]}" if failures else "")
    )


# -- criterion 5 -----------------------------------------------------------------


def criterion_5(triples: int = TRIPLES_CRITERION_5):
    rng = random.Random(20240501)
    bad, done = 0, 0
    while done < triples:
        net = random_net(rng, rng.randint(1, 6), rng.randint(1, 5))
        if not net.places:
            continue
        marking = random_bag(rng, sorted(net.places), 5, 4)
        s = System(net, marking)
        t = rng.choice(net.transitions)
        expect = enabled_by_formula(t, marking, net.places)
        got = enabled(t, s)
        if got != expect:
            bad += 1
        elif got:
            after = fire(t, s).marking
            ref = fire_by_formula(t, marking, net.places)
            if {p: after.multiplicity(p) for p in net.places} != ref:
                bad += 1
        done += 1
    return bad == 0, f"{done} random (net, marking, transition) triples, {bad} disagreements"


# -- criterion 6 -----------------------------------------------------------------


def _random_chain(rng: np.random.Generator, n: int) -> LumpedCTMC:
    density = rng.uniform(0.1, 0.7)
    edges = [
        Edge(i, j, "e", float(rng.lognormal(0.0, 1.5)))
        for i in range(n)
        for j in range(n)
        if i != j and rng.random() < density
    ]
    c = LumpedCTMC.from_edges([None] * n, edges, 0, index={})
    c.initial_distribution = rng.dirichlet(np.ones(n))
    return c


def criterion_6(chains: int = CHAINS_CRITERION_6):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(chains):
        c = _random_chain(rng, int(rng.integers(1, 21)))
        times = np.sort(rng.uniform(0, 25, size=5))
        res = transient(c, times)
        Q = c.Q.toarray()
        for t, pi in zip(times, res.distributions):
            ref = c.initial_distribution @ scipy.linalg.expm(Q * t)
            worst = max(worst, float(np.max(np.abs(pi - ref))))
    lam = 0.5
    two = LumpedCTMC.from_edges([None, None], [Edge(0, 1, "go", lam)], 0, index={})
    ts = np.linspace(0, 20, 41)
    closed = max(abs(pi[1] - (1 - math.exp(-lam * t))) for t, pi in zip(ts, transient(two, ts).distributions))
    ok = worst <= 1e-8 and closed <= 1e-10
    return ok, f"max |pi - expm| = {worst:.2e} over {chains} chains (<= 1e-8); closed-form error {closed:.2e} (<= 1e-10)"


# -- criterion 7 -----------------------------------------------------------------


def criterion_7():
    grid = time_grid(0, 5000, 50, geometric=True)
    curves = {n: [v for _, v in reliability(quotient(n)[1], grid)] for n in (1, 2)}
    r1, r2 = curves[1], curves[2]
    starts = r1[0] == 1.0 and r2[0] == 1.0
    monotone = all(all(b <= a for a, b in zip(r, r[1:])) for r in (r1, r2))
    dominates = all(b >= a for a, b in zip(r1, r2))
    i = int(np.searchsorted(grid, 800))
    ok = starts and monotone and dominates
    return ok, (
        f"R(0)=1: {starts}, non-increasing: {monotone}, N=2 >= N=1 on 50 points: {dominates}; "
        f"R(t={grid[i]:.0f}) N=1 {r1[i]:.4f}, N=2 {r2[i]:.4f}"
    )


# -- criterion 8 -----------------------------------------------------------------


def criterion_8():
    q6, _, t6 = quotient(6)
    sizes = []
    smaller = True
    for n in (1, 2, 3):
        o, _ = ordinary(n)
        q = quotient(n)[0]
        smaller &= len(q) < len(o)
        sizes.append(f"N={n} {len(q)} < {len(o)}")
    ok = t6 < 600 and smaller
    return ok, f"N=6 quotient {len(q6)} states in {t6:.1f}s (< 600s); " + ", ".join(sizes)


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
            5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8}


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, detail = CRITERIA[number]()
    report(number, ok, detail, capsys)
    assert ok, detail


if __name__ == "__main__":
    results = {}
    for number, fn in CRITERIA.items():
        ok, detail = fn()
        results[number] = ok
        report(number, ok, detail)
    sys.exit(0 if all(results.values()) else 1)
