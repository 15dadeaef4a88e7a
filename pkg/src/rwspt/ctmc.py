"""Transient analysis of lumped chains by uniformization.

``pi(t) = pi(0) exp(Q t)`` is computed as a Poisson mixture of powers of the
uniformized matrix ``P = I + Q / Lambda`` with ``Lambda = 1.02 max |Q_ii|``.
Successive time points are reached from the previous one, so a curve costs
about as much as its last point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import EmptyChainError
from .statespace import LumpedCTMC

DEFAULT_EPSILON = 1e-10
UNIFORMIZATION_FACTOR = 1.02


@dataclass
class TransientResult:
    time_points: np.ndarray
    distributions: np.ndarray  # shape (len(time_points), n_states)


def poisson_weights(mean: float, epsilon: float) -> Tuple[int, np.ndarray]:
    """Truncated Poisson(``mean``) probabilities covering mass ``>= 1 - epsilon``.

    Starts at the mode, where the probability is evaluated in log space,
    and grows the window outwards with the two-term recurrences
    ``w[k+1] = w[k] mean / (k+1)`` and ``w[k-1] = w[k] k / mean``, always
    extending towards the larger neighbour.

    Returns ``(left, weights)`` with ``weights[i]`` the probability of
    ``left + i`` events.
    """
    if mean < 0:
        raise ValueError("Poisson mean must be non-negative")
    if mean == 0.0:
        return 0, np.ones(1)
    mode = int(math.floor(mean))
    w_mode = math.exp(mode * math.log(mean) - mean - math.lgamma(mode + 1))
    left_w, right_w = [], []
    lo, hi = mode, mode
    w_lo, w_hi = w_mode, w_mode
    total = w_mode
    target = 1.0 - epsilon
    while total < target:
        nxt_hi = w_hi * mean / (hi + 1)
        nxt_lo = w_lo * lo / mean if lo > 0 else 0.0
        if nxt_hi == 0.0 and nxt_lo == 0.0:
            break  # both tails underflowed; no further mass is representable
        if nxt_hi >= nxt_lo:
            hi += 1
            w_hi = nxt_hi
            right_w.append(w_hi)
            total += w_hi
        else:
            lo -= 1
            w_lo = nxt_lo
            left_w.append(w_lo)
            total += w_lo
    weights = np.array(left_w[::-1] + [w_mode] + right_w)
    return lo, weights


def _validate(c: LumpedCTMC, times: Sequence[float], epsilon: float) -> np.ndarray:
    if c.n == 0:
        raise EmptyChainError("the chain has no states")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    ts = np.asarray(list(times), dtype=float)
    if ts.size and (np.any(ts < 0) or np.any(np.diff(ts) < 0) or not np.all(np.isfinite(ts))):
        raise ValueError("time points must be finite, non-negative and non-decreasing")
    return ts


def _step(pi: np.ndarray, PT: sp.csr_matrix, lam: float, dt: float, epsilon: float) -> np.ndarray:
    if dt == 0.0 or lam == 0.0:
        return pi.copy()
    left, w = poisson_weights(lam * dt, epsilon)
    w = w / math.fsum(w)  # keeps the result stochastic; error stays within epsilon
    v = pi.copy()
    for _ in range(left):
        v = PT @ v
    acc = w[0] * v
    for k in range(1, len(w)):
        v = PT @ v
        acc += w[k] * v
    return acc


def transient(c: LumpedCTMC, times: Sequence[float], epsilon: float = DEFAULT_EPSILON) -> TransientResult:
    """State distributions at the given non-decreasing time points."""
    ts = _validate(c, times, epsilon)
    exit_max = float(np.max(c.exit_rates)) if c.n else 0.0
    lam = UNIFORMIZATION_FACTOR * exit_max
    n = c.n
    if lam > 0:
        P = sp.identity(n, format="csr") + c.Q / lam
        PT = sp.csr_matrix(P.T)
    else:
        PT = sp.identity(n, format="csr")
    out = np.empty((len(ts), n))
    pi = np.asarray(c.initial_distribution, dtype=float).copy()
    prev = 0.0
    for k, t in enumerate(ts):
        pi = _step(pi, PT, lam, t - prev, epsilon)
        np.clip(pi, 0.0, 1.0, out=pi)
        out[k] = pi
        prev = t
    return TransientResult(ts, out)


def reliability(c: LumpedCTMC, times: Sequence[float], epsilon: float = DEFAULT_EPSILON) -> List[Tuple[float, float]]:
    """``1 -`` probability mass in absorbing states (rows with zero exit rate)."""
    res = transient(c, times, epsilon)
    absorbing = c.absorbing
    vals = 1.0 - res.distributions[:, absorbing].sum(axis=1)
    return [(float(t), float(v)) for t, v in zip(res.time_points, vals)]


def activity_rates(c: LumpedCTMC, edge_filter: Callable[[str], bool]) -> np.ndarray:
    """Per-state summed rate of non-loop edges whose label passes ``edge_filter``."""
    r = np.zeros(c.n)
    for e in c.edges:
        if e.source != e.target and edge_filter(e.label):
            r[e.source] += e.rate
    return r


def throughput(
    c: LumpedCTMC,
    edge_filter: Callable[[str], bool],
    times: Sequence[float],
    epsilon: float = DEFAULT_EPSILON,
) -> List[Tuple[float, float]]:
    """Expected instantaneous rate of the activities selected by ``edge_filter``."""
    res = transient(c, times, epsilon)
    r = activity_rates(c, edge_filter)
    vals = res.distributions @ r
    return [(float(t), float(v)) for t, v in zip(res.time_points, vals)]


def time_grid(start: float, end: float, count: int, geometric: bool = False) -> np.ndarray:
    """``count`` points from ``start`` to ``end``; geometric spacing keeps 0 as first point if asked."""
    if count < 1:
        raise ValueError("count must be at least 1")
    if end < start or start < 0:
        raise ValueError("need 0 <= start <= end")
    if count == 1:
        return np.array([float(start)])
    if not geometric:
        return np.linspace(start, end, count)
    if start > 0:
        return np.geomspace(start, end, count)
    # geometric grid starting at 0: 0 followed by count-1 geometric points
    first = end / 10 ** max(1, math.ceil(math.log10(count)) + 2)
    return np.concatenate([[0.0], np.geomspace(first, end, count - 1)])


def write_curve_csv(points: Sequence[Tuple[float, float]], path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value"])
        for t, v in points:
            w.writerow([repr(float(t)), repr(float(v))])
    return path


def write_transient_csv(res: TransientResult, path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"state_{i}" for i in range(res.distributions.shape[1])])
        for t, row in zip(res.time_points, res.distributions):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in row])
    return path
