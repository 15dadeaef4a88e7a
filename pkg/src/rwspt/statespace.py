"""Ordinary and quotient state-space construction, lumping verification and exports.

Both builders run a level-synchronous breadth-first search.  States found on
one level are numbered after sorting them by their canonical text, so the
numbering does not depend on how the level was expanded (sequentially or by
a thread pool).
"""

from __future__ import annotations

import csv
import math
import os
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import PartitionMismatchError, StateLimitExceeded
from .net import System
from .netio import serialize_system
from .rewriting import Rule, successor_distribution, successors
from .symmetry import normalize

DEFAULT_LIMIT = 5_000_000


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    label: str
    rate: float


@dataclass
class TransitionSystem:
    """States in BFS order plus labelled, rated edges."""

    states: List[System]
    initial: int
    edges: List[Edge]
    index: Dict[System, int] = field(repr=False)

    @property
    def finals(self) -> frozenset:
        """States with no outgoing edge."""
        sources = {e.source for e in self.edges}
        return frozenset(i for i in range(len(self.states)) if i not in sources)

    def __len__(self) -> int:
        return len(self.states)

    def summary(self) -> str:
        return f"states: {len(self.states)} (final: {len(self.finals)})"


@dataclass
class LumpedCTMC:
    """Generator of the chain over normalized states.

    ``Q`` is a CSR matrix with nonnegative off-diagonal cumulative rates and
    rows summing to zero.  ``edges`` keeps the labelled rates, self-loops
    included, for throughput measures and diagnostics.
    """

    states: List[System]
    Q: sp.csr_matrix
    initial_distribution: np.ndarray
    edges: List[Edge]
    index: Dict[System, int] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def exit_rates(self) -> np.ndarray:
        return -self.Q.diagonal()

    @property
    def absorbing(self) -> np.ndarray:
        return self.exit_rates == 0.0

    def rate(self, i: int, j: int) -> float:
        return float(self.Q[i, j])

    @classmethod
    def from_edges(cls, states: List[System], edges: List[Edge], initial: int, index=None) -> "LumpedCTMC":
        n = len(states)
        acc: Dict[Tuple[int, int], List[float]] = defaultdict(list)
        for e in edges:
            if e.source != e.target:
                acc[(e.source, e.target)].append(e.rate)
        rows, cols, vals = [], [], []
        out = np.zeros(n)
        for (i, j), rs in sorted(acc.items()):
            r = math.fsum(rs)
            rows.append(i)
            cols.append(j)
            vals.append(r)
            out[i] += r
        for i in range(n):
            rows.append(i)
            cols.append(i)
            vals.append(-out[i])
        Q = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        pi0 = np.zeros(n)
        if n:
            pi0[initial] = 1.0
        if index is None:
            index = {s: i for i, s in enumerate(states)}
        return cls(states, Q, pi0, list(edges), index)


def _serial_key(s: System) -> str:
    return serialize_system(s)


def _bfs(
    s0: System,
    expand: Callable[[System], List[Tuple[System, str, float]]],
    limit: int,
    threads: int,
    time_budget: Optional[float],
) -> TransitionSystem:
    states = [s0]
    index = {s0: 0}
    edges: List[Edge] = []
    frontier = [s0]
    deadline = None if time_budget is None else time.monotonic() + time_budget
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None

    def partial(reason: str):
        ts = TransitionSystem(states, 0, edges, index)
        return StateLimitExceeded(f"{reason}; partial graph has {len(states)} states", ts)

    try:
        while frontier:
            if pool is not None:
                expanded = list(pool.map(expand, frontier, chunksize=max(1, len(frontier) // (4 * threads))))
            else:
                expanded = [expand(s) for s in frontier]
            fresh = {}
            for succ in expanded:
                for t, _, _ in succ:
                    if t not in index and t not in fresh:
                        fresh[t] = None
            ordered = sorted(fresh, key=_serial_key) if len(fresh) > 1 else list(fresh)
            for t in ordered:
                index[t] = len(states)
                states.append(t)
            src_base = [index[s] for s in frontier]
            for src, succ in zip(src_base, expanded):
                for t, label, rate in succ:
                    edges.append(Edge(src, index[t], label, rate))
            if len(states) > limit:
                raise partial(f"state limit {limit} exceeded")
            if deadline is not None and time.monotonic() > deadline:
                raise partial(f"time budget of {time_budget} s exhausted")
            frontier = ordered
    finally:
        if pool is not None:
            pool.shutdown()
    return TransitionSystem(states, 0, edges, index)


def build_ordinary(
    s0: System,
    rules: Sequence[Rule],
    limit: int = DEFAULT_LIMIT,
    threads: int = 1,
    time_budget: Optional[float] = None,
) -> TransitionSystem:
    """Reachability graph without symmetry reduction; one edge per rule instance.

    Raises
    ------
    StateLimitExceeded
        When more than ``limit`` states are found or the time budget runs
        out.  The exception's ``partial`` attribute holds the graph so far.
    """

    def expand(s: System):
        return [(t, m.label, m.rate) for m, t in successors(s, rules)]

    return _bfs(s0, expand, limit, threads, time_budget)


def build_quotient(
    s0: System,
    rules: Sequence[Rule],
    limit: int = DEFAULT_LIMIT,
    threads: int = 1,
    time_budget: Optional[float] = None,
) -> Tuple[TransitionSystem, LumpedCTMC]:
    """Graph over normal forms with cumulative rates, and its lumped generator.

    Each (source, target, label) edge carries the summed rate of all rule
    instances with that label leading from the source to the target class.
    """

    def expand(s: System):
        out = []
        for t, succ in successor_distribution(s, rules).items():
            for label, rate in succ.rates.items():
                out.append((t, label, rate))
        return out

    ts = _bfs(normalize(s0), expand, limit, threads, time_budget)
    return ts, LumpedCTMC.from_edges(ts.states, ts.edges, ts.initial, ts.index)


@dataclass(frozen=True)
class Violation:
    """A disagreement between an ordinary state's class rates and the quotient."""

    state: int
    source_class: int
    target_class: int
    ordinary_rate: float
    quotient_rate: float


@dataclass
class LumpingReport:
    violations: List[Violation]
    checked_states: int
    classes: int

    @property
    def ok(self) -> bool:
        return not self.violations


def _close(a: float, b: float, rtol: float) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b))


def verify_lumping(ordinary: TransitionSystem, quotient: LumpedCTMC, rtol: float = 1e-9) -> LumpingReport:
    """Check strong lumpability of the ordinary graph w.r.t. normal forms.

    For every ordinary state, the rates it sends into each other class must
    match the quotient generator row of its own class.

    Raises
    ------
    PartitionMismatchError
        If some ordinary state normalizes to a class absent from the quotient.
    """
    cls = np.empty(len(ordinary.states), dtype=np.int64)
    for i, s in enumerate(ordinary.states):
        c = quotient.index.get(normalize(s))
        if c is None:
            raise PartitionMismatchError(f"ordinary state {i} has no class in the quotient")
        cls[i] = c
    out_rates: List[Dict[int, List[float]]] = [defaultdict(list) for _ in ordinary.states]
    for e in ordinary.edges:
        out_rates[e.source][int(cls[e.target])].append(e.rate)
    Q = quotient.Q
    violations = []
    for i, per_class in enumerate(out_rates):
        c = int(cls[i])
        row = {int(j): float(v) for j, v in zip(Q.indices[Q.indptr[c] : Q.indptr[c + 1]], Q.data[Q.indptr[c] : Q.indptr[c + 1]]) if j != c and v != 0.0}
        mine = {j: math.fsum(rs) for j, rs in per_class.items() if j != c}
        for j in sorted(set(row) | set(mine)):
            a, b = mine.get(j, 0.0), row.get(j, 0.0)
            if not _close(a, b, rtol):
                violations.append(Violation(i, c, j, a, b))
    return LumpingReport(violations, len(ordinary.states), len(set(cls.tolist())))


def aggregate_from_ordinary(ordinary: TransitionSystem, quotient_index: Dict[System, int]) -> Dict[Tuple[int, int], float]:
    """Class-to-class rates recomputed from an ordinary graph.

    Each class takes the rates of its first member in BFS order.  This is the
    two-phase route (build a graph of concrete states, then count the
    instances per pair of classes) against which direct match counting in
    :func:`build_quotient` can be compared.
    """
    seen = set()
    out: Dict[Tuple[int, int], float] = {}
    cls = [quotient_index[normalize(s)] for s in ordinary.states]
    per_src: Dict[int, Dict[int, List[float]]] = defaultdict(lambda: defaultdict(list))
    for e in ordinary.edges:
        per_src[e.source][cls[e.target]].append(e.rate)
    for i, c in enumerate(cls):
        if c in seen:
            continue
        seen.add(c)
        for j, rs in per_src[i].items():
            if j != c:
                out[(c, j)] = math.fsum(rs)
    return out


# -- exports -----------------------------------------------------------------

def token_summary(s: System) -> str:
    """Short marking description used as DOT node label."""
    parts = []
    for p, k in s.marking.items():
        name = ".".join(f"{t}{i}" for t, i in reversed(p.label))
        parts.append(f"{name}={k}")
    return ", ".join(parts) if parts else "empty"


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(ts: TransitionSystem) -> str:
    """DOT digraph with one node per state and one edge per graph edge."""
    lines = ["digraph ts {", "  node [shape=box, fontsize=10];"]
    finals = ts.finals
    for i, s in enumerate(ts.states):
        style = ", peripheries=2" if i in finals else ""
        lines.append(f'  s{i} [label="{i}: {_dot_escape(token_summary(s))}"{style}];')
    for e in ts.edges:
        lines.append(f'  s{e.source} -> s{e.target} [label="{_dot_escape(e.label)}/{e.rate!r}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _open_new(path: Path, force: bool):
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists (use --force to overwrite)")
    return open(path, "w", newline="", encoding="utf-8")


def write_states_csv(ts: TransitionSystem, path: Path, force: bool = False) -> Path:
    finals = ts.finals
    with _open_new(path, force) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "state", "is_final"])
        for i, s in enumerate(ts.states):
            w.writerow([i, serialize_system(s), int(i in finals)])
    return path


def write_edges_csv(ts: TransitionSystem, path: Path, force: bool = False) -> Path:
    with _open_new(path, force) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "label", "rate"])
        for e in ts.edges:
            w.writerow([e.source, e.target, e.label, repr(e.rate)])
    return path


def write_generator_csv(c: LumpedCTMC, path: Path, force: bool = False) -> Path:
    coo = c.Q.tocoo()
    entries = sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))
    with _open_new(path, force) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "rate"])
        for i, j, v in entries:
            if v != 0.0:
                w.writerow([i, j, repr(float(v))])
    return path
