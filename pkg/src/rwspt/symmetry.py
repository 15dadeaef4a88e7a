"""Symmetric labeling checks and normal forms of systems.

Every pair ``(tag, index)`` at some depth of a label, below a common root
suffix (the *context*), belongs to a group of sibling indices.  A net is
symmetrically labeled when, for every such group, swapping any two siblings
is a net automorphism.  Sibling subtrees then occupy contiguous, equally
long runs of the sorted place list, which is what :func:`normalize` relies
on: it sorts those runs bottom-up and so picks the member of the
automorphism class whose marking, read as a sequence of ``(place, count)``
entries in place order, is lexicographically smallest.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import permutations, product
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from .errors import NetMismatchError, NotSymmetricError
from .multiset import Bag
from .net import Label, Net, Place, System, Transition

GroupKey = Tuple[Label, str]

# Stand-in for an empty place in marking vectors.  Comparing entry sequences
# lexicographically ranks a marked place before an unmarked one and smaller
# counts before larger ones; mapping 0 to a value above every multiplicity
# turns that into plain lexicographic order on equally long vectors.
_EMPTY_SLOT = 1 << 64


@dataclass(frozen=True)
class PermutableGroup:
    """Sibling indices under a common context.

    ``level`` counts pairs from the root end, so ``level == len(context)``.
    """

    level: int
    context: Label
    tag: str
    members: frozenset

    @property
    def key(self) -> GroupKey:
        return (self.context, self.tag)


class IndexPermutation:
    """Per-group renaming of indices, identity outside the given groups.

    ``mapping`` sends ``(context, tag)`` to a dict ``old index -> new index``;
    contexts always refer to the labels before renaming.
    """

    __slots__ = ("mapping", "_cache")

    def __init__(self, mapping: Mapping[GroupKey, Mapping[int, int]]):
        self.mapping: Dict[GroupKey, Dict[int, int]] = {
            k: dict(v) for k, v in mapping.items() if any(a != b for a, b in v.items())
        }
        for key, m in self.mapping.items():
            if len(set(m.values())) != len(m):
                raise ValueError(f"index map for group {key} is not injective")
        self._cache: Dict[Place, Place] = {}

    @classmethod
    def swap(cls, group: GroupKey, i: int, j: int) -> "IndexPermutation":
        return cls({group: {i: j, j: i}})

    def is_identity(self) -> bool:
        return not self.mapping

    def place(self, p: Place) -> Place:
        hit = self._cache.get(p)
        if hit is not None:
            return hit
        label = p.label
        n = len(label)
        out = list(label)
        for d in range(n):
            tag, idx = label[n - d - 1]
            m = self.mapping.get((label[n - d:], tag))
            if m is not None and idx in m:
                out[n - d - 1] = (tag, m[idx])
        q = Place(tuple(out)) if out != list(label) else p
        self._cache[p] = q
        return q

    def __call__(self, p: Place) -> Place:
        return self.place(p)

    def bag(self, b: Bag) -> Bag:
        return b.map_elements(self.place) if self.mapping else b

    def transition(self, t: Transition) -> Transition:
        return t.relabel(self.place) if self.mapping else t

    def net(self, n: Net) -> Net:
        return n.relabel(self.place) if self.mapping else n

    def system(self, s: System) -> System:
        if not self.mapping:
            return s
        return System(self.net(s.net), self.bag(s.marking))


def _candidate_groups(places: Sequence[Place]):
    """Group keys with their members and the sorted positions of each subtree."""
    members: Dict[GroupKey, set] = {}
    blocks: Dict[Tuple[GroupKey, int], List[int]] = {}
    for pos, p in enumerate(places):
        label = p.label
        n = len(label)
        for d in range(n):
            tag, idx = label[n - d - 1]
            key = (label[n - d:], tag)
            members.setdefault(key, set()).add(idx)
            blocks.setdefault((key, idx), []).append(pos)
    return members, blocks


def _prefixes(places: Sequence[Place], positions: List[int], depth: int) -> frozenset:
    return frozenset(places[q].label[: len(places[q].label) - depth - 1] for q in positions)


def _group_violation(net: Net, places, key: GroupKey, idxs: List[int], blocks) -> Optional[str]:
    depth = len(key[0])
    first = idxs[0]
    base = _prefixes(places, blocks[(key, first)], depth)
    for j in idxs[1:]:
        if _prefixes(places, blocks[(key, j)], depth) != base:
            return f"siblings {first} and {j} of tag {key[1]!r} have different sub-structure"
        swapped = IndexPermutation.swap(key, first, j).net(net)
        if swapped != net:
            return f"swapping siblings {first} and {j} of tag {key[1]!r} is not an automorphism"
    return None


class NetInfo:
    """Cached symmetry data for one net."""

    def __init__(self, net: Net):
        self.net = net
        self.places: Tuple[Place, ...] = net.sorted_places
        self.position = {p: i for i, p in enumerate(self.places)}
        members, blocks = _candidate_groups(self.places)
        self.groups: Tuple[PermutableGroup, ...] = tuple(
            sorted(
                (PermutableGroup(len(ctx), ctx, tag, frozenset(m)) for (ctx, tag), m in members.items()),
                key=lambda g: (-g.level, g.context[::-1], g.tag),
            )
        )
        self.violation: Optional[str] = None
        self.slices: Dict[PermutableGroup, List[Tuple[int, int]]] = {}
        for g in self.groups:
            idxs = sorted(g.members)
            if len(idxs) > 1 and self.violation is None:
                self.violation = _group_violation(net, self.places, g.key, idxs, blocks)
            spans = []
            for i in idxs:
                pos = blocks[(g.key, i)]
                spans.append((pos[0], pos[-1] + 1))
            self.slices[g] = spans
        #: groups that can actually reorder something, deepest first
        self.sort_order = [g for g in self.groups if len(g.members) > 1]
        compaction = {
            g.key: {i: r for r, i in enumerate(sorted(g.members))}
            for g in self.groups
            if sorted(g.members) != list(range(len(g.members)))
        }
        self.compaction = IndexPermutation(compaction)
        if self.compaction.is_identity():
            self.compact_net = net
            self.compact_places = self.places
        else:
            self.compact_net = self.compaction.net(net)
            self.compact_places = tuple(self.compaction.place(p) for p in self.places)

    @property
    def symmetric(self) -> bool:
        return self.violation is None

    def require_symmetric(self) -> "NetInfo":
        if self.violation is not None:
            raise NotSymmetricError(self.violation)
        return self

    def vector(self, marking: Bag) -> List[int]:
        """Marking over the sorted places, empty places as ``_EMPTY_SLOT``."""
        get = marking.multiplicity
        return [get(p) or _EMPTY_SLOT for p in self.places]


_MEMO: Dict[Net, NetInfo] = {}


def net_info(net: Net) -> NetInfo:
    """Symmetry data of ``net``, memoized (last writer wins under races)."""
    info = _MEMO.get(net)
    if info is None:
        info = NetInfo(net)
        _MEMO[net] = info
    return info


def clear_cache() -> None:
    _MEMO.clear()


def check_symmetric_labeling(n: Net) -> bool:
    """True iff every sibling swap of every group is a net automorphism."""
    return net_info(n).symmetric


def permutable_groups(n: Net) -> frozenset:
    """All groups of ``n`` (singletons included).

    Raises
    ------
    NotSymmetricError
        If ``n`` is not symmetrically labeled.
    """
    return frozenset(net_info(n).require_symmetric().groups)


def _sort_blocks(vec: List[int], spans: List[Tuple[int, int]]) -> None:
    blocks = [vec[a:b] for a, b in spans]
    ranked = sorted(range(len(blocks)), key=blocks.__getitem__)
    if ranked != list(range(len(blocks))):
        vec[spans[0][0] : spans[-1][1]] = [x for r in ranked for x in blocks[r]]


def normalize(s: System, group_order: Optional[Sequence[PermutableGroup]] = None) -> System:
    """Representative of the automorphism class of ``s``.

    Sibling subtrees are sorted bottom-up by their marking vectors, which
    are equally long for symmetric nets, so that the marking read as
    ``(place, count)`` entries becomes lexicographically smallest.  Ties
    keep the current order.  Indices are then renamed to ``0..k-1`` within
    every group.

    ``group_order`` overrides the processing order of the groups; any order
    that handles nested groups before their enclosing ones gives the same
    result.
    """
    info = net_info(s.net).require_symmetric()
    vec = info.vector(s.marking)
    for g in info.sort_order if group_order is None else group_order:
        spans = info.slices[g]
        if len(spans) > 1:
            _sort_blocks(vec, spans)
    marking = Bag._from_sorted((p, k) for p, k in zip(info.compact_places, vec) if k != _EMPTY_SLOT)
    if info.compact_net is s.net and marking == s.marking:
        return s
    return System(info.compact_net, marking)


def order_key(s: System) -> Tuple[int, ...]:
    """Key minimized by :func:`normalize` within an automorphism class.

    Multiplicities over the sorted places, with empty places ranked after
    every positive count.
    """
    return tuple(net_info(s.net).vector(s.marking))


def automorphic_equivalent(s1: System, s2: System) -> bool:
    """True iff the two markings of the same net are related by an automorphism."""
    if s1.net != s2.net:
        raise NetMismatchError("automorphic equivalence needs systems over the same net")
    return normalize(s1) == normalize(s2)


def random_permutation(n: Net, rng: random.Random) -> IndexPermutation:
    """Uniformly random permutation of every group of ``n``."""
    mapping = {}
    for g in sorted(permutable_groups(n), key=lambda g: (g.level, g.context[::-1], g.tag)):
        idxs = sorted(g.members)
        shuffled = idxs[:]
        rng.shuffle(shuffled)
        mapping[g.key] = dict(zip(idxs, shuffled))
    return IndexPermutation(mapping)


def all_permutations(n: Net) -> Iterator[IndexPermutation]:
    """Every combination of per-group permutations (exponential; small nets only)."""
    groups = sorted(permutable_groups(n), key=lambda g: (g.level, g.context[::-1], g.tag))
    choices = []
    for g in groups:
        idxs = sorted(g.members)
        choices.append([(g.key, dict(zip(idxs, perm))) for perm in permutations(idxs)])
    for combo in product(*choices):
        yield IndexPermutation(dict(combo))
