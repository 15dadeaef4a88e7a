"""Compositional operators for building nets from components.

``juxtapose`` concatenates nets and fuses places with equal labels,
``prefix_label`` nests a whole net under a new root pair and ``replicate``
combines both to produce indexed copies, optionally sharing some places.
"""

from __future__ import annotations

from typing import Iterable

from .errors import DuplicateTransitionError
from .net import Net, Place


def juxtapose(a: Net, b: Net) -> Net:
    """Transitions of ``a`` followed by those of ``b``.

    Places are identified by label, so equal labels are shared.
    """
    idents = {t.identity for t in a.transitions}
    clash = [t for t in b.transitions if t.identity in idents]
    if clash:
        raise DuplicateTransitionError(f"transition {clash[0]} occurs in both operands")
    return Net(a.transitions + b.transitions)


def juxtapose_all(nets: Iterable[Net]) -> Net:
    out = Net()
    for n in nets:
        out = juxtapose(out, n)
    return out


def prefix_label(n: Net, tag: str, index: int) -> Net:
    """Append ``(tag, index)`` at the root end of every place label."""
    return n.relabel(lambda p: p.prefixed(tag, index))


def replicate(n: Net, tag: str, k: int, shared: Iterable[Place] = ()) -> Net:
    """Juxtapose ``k`` copies of ``n`` indexed ``0..k-1`` under ``tag``.

    Places listed in ``shared`` keep their labels and are fused across copies.

    Raises
    ------
    ValueError
        If ``k < 1`` or a shared place does not occur in ``n``.
    """
    if k < 1:
        raise ValueError("replicate needs k >= 1")
    shared = frozenset(shared)
    unknown = shared - n.places
    if unknown:
        raise ValueError(f"shared place {min(unknown)} does not occur in the net")
    copies = []
    for i in range(k):
        copies.extend(n.relabel(lambda p, i=i: p if p in shared else p.prefixed(tag, i)).transitions)
    return Net(copies)
