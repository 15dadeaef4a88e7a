"""Modular rewritable stochastic Petri nets.

Build nets with hierarchically labeled places, explore their state spaces
modulo label symmetries, and analyse the resulting lumped Markov chains.
"""

from .multiset import Bag
from .net import Net, Place, System, Transition, enabled, enabled_transitions, fire, places
from .netio import NetDocument, parse_net, serialize_document, serialize_system
from .algebra import juxtapose, prefix_label, replicate
from .symmetry import (
    IndexPermutation,
    PermutableGroup,
    automorphic_equivalent,
    check_symmetric_labeling,
    normalize,
    permutable_groups,
)
from .rewriting import Match, Rule, apply, firing_rule, matches, successor_distribution
from .statespace import LumpedCTMC, TransitionSystem, build_ordinary, build_quotient, export_dot, verify_lumping
from .ctmc import reliability, throughput, transient
from .models import PLConfig, build_nplsys, degradation_rules

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
