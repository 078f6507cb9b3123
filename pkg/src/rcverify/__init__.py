"""Deadlock and invariant verification for flat state machines.

A machine is compiled into a reactive program (guarded iteration over its
nodes), simplified by algebraic laws, and reduced to first-order obligations
that are decided by finite enumeration or exported as SMT-LIB.  A bounded
operational oracle cross-checks the results.
"""

from .parser import parse, parse_file, parse_expr, parse_action
from .wellformed import check_wf, views
from .semantics import machine_sem
from .rewriter import simplify, apply_subst, normalize_node
from .oracle import DomainSpec, find_deadlock, failures, equiv
from .verifier import DeadlockFreedom, StateInvariant, verify, decide, gen_obligations

__all__ = [
    "parse", "parse_file", "parse_expr", "parse_action", "check_wf", "views",
    "machine_sem", "simplify", "apply_subst", "normalize_node", "DomainSpec",
    "find_deadlock", "failures", "equiv", "DeadlockFreedom", "StateInvariant",
    "verify", "decide", "gen_obligations",
]

__version__ = "0.1.0"
