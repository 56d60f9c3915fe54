"""Equilibria of atomic splittable routing games on parallel links.

Two exact-in-the-limit solvers share one finite-precision core:
:func:`solve_players_exp` searches over every player's marginal cost, and
:func:`solve_edges_exp` searches over partitions of players into groups with
a common support.  :mod:`asrg.verify` certifies any flow independently.
"""
from .arith import PrecisionError
from .costfn import CostFunction, DomainError, MalformedCostFunction, SmoothnessError, compute_psi, validate
from .eqmcost import SolveResult, compute_lambda, demand_shift, eqmcost, solve_players_exp
from .graphflow import GraphFlowResult, bin_search_edge, fixup_negative, graphflow, redistrib
from .instance import FlowProfile, Instance, InstanceError, generate, load, load_flow, save, save_flow
from .typeset import (
    TypeSet,
    build_averaged,
    decompose_total_flow,
    enumerate_typesets,
    eqmcost_typed,
    solve_edges_exp,
)
from .verify import EquilibriumReport, best_response, check, marginal, oracle_solve

__version__ = "0.1.0"

__all__ = [
    "CostFunction",
    "DomainError",
    "EquilibriumReport",
    "FlowProfile",
    "GraphFlowResult",
    "Instance",
    "InstanceError",
    "MalformedCostFunction",
    "PrecisionError",
    "SmoothnessError",
    "SolveResult",
    "TypeSet",
    "best_response",
    "bin_search_edge",
    "build_averaged",
    "check",
    "compute_lambda",
    "compute_psi",
    "decompose_total_flow",
    "demand_shift",
    "enumerate_typesets",
    "eqmcost",
    "eqmcost_typed",
    "fixup_negative",
    "generate",
    "graphflow",
    "load",
    "load_flow",
    "marginal",
    "oracle_solve",
    "redistrib",
    "save",
    "save_flow",
    "solve_edges_exp",
    "solve_players_exp",
    "validate",
]
