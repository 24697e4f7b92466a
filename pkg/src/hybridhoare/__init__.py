"""Hoare-style reasoning and simulation for hybrid gene regulatory networks."""
from .dynamics import HybridState, check_triple_sampled, simulate
from .logic import HoareTriple, PathAtom, Property, eval_property
from .model import GRN, Multiplex, Variable
from .simplify import equivalent_sampled, propagate_equalities, simplify
from .solve import export_smt, sample_models
from .textio import parse_network, parse_triple, render_formula
from .wp import close_cycle, wp_atom, wp_path

__all__ = [
    "GRN", "Multiplex", "Variable", "HybridState", "HoareTriple", "PathAtom", "Property",
    "check_triple_sampled", "close_cycle", "equivalent_sampled", "eval_property", "export_smt",
    "parse_network", "parse_triple", "propagate_equalities", "render_formula", "sample_models",
    "simplify", "simulate", "wp_atom", "wp_path",
]
