"""Deduction-chain proof search and countermodel extraction over hereditarily finite sets."""

__version__ = "0.1.0"

from .hfset import HFSet, Structure, make, nat, v_stage, mostowski, extensional_witness  # noqa: E402
from .formula import Formula, negate, substitute, classify, height  # noqa: E402
from .parser import parse, render  # noqa: E402
from .semantics import SeedConfig, eval_formula, find_submodel, truth_in_sequent  # noqa: E402
from .deduction import decide, expand, guided_branch, root_label, step  # noqa: E402

__all__ = [
    "HFSet", "Structure", "make", "nat", "v_stage", "mostowski", "extensional_witness",
    "Formula", "negate", "substitute", "classify", "height",
    "parse", "render",
    "SeedConfig", "eval_formula", "find_submodel", "truth_in_sequent",
    "decide", "expand", "guided_branch", "root_label", "step",
]
