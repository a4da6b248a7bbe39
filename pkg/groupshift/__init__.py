from groupshift.chart import Chart, Cocycle, embed, snake_chart
from groupshift.config import Budget
from groupshift.entropy import EntropyTrace, SubsetFamily, estimate, exact_z, strip_lower_bound
from groupshift.exceptions import GroupShiftError, NonConvergence, ResourceLimit, SpecError
from groupshift.group import Element, GroupSpec, ball, canonicalize, free_abelian_group, multiply
from groupshift.pattern import Alphabet, Pattern, Support, make_pattern, support
from groupshift.reduction import ExactTiling, FactorMapSpec, core, overlay_sft
from groupshift.sft import SftSpec, TileSet, count_locally_admissible, create_sft, locally_admissible

__version__ = "0.1.0"

__all__ = (
    "Alphabet",
    "Budget",
    "Chart",
    "Cocycle",
    "Element",
    "EntropyTrace",
    "ExactTiling",
    "FactorMapSpec",
    "GroupShiftError",
    "GroupSpec",
    "NonConvergence",
    "Pattern",
    "ResourceLimit",
    "SftSpec",
    "SpecError",
    "SubsetFamily",
    "Support",
    "TileSet",
    "ball",
    "canonicalize",
    "core",
    "count_locally_admissible",
    "create_sft",
    "embed",
    "estimate",
    "exact_z",
    "free_abelian_group",
    "locally_admissible",
    "make_pattern",
    "multiply",
    "overlay_sft",
    "snake_chart",
    "strip_lower_bound",
    "support",
)
