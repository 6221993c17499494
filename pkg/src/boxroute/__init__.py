"""boxroute: branch-and-cut for vehicle routing with 3D loading constraints."""

from .engine import BnCConfig, compute_kmin, solve
from .exact import LoadCheckOutcome, exact_check
from .instance import (
    CustomerRecord,
    Instance,
    ItemSpec,
    VehicleSpec,
    parse_benchmark,
    parse_canonical,
    write_canonical,
)
from .loading import (
    Container,
    LoadingVariant,
    Packing,
    Placement,
    overlaps,
    support_ratio_of,
    validate_packing,
)
from .packer import HeuristicConfig, constructive_pack, metaheuristic_pack
from .report import SolutionReport, validate_solution, variant_from_label, write_solution

__version__ = "0.1.0"

__all__ = [
    "BnCConfig",
    "Container",
    "CustomerRecord",
    "HeuristicConfig",
    "Instance",
    "ItemSpec",
    "LoadCheckOutcome",
    "LoadingVariant",
    "Packing",
    "Placement",
    "SolutionReport",
    "VehicleSpec",
    "compute_kmin",
    "constructive_pack",
    "exact_check",
    "metaheuristic_pack",
    "overlaps",
    "parse_benchmark",
    "parse_canonical",
    "solve",
    "support_ratio_of",
    "validate_packing",
    "validate_solution",
    "variant_from_label",
    "write_canonical",
    "write_solution",
]
