"""
Reference laws: the catalog of centered targets, the g* calculus and
Pearson moment recursions.
"""

from .pearson import PearsonParams, pearson_moment, pearson_gz_stats, gstar_polynomial_moments
from .catalog import (
    LAW_NAMES,
    ReferenceLaw,
    Support,
    catalog,
    export_law_csv,
    law_from_record,
    law_to_record,
)
from .calculus import (
    check_assumptions,
    check_growth,
    density_from_gstar,
    gstar_from_density,
    gstar_two_sided,
)

__all__ = [
    "LAW_NAMES",
    "PearsonParams",
    "ReferenceLaw",
    "Support",
    "catalog",
    "check_assumptions",
    "check_growth",
    "density_from_gstar",
    "export_law_csv",
    "gstar_from_density",
    "gstar_polynomial_moments",
    "gstar_two_sided",
    "law_from_record",
    "law_to_record",
    "pearson_gz_stats",
    "pearson_moment",
]
