"""Concentration functions of weighted sums of i.i.d. variables and their
bounds through symmetric infinitely divisible laws."""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    corollary_logweight_rhs,
    corollary_threshold_rhs,
    optimize_threshold,
    sup_form_identity,
    theorem1_rhs,
)
from .charfn import (
    CharFn,
    QuadratureSpec,
    cf_H,
    cf_weighted_sum,
    esseen_functional,
    symmetrization_envelope,
)
from .concentration import (
    ConcentrationResult,
    concentration_exact_1d,
    concentration_exact_2d,
    concentration_mc,
    rademacher_sum_concentration,
)
from .idiv import (
    CompoundPoissonModel,
    cf_compound_poisson,
    sample_compound_poisson,
    spectral_of_coefficients,
)
from .measures import (
    CoefficientVector,
    FiniteDiscreteMeasure,
    SubMeasureSpec,
    log_factor,
    paper_floor,
    symmetrize,
    tail_mass,
)
from .structure import GeneratorSet, StructureReport, deficit, enumerate_K1, search_generators, theorem_scaling_report
