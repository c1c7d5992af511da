"""Fractional power scales, Kato-operator diagnostics and reaction-diffusion stability in finite dimension."""

from .forms import (
    HilbertMetric,
    NotAccretiveError,
    OperatorMatrix,
    PositiveTypeOperator,
    SesquilinearForm,
    SpectrumError,
    adjoint_operator,
    associated_operator,
    form_constants,
    symmetrized_form,
)
from .fracpow import fractional_power, imaginary_power_norm, j_isometry, scale_norm
from .kato import akato_constants, kato_battery, quasi_symmetry, verify_constant_relation
from .semigroup import BlowUpError, MildProblem, Trajectory, decay_fit, semigroup_apply, solve_mild

__version__ = "0.1.0"
