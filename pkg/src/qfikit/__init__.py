"""Quantum Fisher information and fidelity susceptibility for density matrices of any rank."""

__version__ = "0.1.0"

from .errors import (
    DegenerateSpectrum,
    HermiticityError,
    InvalidState,
    NotApplicable,
    NotPositiveSemidefinite,
    NumericalGuard,
    PositivityViolation,
    QfikitError,
    RankChangeDetected,
    SingularInformation,
    ValidationError,
)
from .hermlin import EigenSystem, HermitianMatrix, eig_hermitian, psd_sqrt
from .states import (
    LinearFamily,
    SpectralData,
    StateFamily,
    UnitaryFamily,
    evaluate,
    spectral_support,
)
from .derivs import DerivativeBundle, derivative_bundle, eigen_derivatives
from .metrology import QFIMResult, SLDMatrix, crb, qfi, qfi_all_paths, qfim, sld
from .fidelity import (
    ExpansionTerms,
    FSReport,
    expansion_terms,
    first_order_scaling_check,
    fs_analytic,
    fs_numeric,
    fs_report,
    uhlmann_fidelity,
)
from .xstate import (
    XStateParams,
    xstate_density,
    xstate_family,
    xstate_qfi_bound,
    xstate_qfi_closed,
    xstate_qfim_closed,
    xstate_spectrum,
)
