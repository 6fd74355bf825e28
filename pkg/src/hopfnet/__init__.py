"""Criticality analysis for networks of coupled Andronov-Hopf oscillators."""

from .errors import HopfNetError
from .network import BulkSpec, CouplingMatrix, build_spectral, build_wigner_deflated, validate_coupling
from .spectral import GammaSet, Spectrum, eigendecompose, gamma_set
from .lyapunov import (
    BifurcationReport,
    Criticality,
    HopfDerivs,
    classify_analytic,
    gamma_threshold,
    l1_full,
    l1_general,
    l1_subunit,
)
from .dynamics import (
    DynamicsSettings,
    OscillatorNetwork,
    Outcome,
    Protocol,
    StateVector,
    amplitude_sweep,
    classify_numeric,
    integrate,
    rhs,
    steady_amplitude,
)

__version__ = "0.1.0"
