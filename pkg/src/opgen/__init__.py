"""Signal-idler states of optical parametric generation with non-classical and noisy pumps."""

__version__ = "0.1.0"

from .engine import (OpgParams, TwoModeState, auto_cutoff, gpa_displaced_thermal_correction,  # noqa: E402
                     gpa_phase_sensitive_correction, gpa_state, perturbative_state, validity_report)
from .measures import (EntanglementReport, linear_entropy, negativity, quadrature_variance,  # noqa: E402
                       squeezing_db)
from .oracle import evolve_coherent, evolve_mixture  # noqa: E402
from .pumps import (Coherent, DephasedCoherent, DisplacedThermal, KerrModulated,  # noqa: E402
                    PhaseAveragedCoherent, PhaseSensitiveNoisyCoherent, Thermal, kerr_modulate)

__all__ = [
    "OpgParams", "TwoModeState", "auto_cutoff", "gpa_state", "perturbative_state", "validity_report",
    "gpa_displaced_thermal_correction", "gpa_phase_sensitive_correction",
    "EntanglementReport", "negativity", "linear_entropy", "quadrature_variance", "squeezing_db",
    "evolve_coherent", "evolve_mixture",
    "Coherent", "Thermal", "DisplacedThermal", "PhaseSensitiveNoisyCoherent", "DephasedCoherent",
    "PhaseAveragedCoherent", "KerrModulated", "kerr_modulate",
]
