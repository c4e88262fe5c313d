"""Phase-modulated free-electron momentum states: simulation, tomographic
reconstruction (SQUIRRELS) and quantum-state analysis."""

from .analysis import (
    OMEGA,
    OPTICAL_PERIOD,
    PulseMetrics,
    WignerGrid,
    density_period,
    pulse_metrics,
    state_distance,
    temporal_density,
    wigner_from_density,
)
from .benchmark import NoiseBenchmarkConfig, benchmark_noise
from .forward import (
    DispersionParams,
    Spectrogram,
    add_poisson_noise,
    apply_dispersion,
    chi_from_geometry,
    measurement_window,
    modulate,
    phase_jitter_ensemble,
    simulate_spectrogram,
    two_color_amplitudes,
)
from .ladder import (
    Coupling,
    DensityMatrix,
    SidebandState,
    SidebandWindow,
    apply_unitary,
    bessel_j,
    coupling_unitary,
    minimal_halfwidth,
    pad_window,
)
from .preprocess import SidebandExtraction, extract_sidebands
from .rabbitt import RabbittResult, rabbitt_retrieve
from .reconstruction import (
    ForwardOperator,
    ReconstructionConfig,
    ReconstructionReport,
    assemble_forward_operator,
    fit_g_single_color,
    fit_pure_two_color,
    select_alpha_discrepancy,
    solve_tikhonov_psd,
    squirrels_reconstruct,
)

__version__ = "0.1.0"
