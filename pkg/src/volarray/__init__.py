"""Volumetric antenna-array analysis: EDOF, capacity, coupling, beamforming.

Quantifies how three-dimensional (volumetric) array layouts compare with
planar baselines under progressively realistic channel models: isotropic
rich scattering, coupling-aware receive covariances, and a simplified
urban-macro multiuser scenario.
"""

__version__ = "0.1.0"

from .beamform import (
    CutPlane,
    FarFieldPattern,
    array_pattern,
    hpbw,
    sidelobe_level,
    steered_cut_pattern,
    steering_weights,
)
from .channel3gpp import (
    LosModel,
    UmaScenario,
    generate_channel,
    los_probability,
    noise_power,
    pathloss_uma,
    uma_capacity_experiment,
)
from .clarke import (
    DensifyAxis,
    clarke_correlation_closed_form,
    clarke_correlation_monte_carlo,
    planar_family_geometry,
    sweep_linear,
    sweep_planar,
    synthesize_correlated_channels,
)
from .elements import ElementKind, ElementResponse
from .errors import (
    InvalidArgumentError,
    MeasurementError,
    ParseError,
    PassivityWarning,
    SingularMatrixError,
    VolarrayError,
    VolarrayWarning,
)
from .geometry import (
    ApertureStats,
    ArrayGeometry,
    Layout,
    effective_aperture,
    fibonacci_directions,
    make_case1,
    make_case2,
    make_linear_staggered,
    make_planar,
    parse_geometry_text,
    projected_area,
    write_geometry_text,
)
from .io import (
    ScenarioConfig,
    TouchstoneDocument,
    TouchstoneFormat,
    parse_pattern_grid,
    parse_scenario,
    parse_touchstone,
    results_to_csv,
    results_to_json,
    write_pattern_grid,
    write_touchstone,
)
from .kronecker import (
    AngularPowerSpectrum,
    CouplingData,
    EmbeddedPattern,
    ScatteringMatrix,
    analytic_dipole_bank,
    covariance,
    correlation_from_patterns,
    dipole_embedded_pattern,
    efficiency_matrix,
    efficiency_vector,
    embedded_efficiency,
    half_wave_mutual_impedance,
    half_wave_self_impedance,
    impedance_matrix,
    kronecker_sweep,
    pattern_correlation,
    scattering_from_impedance,
)
from .metrics import (
    CapacityReport,
    ChannelEnsemble,
    CorrelationMatrix,
    ModelTag,
    dof_rank,
    edof,
    edof_capacity_approx,
    ergodic_capacity,
    iid_ensemble,
    kronecker_capacity,
)
from .mu_mimo import (
    DropDistribution,
    MultiuserChannel,
    Precoder,
    PrecoderKind,
    UserDrop,
    drop_users,
    mmse_precoder,
    sinr_per_user,
    sum_capacity,
)

__all__ = [name for name in dir() if not name.startswith("_")]
