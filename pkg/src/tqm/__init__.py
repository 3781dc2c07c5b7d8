"""Numerics for unsharp quantum time measurement on positive-energy states."""

__version__ = "0.1.0"

from .representation import (  # noqa: E402
    CoherentLabel,
    EnergyGrid,
    EnergyState,
    Exponential,
    FromFile,
    Gauss,
    Indicator,
    PhysicsParams,
    TimeAmplitude,
    TimeGrid,
    energy_to_time,
    evolve,
    inner_product,
    laplace_amplitude,
    make_energy_state,
    time_to_energy,
)
from .shift import (  # noqa: E402
    ResidualReport,
    coherent_overlap,
    coherent_vector,
    completeness_check,
    coshift,
    coshift_adjoint,
    tail_projector,
)
from .povm import (  # noqa: E402
    DensityProfile,
    Interval,
    ideal_time_density,
    ml_estimate,
    nogo_sweep,
    povm_probability,
    total_variation,
)
from .clock import (  # noqa: E402
    ExponentialClock,
    ImpossibleOutcomeError,
    MeasurementOutcome,
    TabulatedClock,
    TruncatedExponentialClock,
    apply_measurement_operator,
    covariance_check,
    left_eigen_envelope,
    outcome_density,
    pointer_wavefunction,
    posterior_state,
    sharpness_metrics,
)
from .sampling import sample_outcomes  # noqa: E402
from .config import ExperimentConfig  # noqa: E402
