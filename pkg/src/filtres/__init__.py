"""filtres: reservoir computing with FIR filter banks.

A numpy/scipy library for simulating two reservoir architectures (a
leaky-tanh random network and a time-multiplexed laser delay-line map),
expanding their outputs with low-order Bessel FIR filter banks, training
ridge readouts, and measuring what the filters buy: lower fitting,
prediction, and classification error, higher covariance rank, and more
memory capacity.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateMatrixError,
    DivergenceError,
    FiltresError,
    InsufficientDataError,
    ParameterError,
    ReportShapeError,
    ZeroVarianceError,
)
from .experiments import (
    ClassificationReport,
    ExperimentConfig,
    ExperimentReport,
    run_classification,
    run_fitting,
    run_memory,
    run_prediction,
    run_sweep,
    write_aggregates_csv,
    write_confusion_csv,
    write_long_csv,
    write_memory_profiles_csv,
)
from .filterbank import (
    FilterBank,
    UpdateTimeModel,
    apply_filter,
    assemble_filter_matrix,
    bessel_bank,
    load_bank,
    save_bank,
    update_time_model,
)
from .readout import (
    GramSchmidtBasis,
    MemoryReport,
    RankReport,
    ReadoutModel,
    assemble_state_matrix,
    covariance_rank,
    default_ridge_lambda,
    evaluate_error,
    gram_schmidt_basis,
    load_model,
    memory_capacity,
    save_model,
    train_ridge,
)
from .reservoir import (
    Adjacency,
    LaserReservoirSpec,
    StateMatrix,
    TanhReservoirSpec,
    build_adjacency,
    build_input_weights,
    derive_seed,
    laser_impulse_response,
    normalize_series,
    read_state_matrix_csv,
    run_laser,
    run_leaky_tanh,
    write_state_matrix_csv,
)
from .signals import (
    LorenzParams,
    MultivariateSeries,
    SPROTT_SYSTEMS,
    SprottSystem,
    generate_sprott,
    integrate_lorenz,
    read_series_csv,
    sprott_rhs,
    uniform_noise,
    write_series_csv,
)
