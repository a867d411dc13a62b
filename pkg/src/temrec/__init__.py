"""Time encoding of correlated bandlimited signals and low-rank recovery."""

from .fourier_model import (
    ChannelSignal,
    CoefficientMatrix,
    ModelConsistencyError,
    PeriodicExpBasis,
    SignalEnsemble,
    SincBasis,
    dense_grid,
    random_ensemble,
)
from .recon_known import (
    FeasibilityReport,
    MeasurementSystem,
    Mode,
    RankOneMeasurement,
    SolveDiagnostics,
    SolveResult,
    assemble_system,
    cumulative_measurements,
    feasibility,
    recover_Cy,
    solve,
)
from .scene import (
    SceneSpec,
    SensorGrid,
    VideoPatch,
    gram_check,
    interpolate_patch,
    mixing_from_grid_1d,
    mixing_from_grid_2d,
    random_scene,
    scene_ensemble,
    scene_eval,
    temporal_slices,
    uniform_grid,
)
from .svp import (
    SensingOperator,
    SvpConfig,
    SvpResult,
    adjoint_sensing,
    apply_sensing,
    sensing_from_trains,
    svp_recover,
    top_j_svd,
    truncate_rank,
)
from .tem import (
    SpikeTrain,
    TemParams,
    encode,
    inter_spike_integral,
    max_gap_bound,
    read_spikes_csv,
    single_channel_bandwidth_limit,
    write_spikes_csv,
)

__version__ = "0.1.0"
