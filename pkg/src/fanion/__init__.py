"""Matrix optimizers built on linear minimization oracles over norm balls,
the low-rank SVD engines computing their updates, and a benchmark harness."""

from .matrices import (
    SvdFactors,
    as_matrix,
    exact_svd,
    frobenius_inner,
    haar_orthogonal,
    random_gaussian,
    random_psd_uniform_spectrum,
)
from .norms import (
    Chebyshev,
    ChebyshevKyFan,
    EntrywiseL1,
    Frobenius,
    FrobeniusKyFan,
    KyFan,
    KyFanDual,
    Nuclear,
    Spectral,
    ball_boundary_samples,
    ky_fan_diag3_closed_form,
    norm_eval,
    parse_norm_kind,
)
from .engines import (
    EngineConfig,
    EngineReport,
    approximation_errors,
    compute_topk,
    newton_schulz_polar,
    power_iteration_topk,
    randomized_svd_topk,
    trlan_topk,
)
from .lmo import (
    Combination,
    Fanion,
    KyFanPrimal,
    LmoSpec,
    Muon,
    Neon,
    Nsgd,
    OptimizerState,
    Schatten,
    SignSgd,
    f_fanion_spec,
    format_lmo_spec,
    init_state,
    lmo_evaluate,
    momentum_direction,
    optimizer_step,
    parse_lmo_spec,
    s_fanion_spec,
    support_value,
)
from .leastsquares import (
    GridCell,
    GridResult,
    LlsProblem,
    RunConfig,
    RunTrace,
    grid_search,
    lls_grad,
    lls_loss,
    lls_make,
    run_optimizer,
)
from .benchmarks import BenchRow, svd_engine_benchmark
from .reports import emit_report, load_grid_result, load_matrix_csv, save_matrix_csv

__version__ = "0.1.0"
