"""Batch evaluation engine for exemplar-based clustering.

Scores many candidate subsets of a dataset at once, the workload shape
that greedy submodular optimizers produce, with a reference backend, a
host-parallel backend and a tiled backend that emulates a device
execution model (work matrix, staged tiles, coalesced packing, chunking).
"""

__version__ = "0.1.0"

from .bench import (
    BenchRecord,
    compute_speedup,
    generate_problem,
    linear_fit_r2,
    read_csv,
    run_benchmark,
    write_csv,
)
from .core import (
    DeviceLimits,
    EvaluationBatch,
    GroundSet,
    KernelConfig,
    PackedBatch,
    Precision,
    build_ground_set,
    compute_kernel_config,
    count_transactions,
    pack_batch,
    packed_address,
)
from .errors import (
    BudgetExceedsGroundSetError,
    DimensionMismatchError,
    EmptyEvaluationSetError,
    EmptyGroundSetError,
    ExemError,
    IncomparableRecordsError,
    InstanceTooLargeError,
    InvalidDataError,
    OutOfMemoryError,
    SharedMemoryOverflowError,
)
from .evaluate import (
    ChunkPlan,
    Evaluator,
    estimate_set_memory,
    evaluate_batch,
    evaluate_chunked,
    evaluate_single,
    plan_chunks,
    tiled_evaluate,
)
from .io import (
    load_ground_set,
    read_csv_observations,
    read_ground_file,
    write_ground_file,
)
from .objective import (
    SQUARED_EUCLIDEAN,
    Dissimilarity,
    exemplar_value,
    kmedoids_loss,
    marginal_gain,
    min_distances,
    point_loss,
    squared_euclidean,
)
from .optimize import (
    OptimizationResult,
    assign_clusters,
    brute_force_optimum,
    greedy_maximize,
)
