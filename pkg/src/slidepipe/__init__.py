"""slidepipe: microscopy-tile segmentation and feature kernels, a
heterogeneous pipeline runtime with FCFS/PATS scheduling, a discrete-event
scheduling simulator, and memory micro-benchmarks."""

__version__ = "0.1.0"

from .bench import BenchReport, bench_atomic_add, bench_random_access, bench_stream
from .features import (
    FeatureVector,
    ObjectRecord,
    StatVector,
    compute_features,
    extract_objects,
    gradient_stats,
    pixel_stats,
    sobel_edge_stats,
)
from .iwpp import (
    IwppStats,
    NonMonotoneRuleError,
    PropagationRule,
    WavefrontQueue,
    distance_transform,
    fill_holes,
    iwpp_run,
    morph_reconstruction,
)
from .labeling import UnionFindForest, area_histogram, area_threshold, connected_components
from .profiles import DeviceProfile, IoModel, default_profile, load_profile, reference_profile, save_profile
from .regular import (
    StainMatrix,
    StructuringElement,
    color_deconvolution,
    default_he_stains,
    disk,
    load_stain_matrix,
    morph_open,
    rgb_to_gray,
    sobel_gradient,
)
from .runtime import PipelineConfig, PipelineResult, run_real
from .scheduling import (
    ScheduleTrace,
    SimulationResult,
    calibrate_alpha,
    schedule_fcfs,
    schedule_pats,
    simulate,
    weak_scaling,
)
from .taskgraph import FEATURE_OPS, OP_KINDS, SEGMENTATION_CHAIN, TaskGraph, build_task_graph
from .tiles import ImageTile, make_synthetic_tile, read_tile, write_tile
