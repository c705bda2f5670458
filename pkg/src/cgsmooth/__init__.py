"""Bilateral and guided smoothing filters as graph Laplacians, accelerated by truncated PCG."""

from .errors import (
    BreakdownError,
    DimensionError,
    PsnrUndefinedError,
    SingularDegreeError,
    SizeError,
    SpecificationError,
)
from .signal_core import (
    DEFAULT_CLEAN_SPEC,
    CleanSignalSpec,
    Constant,
    Metrics,
    NoiseSpec,
    Ramp,
    Signal,
    Sine,
    Step,
    add_noise,
    compute_metrics,
    generate_clean,
    read_signal_csv,
    write_signal_csv,
)
from .graph_operators import (
    BandedSymOperator,
    BfParams,
    GfParams,
    apply_inverse_degree,
    apply_laplacian,
    apply_weight,
    bf_build,
    build_operator,
    dense_oracle,
    gf_build,
)
from .iterated_filters import (
    GuidancePolicy,
    IterationLog,
    bf_step,
    gf_step_fast,
    iterate_filter,
    mean_filter,
)
from .cg_accel import CgSchedule, PcgState, pcg_restarted, pcg_truncated

__version__ = "0.1.0"
