"""Crossing probabilities and conductivity of the full-density mirrors model.

The package simulates deterministic lattice trajectories through quenched
random mirrors on a d-dimensional slab, estimates crossing statistics against
an exact non-backtracking baseline and an exhaustive small-system oracle, and
iterates the scale-doubling conductivity recursion to its limit.
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    BoundaryClass,
    PhasePoint,
    SlabGeometry,
    Velocity,
    canonical_entry,
    classify,
    reverse_boundary,
)
from .disorder import (  # noqa: F401
    DisorderField,
    MirrorMatching,
    all_matchings,
    count_matchings,
    field_at,
    sample_matching,
    scatter,
)
from .dynamics import (  # noqa: F401
    ExitRecord,
    run_pair_to_exit,
    run_to_exit,
    run_with_interface_trace,
    step,
)
from .markov import (  # noqa: F401
    MarkovScaleState,
    chat0,
    chat_double,
    exact_crossing,
    kappa_hat0,
    simulate_nb_walk,
)
from .estimators import (  # noqa: F401
    CrossingEstimate,
    EnumerationBudgetError,
    ExactResult,
    JointExitStats,
    KernelHistogram,
    OverlapEstimate,
    PassageTable,
    R2Estimate,
    enumerate_exact,
    estimate_backscatter_overlap,
    estimate_closure_correlator,
    estimate_crossing,
    estimate_kernel,
    estimate_passage_table,
    estimate_r2_proxy,
)
from .multiscale import (  # noqa: F401
    ScaleReport,
    alpha_from_overlap,
    build_scale_sweep,
    c_from_kappa,
    iterate_kappa,
    kappa_from_c,
    kappa_next,
    measured_delta,
    predicted_delta,
)
