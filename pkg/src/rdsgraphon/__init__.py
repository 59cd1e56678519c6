"""
Respondent-driven sampling on graphons: chain sampling, clumped sparse graphs,
cut distances and exact finite-chain oracles.
"""

from ._accel import backend
from .cutnorm import (
    CutResult,
    cut_distance,
    cut_distance_exact,
    cut_distance_heuristic,
    d1_step,
    fractional_check,
)
from .diagnostics import chi2_stationarity, method_agreement, reversibility_check
from .experiments import (
    ConvergenceRecord,
    ExperimentConfig,
    emit_csv,
    emit_svg,
    n_to_N,
    run_dense,
    run_lemma_suite,
    run_theorem1,
)
from .graph import PairCounts, WeightedGraph, bin_index, build_rds_graph, pair_counts, scale, to_step_graphon
from .graphon import (
    BlockGraphon,
    ConstantGraphon,
    FunctionGraphon,
    Graphon,
    K1Certificate,
    ProductGraphon,
    StepGraphon,
    bin_average,
    eval_graphon,
    l1_distance,
    normalize,
    parse_kernel_spec,
    poissonize,
    total_mass,
    verify_k1,
)
from .oracles import (
    FiniteChain,
    PairLaw,
    discretize,
    expected_graph,
    h_graph,
    lemma2_aggregate,
    pair_count_law,
    stein_chen_pair_bound,
    tv_poisson,
)
from .sampler import ChainTrajectory, SamplerMethod, sample_initial, sample_trajectory, sample_transition, sample_transitions

__version__ = "0.1.0"
