"""Multi-stage scenario optimization toolkit.

Plan sample sizes from support-rank bounds, solve the sampled programs with a
deterministic lexicographic LP solver, discard constraints ex post, and
validate violation probabilities by Monte Carlo.
"""

from .bounds import (
    SampleSizePlan,
    StagePlan,
    chernoff_sample_size,
    discard_posterior_confidence,
    explicit_sample_size_with_discarding,
    implicit_sample_size,
    implicit_sample_size_with_discarding,
    max_discardable,
    plan_multistage,
    refined_sample_size,
    split_confidence,
)
from .probkernel import (
    binomial_cdf,
    log_binomial_coefficient,
    regularized_incomplete_beta,
)
from .program import (
    ChoiceSampler,
    CuboidCoordinateGenerator,
    LinearRowsGenerator,
    MultiSample,
    NormalSampler,
    ProductSampler,
    ScenarioProgram,
    Solution,
    StageSpec,
    UniformSampler,
    program_from_json,
    solution_to_json,
)
from .scenario_core import (
    draw_multisample,
    essential_sets_bruteforce,
    sampling_lemma_check,
    solve,
    support_rank_linear,
    support_rank_quadratic,
    support_set,
)

__version__ = "0.1.0"
