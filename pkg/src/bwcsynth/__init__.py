"""Strategy synthesis for weighted games beyond the worst case.

Player-1 strategies are synthesized that guarantee a worst-case threshold
against every adversary while doing well in expectation against a known
stochastic model of it, for the mean-payoff and the shortest path.
"""

from .bwc_mp import (
    CombinedStrategyParams, bwc_mp_decide, calibrate_KL, combined_strategy,
    synthesize_bwc_mp, wec_game,
)
from .bwc_sp import safe_region, synthesize_bwc_sp, unfold
from .ec import classify_ec, maximal_wecs
from .errors import *  # noqa: F401,F403
from .evaluation import (
    exact_expectation, product, simulate, verify_worst_case_mp, verify_worst_case_sp,
)
from .expectation import (
    expected_mp_optimal, expected_ssp_optimal, mc_expected_mp, mc_expected_total_cost,
    mec_decomposition,
)
from .graph import min_cycle_mean
from .model import (
    FiniteMemoryModel, FiniteMemoryStrategy, GameGraph, Measure, Owner, StochasticModel,
    SynthesisQuery, SynthesisResult, apply_model, apply_strategy,
    compose_finite_memory_model, validate_game,
)
from .textformat import (
    parse_game, parse_model, parse_strategy, serialize_game, serialize_model,
    serialize_strategy,
)
from .worstcase import attractor, solve_mp_game, solve_sp_worst_case

__version__ = "0.1.0"
