"""Robust causal bandits on linear structural equation models.

Simulation library and benchmark harness for sequential intervention design
when the causal model drifts adversarially: robust weighted-OLS estimation
with budget-aware confidence ellipsoids, baseline policies, deviation
schedules with strict budget accounting, theoretical bound evaluators, and a
seeded experiment runner with a stable result-file format.
"""

from .deviation import (
    BudgetError,
    DeviationSchedule,
    apply,
    make_early_flip,
    make_zeroing,
    realized_budget,
)
from .estimation import ConfidenceSpec, beta, contains, make_regressor, weight
from .harness import (
    ExperimentConfig,
    RegretCurve,
    Trajectory,
    pseudo_regret,
    read_results,
    run_many,
    run_once,
    write_results,
)
from .policies import (
    LinSemUcbPolicy,
    OraclePolicy,
    RobustLcbPolicy,
    VanillaUcbPolicy,
    build_policy,
)
from .sem import (
    Dag,
    DagError,
    Intervention,
    NoiseSpec,
    SemInstance,
    WeightMatrix,
    all_arms,
    atomic_arms,
    best_arm,
    compose_weights,
    expected_reward,
    reward_map,
    sample,
    validate,
)
from .theory import (
    BoundParams,
    f_paths,
    lemma3_check,
    lower_bound_curve,
    theorem2_instance,
    upper_bound_curve,
)

__version__ = "0.1.0"
