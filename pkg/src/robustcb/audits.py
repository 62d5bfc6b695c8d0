"""Self-checks wired to the ``check`` subcommand: oracle identities,
cross-oracle equivalences, bound audits, budget accounting, determinism,
and the optimism of the closed-form index."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import deviation as dev
from .harness import ExperimentConfig, build_sem, pseudo_regret, run_once
from .policies import build_policy
from .sem import (
    Dag,
    all_arms,
    best_arm,
    compose_weights,
    expected_reward,
    reward_map,
    validate,
)
from .theory import f_paths, lemma3_check, theorem2_instance


@dataclass
class AuditResult:
    name: str
    ok: bool
    detail: str


def random_dag(rng: np.random.Generator, max_nodes: int = 8, max_degree: int | None = None) -> Dag:
    n = int(rng.integers(2, max_nodes + 1))
    parents: list[tuple[int, ...]] = [()]
    for i in range(1, n):
        cap = i if max_degree is None else min(i, max_degree)
        k = int(rng.integers(0, cap + 1))
        ps = tuple(sorted(rng.choice(i, size=k, replace=False).tolist())) if k else ()
        parents.append(ps)
    return validate(Dag(tuple(parents)))


def random_weights(rng: np.random.Generator, dag: Dag):
    from .sem import WeightMatrix

    cols = []
    for i in range(dag.n_nodes):
        k = len(dag.parents[i])
        if k == 0:
            cols.append(np.zeros(0))
            continue
        raw = rng.uniform(-1.0, 1.0, size=k)
        norm = np.linalg.norm(raw)
        scale = rng.uniform(0.1, 1.0)
        cols.append(raw * (scale / norm) if norm > 0 else raw)
    return WeightMatrix(dag, tuple(cols))


def audit_reward_map_oracle(n_graphs: int = 25, seed: int = 7) -> AuditResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_graphs):
        dag = random_dag(rng)
        w = random_weights(rng, dag)
        worst = max(worst, float(np.max(np.abs(reward_map(w) - f_paths(w)))))
    return AuditResult("reward_map_vs_path_enumeration", worst <= 1e-9,
                       f"max abs difference {worst:.3e} over {n_graphs} random DAGs")


def random_lemma3_instance(rng: np.random.Generator, max_d: int = 5, max_l: int = 4):
    """An admissible tuple (A, B, metrics, beta) for the compounding bound."""
    d = int(rng.integers(1, max_d + 1))
    big_l = int(rng.integers(1, max_l + 1))
    dag = random_dag(rng, max_nodes=min(10, big_l * d + 1), max_degree=d)
    b = random_weights(rng, dag)
    beta = float(rng.uniform(0.05, 3.0))
    metrics: list[np.ndarray | None] = [None] * dag.n_nodes
    cols = []
    for i in range(dag.n_nodes):
        k = len(dag.parents[i])
        if k == 0:
            cols.append(np.zeros(0))
            continue
        a_fac = rng.uniform(-1.0, 1.0, size=(k, k))
        m = np.eye(k) + a_fac @ a_fac.T * rng.uniform(0.0, 2.0)
        metrics[i] = m
        direction = rng.standard_normal(k)
        mnorm = np.sqrt(direction @ m @ direction)
        delta = direction * (beta * rng.uniform(0.0, 1.0) / mnorm)
        cols.append(b.cols[i] + delta)
    a = b.with_columns({i: cols[i] for i in range(dag.n_nodes)})
    return a, b, metrics, beta


def audit_lemma3(n_instances: int = 100, seed: int = 11) -> AuditResult:
    rng = np.random.default_rng(seed)
    fails = 0
    for _ in range(n_instances):
        a, b, metrics, beta = random_lemma3_instance(rng)
        _, _, holds = lemma3_check(a, b, metrics, beta)
        fails += 0 if holds else 1
    return AuditResult("compounding_error_bound", fails == 0,
                       f"{fails} violations in {n_instances} random instances")


def audit_theorem2_gaps() -> AuditResult:
    from .sem import Intervention

    worst = 0.0
    for d, big_l in ((1, 1), (3, 2), (4, 2)):
        sem, _ = theorem2_instance(d, big_l)
        r = sem.dag.reward_node
        mu_int = expected_reward(compose_weights(sem, Intervention(1 << r)), sem.nu)
        mu_obs = expected_reward(compose_weights(sem, Intervention(0)), sem.nu)
        worst = max(worst, abs(mu_int - mu_obs - d ** (big_l / 2.0)))
    return AuditResult("hard_instance_gap", worst <= 1e-9,
                       f"max gap error {worst:.3e}")


def audit_oracle_zero() -> AuditResult:
    config = ExperimentConfig(graph="chain", n=4, T=200, algo="oracle", seeds=(0,))
    traj = run_once(config, 0)
    total = float(abs(pseudo_regret(traj)).max())
    return AuditResult("oracle_zero_regret", total == 0.0, f"max |regret| {total:.3e}")


def audit_determinism() -> AuditResult:
    config = ExperimentConfig(graph="chain", n=3, T=150, algo="robust_lcb",
                              solver="pga", C=5.0, measure="ad", schedule="early_flip",
                              seeds=(3,))
    a = run_once(config, 3)
    b = run_once(config, 3)
    same = bool(np.array_equal(a.arm_masks, b.arm_masks)
                and np.array_equal(a.rewards, b.rewards))
    return AuditResult("replay_determinism", same, "identical trajectories on replay")


def audit_budgets() -> AuditResult:
    sem = build_sem(ExperimentConfig(graph="chain", n=4, T=100, algo="oracle"))
    try:
        for measure, c in (("df", 10.0), ("ad", 17.5)):
            sched = dev.make_early_flip(sem, measure, c, 2.0, horizon=100)
            dev.realized_budget(sched)
        dev.realized_budget(dev.make_zeroing(
            theorem2_instance(2, 2)[0], 5, horizon=100))
    except dev.BudgetError as exc:
        return AuditResult("schedule_budgets", False, str(exc))
    return AuditResult("schedule_budgets", True, "all shipped schedules within budget")


def audit_optimism(t_max: int = 300, every: int = 25) -> AuditResult:
    """On a deviation-free run the closed-form index of the best arm must
    upper-bound its true mean at the checked rounds."""
    config = ExperimentConfig(graph="chain", n=3, T=t_max, algo="robust_lcb", seeds=(1,))
    sem = build_sem(config)
    arms = all_arms(sem.dag.n_nodes)
    astar, mu_star = best_arm(sem, arms)
    rng = np.random.default_rng(np.random.SeedSequence([1, 99]))
    policy = build_policy("robust_lcb", sem, arms, t_max, c_budget=1.0)
    schedule = dev.zero_schedule(t_max)
    violations = 0
    for t in range(1, t_max + 1):
        arm = policy.select(t)
        eff = dev.apply(schedule, t, compose_weights(sem, arm))
        from .sem import sample

        x, _ = sample(eff, sem.noise, rng, sem.m_x)
        policy.observe(arm, x, t)
        if t % every == 0 and policy.ucb_index_bonus(astar, t) < mu_star:
            violations += 1
    return AuditResult("index_optimism", violations == 0,
                       f"{violations} optimism violations on audited rounds")


def run_all_audits() -> list[AuditResult]:
    return [
        audit_reward_map_oracle(),
        audit_lemma3(),
        audit_theorem2_gaps(),
        audit_oracle_zero(),
        audit_budgets(),
        audit_determinism(),
        audit_optimism(),
    ]
