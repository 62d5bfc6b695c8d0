"""Seeded bandit episodes, regret accounting, aggregation, and result files.

A run is fully determined by (config, seed): the environment and the policy
draw from separate counter-derived substreams, so adding policy randomness
never shifts the environment, and results are byte-identical regardless of
worker count.  The headline metric is pseudo-regret against the nominal best
arm, where the played arm's mean is evaluated under the round's true
(possibly deviated) model; the fluctuating per-round optimum is logged as a
diagnostic column.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from . import deviation as dev
from .policies import build_policy
from .presets import (
    chain_instance,
    confounded_parallel_instance,
    hierarchical_instance,
    theorem2_preset,
)
from .sem import (
    Intervention,
    SemInstance,
    all_arms,
    atomic_arms,
    best_arm,
    compose_weights,
    expected_reward,
    sample,
)

_ENV_STREAM_TAG = 0xE37
_POLICY_STREAM_TAG = 0x907

RESULT_COLUMNS = [
    "t", "algo", "graph", "n_nodes", "d", "L", "measure", "C",
    "mean_regret", "std_regret", "mean_reward", "n_seeds",
]

ALGOS = ("robust_lcb", "linsem_ucb", "linsem_ucb_robust", "vanilla_ucb", "oracle")
GRAPHS = ("chain", "confounded_parallel", "hierarchical", "theorem2")


class ResultFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    graph: str
    T: int
    algo: str
    n: int | None = None
    layers: tuple[int, ...] | None = None
    d: int | None = None
    L: int | None = None
    solver: str = "bonus"
    arms: str = "all"
    measure: str = "none"
    C: float = 0.0
    m_c: float = 2.0
    schedule: str = "none"
    seeds: tuple[int, ...] = (0,)
    delta: float | None = None
    c0: float = 1.0
    downsample: int = 1
    out: str | None = None
    nu_override: tuple[float, ...] | None = None

    def canonical_text(self) -> str:
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


def build_sem(config: ExperimentConfig) -> SemInstance:
    nu = np.asarray(config.nu_override, dtype=float) if config.nu_override else None
    if config.graph == "chain":
        if config.n is None:
            raise ValueError("chain preset needs n")
        return chain_instance(config.n, nu)
    if config.graph == "confounded_parallel":
        if config.n is None:
            raise ValueError("confounded_parallel preset needs n")
        return confounded_parallel_instance(config.n, nu)
    if config.graph == "hierarchical":
        widths = list(config.layers) if config.layers else None
        if widths is None:
            if config.d is None or config.L is None:
                raise ValueError("hierarchical preset needs layers, or d and L")
            widths = [config.d] * config.L
        return hierarchical_instance(widths, nu)
    if config.graph == "theorem2":
        if config.d is None or config.L is None:
            raise ValueError("theorem2 preset needs d and L")
        return theorem2_preset(config.d, config.L)
    raise ValueError(f"unknown graph preset {config.graph!r}")


def parse_arm_spec(spec: str, n_nodes: int) -> list[Intervention]:
    if spec == "all":
        if n_nodes > 16:
            raise ValueError("full arm enumeration is gated to 16 nodes")
        return all_arms(n_nodes)
    if spec == "atomic":
        return atomic_arms(n_nodes)
    if spec.startswith("list:"):
        arms = []
        for part in spec[5:].split("|"):
            part = part.strip()
            if part in ("", "empty"):
                arms.append(Intervention(0))
            else:
                nodes = [int(x) for x in part.split("-")]
                if any(not 0 <= v < n_nodes for v in nodes):
                    raise ValueError(f"arm {part!r} has node index out of range")
                arms.append(Intervention.from_nodes(nodes))
        if not arms:
            raise ValueError("empty arm list")
        return arms
    raise ValueError(f"unknown arm spec {spec!r}")


def build_schedule(config: ExperimentConfig, sem: SemInstance) -> dev.DeviationSchedule:
    return dev.schedule_from_config(sem, config.schedule, config.measure,
                                    config.C, config.m_c, config.T)


@dataclass
class Trajectory:
    seed: int
    arm_masks: np.ndarray       # played arm per round, as bit masks
    rewards: np.ndarray         # realized reward-node value per round
    inst_regret: np.ndarray     # mu_star - mean of played arm under round model
    fluct_regret: np.ndarray    # diagnostic: per-round optimum minus played mean
    mu_star: float

    def intervention_counts(self, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
        """(N_i, N*_i) per node: rounds not-intervened / intervened."""
        n_star = np.array([
            int(((self.arm_masks >> i) & 1).sum()) for i in range(n_nodes)
        ])
        return len(self.arm_masks) - n_star, n_star


def pseudo_regret(trajectory: Trajectory) -> np.ndarray:
    """Per-round cumulative pseudo-regret (may dip when deviations raise reward)."""
    return np.cumsum(trajectory.inst_regret)


def run_once(config: ExperimentConfig, seed: int) -> Trajectory:
    """One seeded episode of the configured policy against the configured
    adversary.  Deterministic given (config, seed)."""
    sem = build_sem(config)
    arms = parse_arm_spec(config.arms, sem.dag.n_nodes)
    schedule = build_schedule(config, sem)
    dev.realized_budget(schedule)  # refuse to run outside the declared budget

    env_rng = np.random.default_rng(np.random.SeedSequence([_ENV_STREAM_TAG, seed]))
    pol_rng = np.random.default_rng(np.random.SeedSequence([_POLICY_STREAM_TAG, seed]))
    policy = build_policy(
        config.algo, sem, arms, config.T,
        c_budget=max(1.0, config.C), delta=config.delta,
        solver=config.solver, rng=pol_rng,
    )
    _, mu_star = best_arm(sem, arms)

    # distinct effective models per (arm, deviation allowance); deviation
    # phases reuse a handful of allowance values so this cache stays tiny
    weights_cache: dict[tuple[int, float | None], object] = {}
    mean_cache: dict[tuple[int, float | None], float] = {}
    opt_cache: dict[float | None, float] = {}
    k_dev = schedule.n_deviation_rounds
    pattern_reps = _pattern_representatives(sem, arms)

    t_axis = np.arange(1, config.T + 1)
    arm_masks = np.zeros(config.T, dtype=np.int64)
    rewards = np.zeros(config.T)
    inst_regret = np.zeros(config.T)
    fluct_regret = np.zeros(config.T)

    for t in t_axis:
        arm = policy.select(int(t))
        cap = schedule.allowance[t - 1] if t <= k_dev else None
        key = (arm.mask, cap)
        eff = weights_cache.get(key)
        if eff is None:
            eff = dev.apply(schedule, int(t), compose_weights(sem, arm))
            weights_cache[key] = eff
            mean_cache[key] = expected_reward(eff, sem.nu)
        x, _ = sample(eff, sem.noise, env_rng, sem.m_x)
        policy.observe(arm, x, int(t))
        mu_t = mean_cache[key]
        if cap not in opt_cache:
            opt_cache[cap] = max(
                expected_reward(dev.apply(schedule, int(t), compose_weights(sem, rep)), sem.nu)
                for rep in pattern_reps
            )
        i = t - 1
        arm_masks[i] = arm.mask
        rewards[i] = x[sem.dag.reward_node]
        inst_regret[i] = mu_star - mu_t
        fluct_regret[i] = opt_cache[cap] - mu_t
    return Trajectory(seed, arm_masks, rewards, inst_regret, fluct_regret, mu_star)


def _pattern_representatives(sem: SemInstance, arms: Sequence[Intervention]) -> list[Intervention]:
    """One arm per distinct variant pattern (means depend only on the pattern)."""
    seen: dict[int, Intervention] = {}
    parented = sem.dag.parented_nodes
    for a in arms:
        key = 0
        for j, node in enumerate(parented):
            if node in a:
                key |= 1 << j
        seen.setdefault(key, a)
    return list(seen.values())


@dataclass
class RegretCurve:
    """Per-round aggregate over seeds plus the identifying metadata."""

    t: np.ndarray
    mean_regret: np.ndarray
    std_regret: np.ndarray
    mean_reward: np.ndarray
    algo: str
    graph: str
    n_nodes: int
    d: int
    L: int
    measure: str
    C: float
    n_seeds: int
    config_hash: str = field(default="", compare=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RegretCurve):
            return NotImplemented
        meta = ("algo", "graph", "n_nodes", "d", "L", "measure", "C", "n_seeds")
        return all(getattr(self, k) == getattr(other, k) for k in meta) and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("t", "mean_regret", "std_regret", "mean_reward")
        )

    @property
    def final_regret(self) -> float:
        return float(self.mean_regret[-1])


def aggregate(config: ExperimentConfig, trajectories: Sequence[Trajectory]) -> RegretCurve:
    """Seed-order-independent reduction of per-seed cumulative regret."""
    ordered = sorted(trajectories, key=lambda tr: tr.seed)
    cum = np.stack([pseudo_regret(tr) for tr in ordered])
    rew = np.stack([tr.rewards for tr in ordered])
    sem = build_sem(config)
    return RegretCurve(
        t=np.arange(1, config.T + 1),
        mean_regret=cum.mean(axis=0),
        std_regret=cum.std(axis=0),
        mean_reward=rew.mean(axis=0),
        algo=config.algo,
        graph=config.graph,
        n_nodes=sem.dag.n_nodes,
        d=sem.dag.max_in_degree,
        L=sem.dag.longest_path,
        measure=config.measure if config.schedule != "none" and config.C > 0 else "none",
        C=float(config.C),
        n_seeds=len(ordered),
        config_hash=config.config_hash(),
    )


def run_many(config: ExperimentConfig, workers: int = 1) -> RegretCurve:
    """All configured seeds, optionally across processes; the aggregate is
    independent of execution order and worker count."""
    if not config.seeds:
        raise ValueError("at least one seed required")
    if len(set(config.seeds)) != len(config.seeds):
        raise ValueError("seeds must be distinct")
    if workers <= 1 or len(config.seeds) == 1:
        trajectories = [run_once(config, s) for s in config.seeds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajectories = list(pool.map(run_once, [config] * len(config.seeds), config.seeds))
    return aggregate(config, trajectories)


# ---------------------------------------------------------------------------
# result files: delimited text, 17-significant-digit floats for exact
# round-trips
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _downsample_rows(n: int, k: int) -> np.ndarray:
    idx = np.arange(0, n, k)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    return idx


def write_results(curve: RegretCurve, path: str, downsample: int = 1) -> None:
    rows = _downsample_rows(len(curve.t), max(1, downsample))
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(RESULT_COLUMNS) + "\n")
        for i in rows:
            fh.write(",".join([
                str(int(curve.t[i])), curve.algo, curve.graph, str(curve.n_nodes),
                str(curve.d), str(curve.L), curve.measure, _fmt(curve.C),
                _fmt(curve.mean_regret[i]), _fmt(curve.std_regret[i]),
                _fmt(curve.mean_reward[i]), str(curve.n_seeds),
            ]) + "\n")


def read_results(path: str) -> RegretCurve:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        cols = header.split(",") if header else []
        for want in RESULT_COLUMNS:
            if want not in cols:
                raise ResultFormatError(f"{path}:1: missing column {want!r}")
        if cols != RESULT_COLUMNS:
            raise ResultFormatError(f"{path}:1: unexpected column order {cols}")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(RESULT_COLUMNS):
                raise ResultFormatError(f"{path}:{lineno}: expected "
                                        f"{len(RESULT_COLUMNS)} fields, got {len(parts)}")
            try:
                rows.append((
                    int(parts[0]), parts[1], parts[2], int(parts[3]), int(parts[4]),
                    int(parts[5]), parts[6], float(parts[7]), float(parts[8]),
                    float(parts[9]), float(parts[10]), int(parts[11]),
                ))
            except ValueError as exc:
                raise ResultFormatError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ResultFormatError(f"{path}: no data rows")
    first = rows[0]
    return RegretCurve(
        t=np.array([r[0] for r in rows], dtype=np.int64),
        mean_regret=np.array([r[8] for r in rows]),
        std_regret=np.array([r[9] for r in rows]),
        mean_reward=np.array([r[10] for r in rows]),
        algo=first[1], graph=first[2], n_nodes=first[3], d=first[4], L=first[5],
        measure=first[6], C=first[7], n_seeds=first[11],
    )


def sweep_grid(config: ExperimentConfig, param: str, values: Sequence[float]) -> list[ExperimentConfig]:
    """Configs along a d- or C-grid (hierarchical d sweeps resize the layers)."""
    out = []
    for v in values:
        if param == "C":
            out.append(replace(config, C=float(v)))
        elif param == "d":
            dv = int(v)
            if config.graph == "hierarchical":
                big_l = config.L if config.L is not None else 2
                out.append(replace(config, d=dv, L=big_l, layers=tuple([dv] * big_l)))
            elif config.graph == "theorem2":
                out.append(replace(config, d=dv))
            else:
                raise ValueError("d sweeps need a hierarchical or theorem2 graph")
        else:
            raise ValueError(f"sweep parameter must be 'd' or 'C', got {param!r}")
    return out


def write_summary(path: str, param: str, rows: Sequence[tuple[float, RegretCurve]]) -> None:
    """Final-round regret per grid value, one row per (value, algo)."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("param,value,algo,final_mean_regret,final_std_regret,n_seeds\n")
        for v, curve in rows:
            fh.write(",".join([
                param, _fmt(v), curve.algo, _fmt(curve.mean_regret[-1]),
                _fmt(curve.std_regret[-1]), str(curve.n_seeds),
            ]) + "\n")


def write_bounds_table(path: str, param: str,
                       rows: Sequence[tuple[float, float, float]]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("param,value,upper_bound,lower_bound\n")
        for v, ub, lb in rows:
            fh.write(f"{param},{_fmt(v)},{_fmt(ub)},{_fmt(lb)}\n")
