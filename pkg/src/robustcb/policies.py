"""Arm-selection policies over a known-structure linear SEM.

Four families:

* ``robust_lcb`` -- weighted-OLS estimation with budget-scaled adaptive
  weights and ellipsoids in the V Vt^{-1} V metric; the radius keeps the true
  columns covered even while an adversary spends its deviation budget.
* ``linsem_ucb`` / ``linsem_ucb_robust`` -- the unweighted ridge baseline
  with plain-Gram ellipsoids; the robust flavor inflates its radius by
  ``C m^2`` (the price that makes it non-competitive for large budgets).
* ``vanilla_ucb`` -- structure-blind UCB1 over the arm list.
* ``oracle`` -- plays the nominal best arm every round.

The SEM policies score an arm by the largest expected reward attainable when
every node's column ranges over its confidence set (ellipsoid intersected
with the unit ball).  Two solvers are provided: a closed-form upper bound on
that maximum built from the compounding-error inequality (default,
optimism-preserving, very loose at small horizons), and a projected
block-coordinate ascent on the objective itself, which is exact per column
in the single-parent case because directed paths never repeat a node, making
the objective multilinear in the columns.

Arms that intervene the same subset of *parented* nodes share one index, so
indices are computed per distinct variant pattern and broadcast to arms.
"""

from __future__ import annotations

import math
import warnings
from typing import Sequence

import numpy as np

from .estimation import ConfidenceSpec, NodeRegressor, beta, make_regressor, weight
from .sem import Dag, Intervention, Knowledge, SemInstance, best_arm

_BONUS = "bonus"
_PGA = "pga"
_SOLVERS = (_BONUS, _PGA)


class _PatternIndexer:
    """Maps arms to their variant pattern over parented nodes."""

    def __init__(self, dag: Dag, arms: Sequence[Intervention]):
        self.parented = dag.parented_nodes
        j_of = {node: j for j, node in enumerate(self.parented)}
        pattern_ids: dict[int, int] = {}
        self.arm_pattern = np.zeros(len(arms), dtype=np.intp)
        variants: list[tuple[int, ...]] = []
        for k, arm in enumerate(arms):
            key = 0
            for node, j in j_of.items():
                if node in arm:
                    key |= 1 << j
            pid = pattern_ids.get(key)
            if pid is None:
                pid = len(variants)
                pattern_ids[key] = pid
                variants.append(tuple(key >> j & 1 for j in range(len(self.parented))))
            self.arm_pattern[k] = pid
        self.n_patterns = len(variants)
        # variant_bits[p, j] = 1 when pattern p intervenes parented node j
        self.variant_bits = np.array(variants, dtype=np.intp).reshape(self.n_patterns, -1)


def _clip_ball(theta: np.ndarray) -> np.ndarray:
    """Scale rows of (..., d) into the unit ball."""
    nrm = np.linalg.norm(theta, axis=-1, keepdims=True)
    return theta / np.maximum(1.0, nrm)


class _SemUcbPolicy:
    """Shared machinery of the SEM-aware UCB policies."""

    kind = "sem_ucb"

    def __init__(
        self,
        knowledge: Knowledge,
        arms: Sequence[Intervention],
        horizon: int,
        c_budget: float = 1.0,
        delta: float | None = None,
        solver: str = _BONUS,
        rng: np.random.Generator | None = None,
        radius_fn=None,
    ):
        if solver not in _SOLVERS:
            raise ValueError(f"unknown solver {solver!r}")
        if c_budget < 1.0:
            warnings.warn("deviation budget below 1 clamped to 1 (weights must stay <= 1)")
            c_budget = 1.0
        self.know = knowledge
        self.dag = knowledge.dag
        self.nu = knowledge.nu
        self.arms = list(arms)
        self.horizon = horizon
        self.c_budget = float(c_budget)
        n = self.dag.n_nodes
        self.delta = delta if delta is not None else 1.0 / (2.0 * n * max(horizon, 1))
        self.solver = solver
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.radius_fn = radius_fn
        self.indexer = _PatternIndexer(self.dag, self.arms)
        self.regressors: dict[int, tuple[NodeRegressor, NodeRegressor]] = {}
        for i in self.dag.parented_nodes:
            k = len(self.dag.parents[i])
            self.regressors[i] = (make_regressor(i, "obs", k), make_regressor(i, "int", k))
        self._optimizer = _PatternOptimizer(self)
        self.n_selected = np.zeros(len(self.arms), dtype=np.int64)

    # -- per-node confidence radii ------------------------------------
    def node_radius(self, i: int, t: int) -> float:
        raise NotImplementedError

    def variant_radius(self, i: int, variant: int, t: int) -> float:
        """Radius of node i's ellipsoid for one variant (0 obs, 1 int)."""
        if self.radius_fn is not None:
            return float(self.radius_fn(t))
        return self.node_radius(i, t)

    def max_radius(self, t: int) -> float:
        if self.radius_fn is not None:
            return float(self.radius_fn(t))
        return max(
            (self.variant_radius(i, v, t) for i in self.dag.parented_nodes for v in (0, 1)),
            default=0.0,
        )

    # -- estimation ----------------------------------------------------
    def sample_weight(self, i: int, x_pa: np.ndarray, reg_prev: NodeRegressor) -> float:
        raise NotImplementedError

    def observe(self, arm: Intervention, x: np.ndarray, t: int) -> None:
        """Absorb one sample: each parented node updates the variant that
        matches its membership in the played arm."""
        for i in self.dag.parented_nodes:
            x_pa = x[self.dag.parent_arrays[i]]
            reg = self.regressors[i][1 if i in arm else 0]
            w = self.sample_weight(i, x_pa, reg)
            reg.update(w, x_pa, float(x[i]), float(self.nu[i]))

    # -- index computation ----------------------------------------------
    def _gathered_bhat(self) -> list[np.ndarray]:
        """Per parented node: (P, d) estimate columns selected by pattern."""
        out = []
        for j, node in enumerate(self.indexer.parented):
            obs, intr = self.regressors[node]
            pair = np.stack([obs.b_hat, intr.b_hat])  # (2, d)
            out.append(pair[self.indexer.variant_bits[:, j]])
        return out

    def _plugin_means(self, cols: list[np.ndarray]) -> np.ndarray:
        """<f(.), nu> for P pattern matrices given as per-node (P, d) columns."""
        n = self.dag.n_nodes
        p = self.indexer.n_patterns
        c = np.zeros((p, n))
        c[:, n - 1] = 1.0
        fsum = c.copy()
        for _ in range(self.dag.longest_path):
            nxt = np.zeros((p, n))
            for j, node in enumerate(self.indexer.parented):
                cj = c[:, node]
                if cj.any():
                    nxt[:, self.dag.parent_arrays[node]] += cols[j] * cj[:, None]
            if not nxt.any():
                break
            fsum += nxt
            c = nxt
        return fsum @ self.nu

    def _bonus_values(self, t: int) -> np.ndarray:
        """Closed-form optimistic index per pattern."""
        idx = self.indexer
        means = self._plugin_means(self._gathered_bhat())
        if not idx.parented:
            return means
        lam_inv = np.empty((idx.n_patterns, len(idx.parented)))
        for j, node in enumerate(idx.parented):
            obs, intr = self.regressors[node]
            pair = np.array([obs.effective_min_eig() ** -0.5, intr.effective_min_eig() ** -0.5])
            lam_inv[:, j] = pair[idx.variant_bits[:, j]]
        worst = lam_inv.max(axis=1)
        b = self.max_radius(t)
        d = max(self.dag.max_in_degree, 1)
        scale = sum(
            d ** ((l - 1) / 2.0) * (b + 1.0) ** l for l in range(1, self.dag.longest_path + 1)
        )
        return means + float(np.linalg.norm(self.nu)) * scale * worst

    def pattern_values(self, t: int) -> np.ndarray:
        if self.solver == _BONUS:
            return self._bonus_values(t)
        return self._optimizer.values(t)

    def select(self, t: int) -> Intervention:
        """Argmax of the index over the arm list; ties to the lowest position."""
        values = self.pattern_values(t)[self.indexer.arm_pattern]
        k = int(np.argmax(values))
        self.n_selected[k] += 1
        return self.arms[k]

    # -- single-arm index surfaces (audits and tests) -------------------
    def _pattern_of(self, arm: Intervention) -> int:
        try:
            k = self.arms.index(arm)
        except ValueError:
            raise ValueError("arm is not part of this policy's arm list") from None
        return int(self.indexer.arm_pattern[k])

    def ucb_index_bonus(self, arm: Intervention, t: int) -> float:
        return float(self._bonus_values(t)[self._pattern_of(arm)])

    def ucb_index_projected_ascent(
        self,
        arm: Intervention,
        t: int,
        restarts: int = 2,
        steps: int = 8,
        step_size: float = 0.5,
    ) -> float:
        vals = self._optimizer.values(t, restarts=restarts, steps=steps, step_size=step_size)
        return float(vals[self._pattern_of(arm)])


class _PatternOptimizer:
    """Maximizes <f(Theta), nu> with every column in its confidence set.

    Directed paths in the graph visit strictly increasing node indices, so
    the objective is multilinear in the columns.  For all-single-parent
    graphs the feasible sets are intervals and the maximum sits at a vertex
    of the box, which is enumerated exactly.  Otherwise the optimizer runs
    block-coordinate ascent: each column update solves the linear objective
    over its ellipsoid in closed form, falling back to alternating
    projections when the unit ball binds.  Solutions are warm-started across
    rounds and the returned value is always attained by a feasible point.
    """

    def __init__(self, policy: _SemUcbPolicy):
        self.pol = policy
        idx = policy.indexer
        self.all_scalar = all(len(policy.dag.parents[i]) == 1 for i in idx.parented)
        self.n_j = len(idx.parented)
        self.use_vertex = self.all_scalar and idx.n_patterns << self.n_j <= 1 << 16
        if self.use_vertex and self.n_j:
            bits = np.arange(1 << self.n_j, dtype=np.intp)
            self.vertex_hi = np.array(
                [(bits >> j) & 1 for j in range(self.n_j)], dtype=bool
            )  # (J, V)
        dag = policy.dag
        n = dag.n_nodes
        self.warm = np.zeros((idx.n_patterns, n, n))

    # ---- interval bounds for the scalar case -------------------------
    def _intervals(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        idx = self.pol.indexer
        lo = np.empty((idx.n_patterns, self.n_j))
        hi = np.empty((idx.n_patterns, self.n_j))
        for j, node in enumerate(idx.parented):
            pair_lo = np.empty(2)
            pair_hi = np.empty(2)
            for v, reg in enumerate(self.pol.regressors[node]):
                center = float(reg.b_hat[0])
                r = reg.ellipsoid_halfwidth(self.pol.variant_radius(node, v, t))
                a, z = max(-1.0, center - r), min(1.0, center + r)
                if a > z:  # ellipsoid and ball disjoint: nearest ball point
                    a = z = min(1.0, max(-1.0, center))
                pair_lo[v], pair_hi[v] = a, z
            sel = idx.variant_bits[:, j]
            lo[:, j] = pair_lo[sel]
            hi[:, j] = pair_hi[sel]
        return lo, hi

    def _vertex_values(self, t: int) -> np.ndarray:
        pol = self.pol
        idx = pol.indexer
        dag = pol.dag
        n = dag.n_nodes
        if self.n_j == 0:
            return np.full(idx.n_patterns, float(pol.nu[n - 1]))
        lo, hi = self._intervals(t)
        nv = 1 << self.n_j
        # theta[j]: (P, V) column scalars at each vertex assignment
        theta = [
            np.where(self.vertex_hi[j][None, :], hi[:, j, None], lo[:, j, None])
            for j in range(self.n_j)
        ]
        c = np.zeros((idx.n_patterns, nv, n))
        c[:, :, n - 1] = 1.0
        fsum = c.copy()
        parents = [int(dag.parent_arrays[node][0]) for node in idx.parented]
        for _ in range(dag.longest_path):
            nxt = np.zeros_like(c)
            for j, node in enumerate(idx.parented):
                cj = c[:, :, node]
                if cj.any():
                    nxt[:, :, parents[j]] += theta[j] * cj
            if not nxt.any():
                break
            fsum += nxt
            c = nxt
        return (fsum @ pol.nu).max(axis=1)

    # ---- block-coordinate ascent for the general case ----------------
    def _node_cache(self, node_j: int, t: int) -> tuple:
        """Pattern-gathered (radii, centers, metric factor, metric inverse)."""
        pol = self.pol
        node = pol.indexer.parented[node_j]
        sel = pol.indexer.variant_bits[:, node_j]
        radii = np.array([pol.variant_radius(node, 0, t),
                          pol.variant_radius(node, 1, t)])[sel]             # (P,)
        obs, intr = pol.regressors[node]
        centers = np.stack([obs.b_hat, intr.b_hat])[sel]                    # (P, d)
        wfac = np.stack([obs.metric_factor(), intr.metric_factor()])[sel]   # (P, d, d)
        minv = np.stack([obs.metric_inverse(), intr.metric_inverse()])[sel]
        return radii, centers, wfac, minv

    def _project(self, cache: tuple, theta: np.ndarray) -> np.ndarray:
        """Ball-clip then metric shrink toward the center.

        Lands exactly in the ellipsoid, and in the ball as well whenever the
        center is inside it (the shrink is a convex combination).
        """
        radii, centers, wfac, _ = cache
        out = _clip_ball(theta)
        diff = out - centers
        nrm = np.linalg.norm(np.einsum("pij,pj->pi", wfac, diff), axis=1)
        scale = np.minimum(1.0, radii / np.maximum(nrm, 1e-300))
        return centers + diff * scale[:, None]

    def _power_stacks(self, dense: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """qs[s] = Theta^s e_last and pr[r] = (Theta^T)^r nu for s, r < L."""
        pol = self.pol
        n = pol.dag.n_nodes
        p = dense.shape[0]
        q = np.zeros((p, n))
        q[:, n - 1] = 1.0
        qs = [q]
        pr = [np.broadcast_to(pol.nu, (p, n))]
        for _ in range(pol.dag.longest_path - 1):
            qs.append(np.matmul(dense, qs[-1][:, :, None]).squeeze(-1))
            pr.append(np.matmul(dense.transpose(0, 2, 1), pr[-1][:, :, None]).squeeze(-1))
        return qs, pr

    def _ascent_values(
        self, t: int, restarts: int, steps: int, step_size: float
    ) -> np.ndarray:
        pol = self.pol
        idx = pol.indexer
        dag = pol.dag
        big_l = dag.longest_path
        parented = idx.parented
        pa_of = [dag.parent_arrays[node] for node in parented]
        caches = [self._node_cache(j, t) for j in range(len(parented))]

        def evaluate(dense: np.ndarray) -> np.ndarray:
            cols = [dense[:, pa_of[j], node] for j, node in enumerate(parented)]
            return pol._plugin_means(cols)

        def sweep(dense: np.ndarray) -> None:
            # Gauss-Seidel over columns, nearest-to-reward first; each
            # update solves the per-column linear objective over its set
            for j in range(len(parented) - 1, -1, -1):
                node = parented[j]
                pa = pa_of[j]
                qs, pr = self._power_stacks(dense)
                g = np.zeros((dense.shape[0], len(pa)))
                for r in range(big_l):
                    for s in range(big_l - r):
                        g += pr[r][:, pa] * qs[s][:, node, None]
                cur = dense[:, pa, node]
                dense[:, pa, node] = self._column_max(caches[j], g, cur)

        starts = [self.warm.copy()]
        if t == 1 or t % 8 == 1 or restarts >= 2:
            greedy = np.zeros_like(self.warm)
            for j, node in enumerate(parented):
                greedy[:, pa_of[j], node] = caches[j][1]
            starts.append(greedy)
        for _ in range(max(0, restarts - 2)):
            rand = np.zeros_like(self.warm)
            for j, node in enumerate(parented):
                rand[:, pa_of[j], node] = pol.rng.uniform(
                    -1.0, 1.0, size=(idx.n_patterns, len(pa_of[j])))
            starts.append(rand)

        best_vals = np.full(idx.n_patterns, -np.inf)
        best: np.ndarray | None = None
        for dense in starts:
            for j, node in enumerate(parented):
                dense[:, pa_of[j], node] = self._project(caches[j], dense[:, pa_of[j], node])
            for _ in range(max(1, steps)):
                sweep(dense)
                vals = evaluate(dense)
                better = vals > best_vals
                if best is None:
                    best = dense.copy()
                    best_vals = vals
                elif better.any():
                    best[better] = dense[better]
                    best_vals = np.where(better, vals, best_vals)
        assert best is not None
        self.warm = best
        return best_vals

    def _column_max(self, cache: tuple, g: np.ndarray, cur: np.ndarray) -> np.ndarray:
        """Maximize the linear coefficient g over the column's confidence set.

        Closed form over the ellipsoid; candidates leaving the unit ball are
        pulled back by clip-and-shrink.  The incumbent is kept whenever it
        scores at least as well, so a sweep never worsens a column.
        """
        radii, centers, wfac, minv = cache
        mg = np.einsum("pij,pj->pi", minv, g)
        gn = np.sqrt(np.maximum(np.einsum("pi,pi->p", g, mg), 1e-300))
        cand = centers + (radii / gn)[:, None] * mg
        outside = np.linalg.norm(cand, axis=1) > 1.0
        if outside.any():
            ref = self._project(cache, cand)
            cand = np.where(outside[:, None], ref, cand)
        keep = np.einsum("pi,pi->p", g, cur) >= np.einsum("pi,pi->p", g, cand)
        return np.where(keep[:, None], cur, cand)

    def values(
        self,
        t: int,
        restarts: int = 1,
        steps: int = 2,
        step_size: float = 0.5,
    ) -> np.ndarray:
        if self.n_j == 0:
            return np.full(self.pol.indexer.n_patterns, float(self.pol.nu[-1]))
        if self.use_vertex:
            return self._vertex_values(t)
        return self._ascent_values(t, restarts, steps, step_size)


class RobustLcbPolicy(_SemUcbPolicy):
    """Weighted-OLS UCB with deviation-budget-aware weights and radii."""

    kind = "robust_lcb"

    def __init__(self, knowledge, arms, horizon, c_budget, delta=None, solver=_BONUS,
                 rng=None, radius_fn=None):
        super().__init__(knowledge, arms, horizon, c_budget, delta, solver, rng, radius_fn)
        self._specs = {
            i: ConfidenceSpec(
                delta=self.delta,
                c_budget=self.c_budget,
                m_x=self.know.parent_norm_bound(i),
                d=len(self.dag.parents[i]),
            )
            for i in self.dag.parented_nodes
        }

    def node_radius(self, i: int, t: int) -> float:
        if self.radius_fn is not None:
            return float(self.radius_fn(t))
        return beta(t, self._specs[i])

    def variant_radius(self, i: int, variant: int, t: int) -> float:
        """Envelope radius tightened by its data-dependent counterparts.

        The deviation term needs only the largest parent norm actually
        absorbed, and the stochastic term only the realized log-determinant
        of the squared-weight Gram; both are rigorous stand-ins for the
        worst-case envelope, so the smaller of the two radii still covers.
        """
        if self.radius_fn is not None:
            return float(self.radius_fn(t))
        envelope = beta(t, self._specs[i])
        reg = self.regressors[i][variant]
        empirical = 1.0 + reg.m_hat + math.sqrt(
            2.0 * math.log(1.0 / self.delta) + reg.logdet_tilde()
        )
        return min(envelope, empirical)

    def sample_weight(self, i, x_pa, reg_prev):
        return weight(x_pa, reg_prev, self.c_budget)


class LinSemUcbPolicy(_SemUcbPolicy):
    """Unweighted ridge baseline; optionally with the deviation-inflated radius.

    With unit weights the squared-weight Gram equals the weighted Gram, so
    the shared ellipsoid machinery reduces to the plain V metric.
    """

    def __init__(self, knowledge, arms, horizon, c_budget=1.0, delta=None, solver=_BONUS,
                 rng=None, radius_fn=None, robust: bool = False):
        super().__init__(knowledge, arms, horizon, max(1.0, c_budget), delta, solver,
                         rng, radius_fn)
        self.robust = robust

    @property
    def kind(self) -> str:  # type: ignore[override]
        return "linsem_ucb_robust" if self.robust else "linsem_ucb"

    def node_radius(self, i: int, t: int) -> float:
        if self.radius_fn is not None:
            return float(self.radius_fn(t))
        m = self.know.parent_norm_bound(i)
        d = len(self.dag.parents[i])
        if self.robust:
            tail = math.sqrt(2.0 * math.log(1.0 / self.delta) + d * math.log1p(m * m * t / d))
            return 1.0 + self.c_budget * m * m + tail
        big_t = float(self.horizon)
        return 1.0 + math.sqrt(
            2.0 * math.log(1.0 / self.delta) + d * math.log1p(m * big_t * big_t / d)
        )

    def sample_weight(self, i, x_pa, reg_prev):
        return 1.0

    def linsem_index(self, arm: Intervention, t: int) -> float:
        if self.solver == _BONUS:
            return self.ucb_index_bonus(arm, t)
        return self.ucb_index_projected_ascent(arm, t)


class VanillaUcbPolicy:
    """UCB1 over the arm list; never reads the graph."""

    kind = "vanilla_ucb"

    def __init__(self, arms: Sequence[Intervention], reward_bound: float, reward_node: int):
        self.arms = list(arms)
        self.reward_bound = float(reward_bound)
        self.reward_node = reward_node
        self._pos = {a.mask: k for k, a in enumerate(self.arms)}
        self.counts = np.zeros(len(self.arms), dtype=np.int64)
        self.sums = np.zeros(len(self.arms))
        self.n_selected = self.counts  # alias: every selection is observed

    def select(self, t: int) -> Intervention:
        if 0 in self.counts:
            return self.arms[int(np.argmax(self.counts == 0))]
        means = self.sums / self.counts
        bonus = self.reward_bound * np.sqrt(2.0 * math.log(t) / self.counts)
        return self.arms[int(np.argmax(means + bonus))]

    def observe(self, arm: Intervention, x: np.ndarray, t: int) -> None:
        k = self._pos[arm.mask]
        self.counts[k] += 1
        self.sums[k] += float(x[self.reward_node])


class OraclePolicy:
    """Plays the nominal best arm; the only policy built from the true model."""

    kind = "oracle"

    def __init__(self, sem: SemInstance, arms: Sequence[Intervention]):
        self.arms = list(arms)
        self.best, self.best_mu = best_arm(sem, self.arms)

    def select(self, t: int) -> Intervention:
        return self.best

    def observe(self, arm: Intervention, x: np.ndarray, t: int) -> None:
        pass


def build_policy(
    kind: str,
    sem: SemInstance,
    arms: Sequence[Intervention],
    horizon: int,
    c_budget: float = 1.0,
    delta: float | None = None,
    solver: str = _BONUS,
    rng: np.random.Generator | None = None,
):
    """Construct a policy by name; SEM learners only receive the knowledge view."""
    if kind == "oracle":
        return OraclePolicy(sem, arms)
    if kind == "vanilla_ucb":
        return VanillaUcbPolicy(arms, reward_bound=sem.m_x, reward_node=sem.dag.reward_node)
    know = sem.knowledge
    if kind == "robust_lcb":
        return RobustLcbPolicy(know, arms, horizon, max(1.0, c_budget), delta, solver, rng)
    if kind == "linsem_ucb":
        return LinSemUcbPolicy(know, arms, horizon, 1.0, delta, solver, rng, robust=False)
    if kind == "linsem_ucb_robust":
        return LinSemUcbPolicy(know, arms, horizon, max(1.0, c_budget), delta, solver, rng,
                               robust=True)
    raise ValueError(f"unknown policy kind {kind!r}")
