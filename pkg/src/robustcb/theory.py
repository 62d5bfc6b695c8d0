"""Bound evaluators, brute-force oracles, and the hard adversarial instance.

The regret bounds are order-level curves with a single scale constant ``c0``
(the implied constants are instance quantities the learner never sees, so no
attempt is made to evaluate them exactly).  ``f_paths`` re-derives the
reward map by explicit path enumeration and exists purely as a cross-check
for the recursion in :mod:`robustcb.sem`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sem import Dag, NoiseSpec, SemInstance, WeightMatrix, validate


@dataclass(frozen=True)
class BoundParams:
    """Graph and scale parameters shared by the bound curves."""

    d: int
    L: int
    N: int
    m_x: float = 1.0
    c0: float = 1.0

    def __post_init__(self) -> None:
        if self.d < 1 or self.L < 1:
            raise ValueError("d and L must be at least 1")
        if self.N < self.L + 1:
            raise ValueError("N must be at least L + 1")
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")


def upper_bound_curve(T: int, C: float, params: BoundParams) -> float:
    """Achievable-regret shape: c0 * (2 m + d^(L-1/2) (sqrt(NT) + NC) log(1+T))."""
    if T < 1:
        raise ValueError("T must be at least 1")
    if C < 1:
        raise ValueError("C must be at least 1")
    lead = params.d ** (params.L - 0.5) * (np.sqrt(params.N * T) + params.N * C)
    return params.c0 * (2.0 * params.m_x + lead * np.log1p(T))


def lower_bound_curve(T: int, C: float, params: BoundParams) -> float:
    """Minimax-regret shape: c0 * d^(L/2-2) * max(sqrt(T), d^2 C)."""
    if T < 1:
        raise ValueError("T must be at least 1")
    if C < 0:
        raise ValueError("C must be nonnegative")
    return params.c0 * params.d ** (params.L / 2.0 - 2.0) * max(np.sqrt(T), params.d**2 * C)


def f_paths(weights: WeightMatrix, length: int | None = None) -> np.ndarray:
    """Reward map by exhaustive directed-path enumeration (exact, exponential).

    Entry ``j`` sums, over every directed path of length at most ``L`` from
    ``j`` to the reward node, the product of edge weights along the path.
    Refuses graphs with more than 12 nodes.
    """
    dag = weights.dag
    n = dag.n_nodes
    if n > 12:
        raise ValueError("f_paths enumerates paths exhaustively; refusing n_nodes > 12")
    if length is None:
        length = dag.longest_path
    target = n - 1
    f = np.zeros(n)
    f[target] = 1.0  # the empty path

    def walk(node: int, product: float, steps: int) -> None:
        # extend the path backwards over the parents of `node`
        if steps == length:
            return
        ps = dag.parents[node]
        col = weights.cols[node]
        for k, p in enumerate(ps):
            w = product * col[k]
            f[p] += w
            walk(p, w, steps + 1)

    walk(target, 1.0, 0)
    return f


def _effective_min_eig_dense(m: np.ndarray, support: np.ndarray) -> float:
    if len(support) == 0:
        return 1.0
    block = m[np.ix_(support, support)]
    return float(np.linalg.eigvalsh(block)[0])


def lemma3_check(
    a: WeightMatrix,
    b_nominal: WeightMatrix,
    m_list: list[np.ndarray | None],
    beta: float,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Audit the compounding-error bound on the reward column of matrix powers.

    For each power ``l`` in ``1..L`` computes the left side
    ``||[A^l - B^l]_last||`` from dense powers and the right side
    ``d^((l-1)/2) (beta+1)^l max_i lambda_min(M_i)^(-1/2)``, and reports
    whether every power satisfies the bound.  ``m_list[i]`` is the metric for
    node ``i`` restricted to its parent block (``None`` for parentless
    nodes).  Precondition violations raise ``ValueError`` rather than
    counting as bound failures.
    """
    dag = a.dag
    if b_nominal.dag is not dag and b_nominal.dag != dag:
        raise ValueError("matrices must share one graph")
    if dag.n_nodes > 32:
        raise ValueError("dense power audit limited to 32 nodes")
    ell_max = dag.longest_path
    min_eigs = []
    for i in dag.parented_nodes:
        mi = m_list[i]
        if mi is None:
            raise ValueError(f"node {i} has parents but no metric")
        k = len(dag.parents[i])
        mi = np.asarray(mi, dtype=float)
        if mi.shape != (k, k):
            raise ValueError(f"node {i}: metric shape {mi.shape} does not match parent block")
        eig_min = float(np.linalg.eigvalsh((mi + mi.T) / 2.0)[0])
        if eig_min < 1.0 - 1e-9:
            raise ValueError(f"node {i}: metric is not >= identity")
        delta_i = a.cols[i] - b_nominal.cols[i]
        if np.sqrt(delta_i @ mi @ delta_i) > beta + 1e-9:
            raise ValueError(f"node {i}: column error exceeds beta in its metric")
        if np.linalg.norm(b_nominal.cols[i]) > 1.0 + 1e-9:
            raise ValueError(f"node {i}: nominal column norm exceeds 1")
        min_eigs.append(eig_min)
    lam = max((e**-0.5 for e in min_eigs), default=1.0)

    d = max(dag.max_in_degree, 1)
    ad = a.to_dense()
    bd = b_nominal.to_dense()
    ap = ad.copy()
    bp = bd.copy()
    lhs = np.zeros(ell_max)
    rhs = np.zeros(ell_max)
    for l in range(1, ell_max + 1):
        if l > 1:
            ap = ad @ ap
            bp = bd @ bp
        lhs[l - 1] = np.linalg.norm(ap[:, -1] - bp[:, -1])
        rhs[l - 1] = d ** ((l - 1) / 2.0) * (beta + 1.0) ** l * lam
    holds = bool(np.all(lhs <= rhs + 1e-12))
    return lhs, rhs, holds


def hierarchical_dag(widths: list[int]) -> Dag:
    """Layered graph: consecutive layers fully connected, last layer feeds
    the reward node."""
    if not widths or any(w < 1 for w in widths):
        raise ValueError("layer widths must be positive")
    parents: list[tuple[int, ...]] = []
    start = 0
    prev: tuple[int, ...] = ()
    for w in widths:
        layer = tuple(range(start, start + w))
        parents.extend(prev for _ in layer)
        prev = layer
        start += w
    parents.append(prev)  # reward node
    return validate(Dag(tuple(parents)))


def theorem2_instance(d: int, L: int) -> tuple[SemInstance, "ZeroingFactory"]:
    """The hierarchical instance whose reward-node intervention gap is d^(L/2).

    ``L`` layers of ``d`` nodes each feed the reward node.  Every existing
    edge carries weight sqrt(1/d) except the reward node's observational
    column, which is zero (its interventional column is sqrt(1/d)).  The
    first ``d`` nodes have noise mean 1, all other nodes 0; noise deviations
    are Gaussians truncated at three standard deviations so the boundedness
    assumption holds.  Pairs with the reward-column zeroing schedule.
    """
    if d < 1 or L < 1:
        raise ValueError("d and L must be at least 1")
    dag = hierarchical_dag([d] * L)
    w = (1.0 / d) ** 0.5
    n = dag.n_nodes
    b_obs = []
    b_int = []
    for i in range(n):
        k = len(dag.parents[i])
        if i == dag.reward_node:
            b_obs.append(np.zeros(k))
        else:
            b_obs.append(np.full(k, w))
        b_int.append(np.full(k, w))
    nu = tuple(1.0 if i < d else 0.0 for i in range(n))
    noise = NoiseSpec(kind="trunc_gauss", nu=nu)
    sem = SemInstance.build(dag, b_obs, b_int, noise)
    return sem, ZeroingFactory(sem)


class ZeroingFactory:
    """Builds the reward-column zeroing schedule paired with an instance."""

    def __init__(self, sem: SemInstance):
        self._sem = sem

    def __call__(self, budget: float, horizon: int):
        from .deviation import make_zeroing

        return make_zeroing(self._sem, budget, horizon)
