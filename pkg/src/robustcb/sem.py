"""Linear structural equation models on known DAGs, with soft interventions.

A system of ``n`` nodes follows ``X = A^T X + eps`` where ``A`` is strictly
upper triangular (every edge points from a lower index to a higher index) and
``eps`` is bounded exogenous noise with known mean ``nu``.  The last node is
the reward node.  A soft intervention on node ``i`` replaces the incoming
weight column of ``i`` (``b_obs[i]``) with an alternative column
(``b_int[i]``); an arm is any subset of nodes intervened simultaneously.

The expected reward of an effective weight matrix ``A`` is ``<f(A), nu>``
where ``f(A) = sum_{l=0..L} [A^l]_last`` (``[.]_last`` is the last column and
``L`` the longest-path length), which this module evaluates by the cheap
column-of-power recursion.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class DagError(ValueError):
    """Raised when a graph violates the strictly-increasing parent order."""


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph stored as per-node parent lists.

    ``parents[i]`` holds the parents of node ``i``; acyclicity is enforced
    structurally by requiring every parent index to be strictly less than its
    child.  The reward node is the last index.
    """

    parents: tuple[tuple[int, ...], ...]

    @property
    def n_nodes(self) -> int:
        return len(self.parents)

    @property
    def reward_node(self) -> int:
        return len(self.parents) - 1

    @cached_property
    def parent_arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(np.asarray(p, dtype=np.intp) for p in self.parents)

    @cached_property
    def max_in_degree(self) -> int:
        return max((len(p) for p in self.parents), default=0)

    @cached_property
    def longest_path(self) -> int:
        depth = [0] * self.n_nodes
        for i, ps in enumerate(self.parents):
            depth[i] = max((depth[p] + 1 for p in ps), default=0)
        return max(depth, default=0)

    @cached_property
    def parented_nodes(self) -> tuple[int, ...]:
        return tuple(i for i, ps in enumerate(self.parents) if ps)

    @property
    def n_edges(self) -> int:
        return sum(len(p) for p in self.parents)


def validate(dag: Dag) -> Dag:
    """Check the parent-order invariant and cache the graph parameters.

    Returns the same instance with ``max_in_degree`` and ``longest_path``
    computed.  Raises :class:`DagError` naming the first offending edge.
    """
    for i, ps in enumerate(dag.parents):
        for p in ps:
            if not 0 <= p < dag.n_nodes:
                raise DagError(f"edge ({p}, {i}): parent index out of range")
            if p >= i:
                raise DagError(f"edge ({p}, {i}): parent index not less than child")
        if len(set(ps)) != len(ps):
            raise DagError(f"node {i}: duplicate parent")
    dag.max_in_degree  # populate caches
    dag.longest_path
    return dag


def chain_dag(n: int) -> Dag:
    if n < 1:
        raise DagError("chain needs at least one node")
    return validate(Dag(tuple(() if i == 0 else (i - 1,) for i in range(n))))


@dataclass(frozen=True)
class Intervention:
    """A subset of nodes intervened simultaneously, stored as a bit mask."""

    mask: int = 0

    @classmethod
    def from_nodes(cls, nodes: Iterable[int]) -> "Intervention":
        m = 0
        for i in nodes:
            m |= 1 << i
        return cls(m)

    def __contains__(self, node: int) -> bool:
        return bool(self.mask >> node & 1)

    def members(self) -> tuple[int, ...]:
        out, m, i = [], self.mask, 0
        while m:
            if m & 1:
                out.append(i)
            m >>= 1
            i += 1
        return tuple(out)

    def sort_key(self) -> tuple[int, ...]:
        # lexicographic order on the sorted member tuple; empty set first
        return self.members()

    def __repr__(self) -> str:
        return f"Intervention({set(self.members()) or '{}'})"


def all_arms(n_nodes: int) -> list[Intervention]:
    """Every subset of nodes, in lexicographic member order (empty set first)."""
    arms = [Intervention(m) for m in range(1 << n_nodes)]
    arms.sort(key=Intervention.sort_key)
    return arms


def atomic_arms(n_nodes: int) -> list[Intervention]:
    """The empty intervention plus every single-node intervention."""
    return [Intervention(0)] + [Intervention(1 << i) for i in range(n_nodes)]


@dataclass(frozen=True)
class NoiseSpec:
    """Bounded per-node noise around the mean vector ``nu``.

    ``uniform``: eps_i = nu_i + U[-half_width, half_width] (sub-Gaussian since
    bounded).  ``trunc_gauss``: eps_i = nu_i + N(0, sigma^2) truncated at
    ``clip_sigmas`` standard deviations.
    """

    kind: str
    nu: tuple[float, ...]
    half_width: float = 1.0
    sigma: float = 1.0
    clip_sigmas: float = 3.0

    def __post_init__(self) -> None:
        if self.kind not in ("uniform", "trunc_gauss"):
            raise ValueError(f"unknown noise kind {self.kind!r}")

    @cached_property
    def nu_array(self) -> np.ndarray:
        return np.asarray(self.nu, dtype=float)

    @cached_property
    def per_node_bound(self) -> np.ndarray:
        """Almost-sure bound on |eps_i| per node."""
        spread = self.half_width if self.kind == "uniform" else self.sigma * self.clip_sigmas
        return np.abs(self.nu_array) + spread

    def draw(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        n = len(self.nu)
        shape = (n,) if size is None else (size, n)
        if self.kind == "uniform":
            dev = rng.uniform(-self.half_width, self.half_width, size=shape)
        else:
            dev = self.sigma * rng.standard_normal(shape)
            lim = self.sigma * self.clip_sigmas
            bad = np.abs(dev) > lim
            while bad.any():
                dev[bad] = self.sigma * rng.standard_normal(int(bad.sum()))
                bad = np.abs(dev) > lim
        return self.nu_array + dev


@dataclass(frozen=True)
class WeightMatrix:
    """Effective edge weights stored column-sparse on each node's parent set.

    ``cols[i]`` is aligned with ``dag.parents[i]``.  The dense equivalent is
    strictly upper triangular, hence nilpotent with index at most
    ``longest_path + 1``.
    """

    dag: Dag
    cols: tuple[np.ndarray, ...]

    def column(self, i: int) -> np.ndarray:
        return self.cols[i]

    def to_dense(self) -> np.ndarray:
        n = self.dag.n_nodes
        a = np.zeros((n, n))
        for i, ps in enumerate(self.dag.parent_arrays):
            if len(ps):
                a[ps, i] = self.cols[i]
        return a

    def with_columns(self, replacements: dict[int, np.ndarray]) -> "WeightMatrix":
        cols = list(self.cols)
        for i, c in replacements.items():
            cols[i] = c
        return WeightMatrix(self.dag, tuple(cols))


def _as_columns(dag: Dag, cols: Sequence[Sequence[float]]) -> tuple[np.ndarray, ...]:
    if len(cols) != dag.n_nodes:
        raise ValueError("one weight column per node required")
    out = []
    for i, c in enumerate(cols):
        arr = np.asarray(c, dtype=float).reshape(-1)
        if arr.shape != (len(dag.parents[i]),):
            raise ValueError(f"node {i}: column length {arr.shape} does not match parent set")
        out.append(arr)
    return tuple(out)


@dataclass(frozen=True)
class SemInstance:
    """A causal bandit instance: graph, nominal weights, and noise model.

    Column norms are capped at 1 for both the observational and the
    interventional weights.  ``m_x`` is a conservative almost-sure bound on
    ``||X||`` computed as ``m_eps * sum_{l=0..L} d^(l/2)``; per-node value
    bounds (tighter) are exposed for confidence-radius construction.
    """

    dag: Dag
    b_obs: tuple[np.ndarray, ...]
    b_int: tuple[np.ndarray, ...]
    noise: NoiseSpec

    @classmethod
    def build(
        cls,
        dag: Dag,
        b_obs: Sequence[Sequence[float]],
        b_int: Sequence[Sequence[float]],
        noise: NoiseSpec,
    ) -> "SemInstance":
        validate(dag)
        inst = cls(dag, _as_columns(dag, b_obs), _as_columns(dag, b_int), noise)
        if len(noise.nu) != dag.n_nodes:
            raise ValueError("noise mean length does not match node count")
        for i in range(dag.n_nodes):
            for name, col in (("observational", inst.b_obs[i]), ("interventional", inst.b_int[i])):
                if np.linalg.norm(col) > 1.0 + 1e-9:
                    raise ValueError(f"node {i}: {name} column norm exceeds 1")
        return inst

    @property
    def nu(self) -> np.ndarray:
        return self.noise.nu_array

    @cached_property
    def m_eps(self) -> float:
        return float(np.linalg.norm(self.noise.per_node_bound))

    @cached_property
    def m_x(self) -> float:
        d = max(self.dag.max_in_degree, 1)
        total = sum(d ** (l / 2.0) for l in range(self.dag.longest_path + 1))
        return self.m_eps * total

    @cached_property
    def knowledge(self) -> "Knowledge":
        return Knowledge(
            dag=self.dag,
            nu=self.nu,
            m_x=self.m_x,
            node_bounds=_learner_node_bounds(self.dag, self.noise),
        )


def _learner_node_bounds(dag: Dag, noise: NoiseSpec) -> np.ndarray:
    """Per-node almost-sure bound on |X_i| using only the public column-norm
    cap of 1, so the learner may use these without seeing the true weights.

    The shipped deviation schedules never increase a column's norm, so the
    bounds also hold on deviation rounds.
    """
    eb = noise.per_node_bound
    xb = np.zeros(dag.n_nodes)
    for i, ps in enumerate(dag.parent_arrays):
        xb[i] = eb[i] + (float(np.linalg.norm(xb[ps])) if len(ps) else 0.0)
    return xb


@dataclass(frozen=True)
class Knowledge:
    """What a learner is allowed to see: structure, noise means, and bounds.

    Policies are constructed from this view only; the true weight columns
    stay inside the environment (the oracle policy is the lone exception).
    """

    dag: Dag
    nu: np.ndarray
    m_x: float
    node_bounds: np.ndarray

    def parent_norm_bound(self, i: int) -> float:
        ps = self.dag.parent_arrays[i]
        return float(np.linalg.norm(self.node_bounds[ps])) if len(ps) else 0.0


def compose_weights(sem: SemInstance, a: Intervention) -> WeightMatrix:
    """Effective weights under arm ``a``: interventional columns on members."""
    cols = tuple(sem.b_int[i] if i in a else sem.b_obs[i] for i in range(sem.dag.n_nodes))
    return WeightMatrix(sem.dag, cols)


def reward_map(weights: WeightMatrix, length: int | None = None) -> np.ndarray:
    """The reward-node column of ``sum_l A^l`` by repeated sparse products.

    Iterates ``c <- A c`` from the reward basis vector and accumulates, so the
    cost is O(L * n_edges) instead of dense matrix powers.
    """
    dag = weights.dag
    n = dag.n_nodes
    if length is None:
        length = dag.longest_path
    c = np.zeros(n)
    c[n - 1] = 1.0
    f = c.copy()
    for _ in range(length):
        nxt = np.zeros(n)
        for i in dag.parented_nodes:
            ci = c[i]
            if ci != 0.0:
                nxt[dag.parent_arrays[i]] += weights.cols[i] * ci
        if not nxt.any():
            break
        f += nxt
        c = nxt
    return f


def expected_reward(weights: WeightMatrix, nu: np.ndarray) -> float:
    return float(reward_map(weights) @ np.asarray(nu, dtype=float))


def sample(
    weights: WeightMatrix,
    noise: NoiseSpec,
    rng: np.random.Generator,
    norm_bound: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One draw of ``X`` (and the noise that produced it) in index order."""
    eps = noise.draw(rng)
    x = eps.copy()
    for i in weights.dag.parented_nodes:
        x[i] += float(weights.cols[i] @ x[weights.dag.parent_arrays[i]])
    if norm_bound is not None and float(np.linalg.norm(x)) > norm_bound + 1e-9:
        raise RuntimeError(f"sampled ||X|| exceeds the declared bound {norm_bound:.6g}")
    return x, eps


def sample_batch(
    weights: WeightMatrix,
    noise: NoiseSpec,
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    """Vectorized draws of ``X`` with shape (size, n_nodes)."""
    eps = noise.draw(rng, size=size)
    x = eps
    for i in weights.dag.parented_nodes:
        x[:, i] += x[:, weights.dag.parent_arrays[i]] @ weights.cols[i]
    return x


def best_arm(sem: SemInstance, arms: Sequence[Intervention]) -> tuple[Intervention, float]:
    """The arm with maximal expected reward under the nominal weights.

    Ties go to the lexicographically smallest member set.
    """
    if not arms:
        raise ValueError("arms must be nonempty")
    best: Intervention | None = None
    best_mu = -np.inf
    for a in arms:
        mu = expected_reward(compose_weights(sem, a), sem.nu)
        if mu > best_mu or (mu == best_mu and best is not None and a.sort_key() < best.sort_key()):
            best, best_mu = a, mu
    assert best is not None
    return best, best_mu
