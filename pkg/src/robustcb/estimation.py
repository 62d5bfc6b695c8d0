"""Per-node weighted least squares with dual Gram matrices.

Each node with parents carries one regressor per variant (observational /
interventional).  A regressor absorbs weighted samples into

    V  <- V  + w   * x x^T        (weighted Gram, identity-regularized)
    Vt <- Vt + w^2 * x x^T        (squared-weight Gram)

and estimates its column as ``V^{-1} sum w x (x_i - nu_i)``.  Confidence
ellipsoids live in the ``M = V Vt^{-1} V`` metric intersected with the unit
ball; the sample weight is ``min(1/C, 1/(C ||x||_{Vt^{-1}}))`` so that one
round's deviation can move the estimate by at most a bounded amount.

Cholesky factors of both Grams are maintained by rank-one updates, so an
update costs O(d^2) and all norms come from triangular solves without ever
forming the metric triple product.  Single-parent nodes (the common case in
chain graphs) use a scalar fast path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def choldate(L: np.ndarray, x: np.ndarray) -> None:
    """In-place rank-one update of a lower Cholesky factor: L L^T + x x^T."""
    x = x.astype(float, copy=True)
    k = L.shape[0]
    for j in range(k):
        ljj = L[j, j]
        r = math.hypot(ljj, x[j])
        c = r / ljj
        s = x[j] / ljj
        L[j, j] = r
        if j + 1 < k:
            L[j + 1 :, j] = (L[j + 1 :, j] + s * x[j + 1 :]) / c
            x[j + 1 :] = c * x[j + 1 :] - s * L[j + 1 :, j]


@dataclass(frozen=True)
class ConfidenceSpec:
    """Inputs of the concentration radius: confidence level, deviation
    budget, value bound, and regression dimension."""

    delta: float
    c_budget: float
    m_x: float
    d: int

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.c_budget < 1.0:
            raise ValueError("c_budget must be at least 1 (clamp before building the spec)")


def beta(t: int, spec: ConfidenceSpec) -> float:
    """Time-uniform radius sqrt(2 log(1/delta) + d log(1 + m^2 t / (d C^2))) + 1 + m."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if spec.d == 0:
        log_term = 0.0
    else:
        log_term = spec.d * math.log1p(spec.m_x**2 * t / (spec.d * spec.c_budget**2))
    return math.sqrt(2.0 * math.log(1.0 / spec.delta) + log_term) + 1.0 + spec.m_x


class ScalarNodeRegressor:
    """Single-parent regressor: every quantity is a closed-form scalar."""

    __slots__ = ("node", "variant", "count", "m_hat", "_v", "_vt", "_mom")

    k = 1

    def __init__(self, node: int, variant: str):
        self.node = node
        self.variant = variant
        self.count = 0
        self.m_hat = 0.0  # largest absorbed ||x_pa||
        self._v = 1.0
        self._vt = 1.0
        self._mom = 0.0

    @property
    def V(self) -> np.ndarray:
        return np.array([[self._v]])

    @property
    def V_tilde(self) -> np.ndarray:
        return np.array([[self._vt]])

    @property
    def b_hat(self) -> np.ndarray:
        return np.array([self._mom / self._v])

    def update(self, w: float, x_pa: np.ndarray, x_i: float, nu_i: float) -> None:
        x = float(x_pa[0])
        self._v += w * x * x
        self._vt += w * w * x * x
        self._mom += w * x * (x_i - nu_i)
        self.count += 1
        if abs(x) > self.m_hat:
            self.m_hat = abs(x)

    def bonus_norm(self, x_pa: np.ndarray) -> float:
        return abs(float(x_pa[0])) / math.sqrt(self._vt)

    def ellipsoid_norm(self, theta: np.ndarray) -> float:
        return abs(float(theta[0]) - self._mom / self._v) * self._v / math.sqrt(self._vt)

    def effective_min_eig(self) -> float:
        return self._v * self._v / self._vt

    def metric_factor(self) -> np.ndarray:
        return np.array([[self._v / math.sqrt(self._vt)]])

    def ellipsoid_halfwidth(self, radius: float) -> float:
        """Half-width of the metric ball in parameter space (exact for k=1)."""
        return radius * math.sqrt(self._vt) / self._v

    def metric_inverse(self) -> np.ndarray:
        return np.array([[self._vt / (self._v * self._v)]])

    def logdet_tilde(self) -> float:
        return math.log(self._vt)


class DenseNodeRegressor:
    """General d-parent regressor maintaining Cholesky factors of both Grams."""

    __slots__ = ("node", "variant", "k", "count", "m_hat", "_lv", "_lvt", "_v", "_vt",
                 "_mom", "_cache_stale", "_b_hat", "_w_factor", "_min_eig", "_m_inv")

    def __init__(self, node: int, variant: str, k: int):
        self.node = node
        self.variant = variant
        self.k = k
        self.count = 0
        self.m_hat = 0.0
        self._v = np.eye(k)
        self._vt = np.eye(k)
        self._lv = np.eye(k)
        self._lvt = np.eye(k)
        self._mom = np.zeros(k)
        self._cache_stale = True
        self._b_hat = np.zeros(k)
        self._w_factor = np.eye(k)
        self._min_eig = 1.0
        self._m_inv = np.eye(k)

    @property
    def V(self) -> np.ndarray:
        return self._v.copy()

    @property
    def V_tilde(self) -> np.ndarray:
        return self._vt.copy()

    @property
    def b_hat(self) -> np.ndarray:
        self._refresh()
        return self._b_hat

    def update(self, w: float, x_pa: np.ndarray, x_i: float, nu_i: float) -> None:
        x = np.asarray(x_pa, dtype=float)
        self._v += w * np.outer(x, x)
        self._vt += (w * w) * np.outer(x, x)
        choldate(self._lv, math.sqrt(w) * x)
        choldate(self._lvt, w * x)
        self._mom += (w * (x_i - nu_i)) * x
        self.count += 1
        nrm = float(np.linalg.norm(x))
        if nrm > self.m_hat:
            self.m_hat = nrm
        self._cache_stale = True

    def _refresh(self) -> None:
        if not self._cache_stale:
            return
        lv, lvt = self._lv, self._lvt
        self._b_hat = np.linalg.solve(lv.T, np.linalg.solve(lv, self._mom))
        self._w_factor = np.linalg.solve(lvt, self._v)
        sv = np.linalg.svd(self._w_factor, compute_uv=False)
        self._min_eig = float(sv[-1] ** 2)
        v_inv = np.linalg.solve(lv.T, np.linalg.solve(lv, np.eye(self.k)))
        self._m_inv = v_inv @ self._vt @ v_inv
        self._cache_stale = False

    def bonus_norm(self, x_pa: np.ndarray) -> float:
        z = np.linalg.solve(self._lvt, np.asarray(x_pa, dtype=float))
        return float(np.linalg.norm(z))

    def ellipsoid_norm(self, theta: np.ndarray) -> float:
        self._refresh()
        return float(np.linalg.norm(self._w_factor @ (np.asarray(theta, float) - self._b_hat)))

    def effective_min_eig(self) -> float:
        self._refresh()
        return self._min_eig

    def metric_factor(self) -> np.ndarray:
        self._refresh()
        return self._w_factor

    def ellipsoid_halfwidth(self, radius: float) -> float:
        """Radius of the smallest Euclidean ball containing the metric ball."""
        self._refresh()
        return radius / math.sqrt(self._min_eig)

    def metric_inverse(self) -> np.ndarray:
        self._refresh()
        return self._m_inv

    def logdet_tilde(self) -> float:
        return 2.0 * float(np.log(np.diag(self._lvt)).sum())


NodeRegressor = ScalarNodeRegressor | DenseNodeRegressor


def make_regressor(node: int, variant: str, k: int) -> NodeRegressor:
    if k < 1:
        raise ValueError("regressors exist only for nodes with parents")
    if k == 1:
        return ScalarNodeRegressor(node, variant)
    return DenseNodeRegressor(node, variant, k)


def weight(x_pa: np.ndarray, reg_prev: NodeRegressor, c_budget: float) -> float:
    """Adaptive sample weight min(1/C, 1/(C ||x||_{Vt^{-1}})).

    ``reg_prev`` supplies the squared-weight Gram built from earlier rounds
    only; a zero parent vector drops the norm term and returns 1/C.
    """
    if c_budget < 1.0:
        raise ValueError("c_budget must be at least 1")
    norm = reg_prev.bonus_norm(x_pa)
    if norm == 0.0:
        return 1.0 / c_budget
    return min(1.0 / c_budget, 1.0 / (c_budget * norm))


def contains(reg: NodeRegressor, theta: np.ndarray, radius: float) -> bool:
    """Membership in the confidence set: unit ball intersected with the
    metric ellipsoid around the current estimate."""
    theta = np.asarray(theta, dtype=float)
    if float(np.linalg.norm(theta)) > 1.0 + 1e-12:
        return False
    return reg.ellipsoid_norm(theta) <= radius + 1e-12
