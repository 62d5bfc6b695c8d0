"""Adversarial deviation schedules under the DF and AD budget measures.

The adversary perturbs the effective weight columns of the round's played
arm: the true data-generating matrix at round ``t`` is the nominal matrix
plus a per-node column delta.  Two budget measures are supported:

* DF (deviation frequency): per node, at most ``C_DF`` rounds with a nonzero
  delta, each of norm at most ``m_c``; the unified budget is ``C = m_c*C_DF``.
* AD (aggregate deviation): per node, the summed delta norms over the horizon
  stay at or below ``C_AD = C``.

Both measures take the worst case over arms, so the accounting here uses the
larger of a node's two nominal column norms.  Schedules are rules rather
than stored columns: the shipped adversaries flip the sign of whatever
column is active (magnitude-capped) or zero the reward column, which never
enlarges a column's norm or support.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sem import Intervention, SemInstance, WeightMatrix

_KINDS = ("none", "early_flip", "zeroing")
_MEASURES = ("none", "df", "ad")


class BudgetError(RuntimeError):
    """A schedule violates (or cannot satisfy) its declared budget."""


@dataclass(frozen=True)
class DeviationSchedule:
    """Per-round deviation rule with its declared measure and budget.

    ``allowance[t-1]`` caps the delta norm a targeted node may receive at
    round ``t``; rounds past the allowance array are deviation-free.
    ``worst_norms[i]`` is the largest nominal column norm of node ``i``,
    used for worst-case-over-arms accounting.
    """

    kind: str
    measure: str
    budget_c: float
    m_c: float
    targets: tuple[int, ...]
    allowance: tuple[float, ...]
    worst_norms: tuple[float, ...]
    horizon: int

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.measure not in _MEASURES:
            raise ValueError(f"unknown measure {self.measure!r}")

    @property
    def n_deviation_rounds(self) -> int:
        return len(self.allowance)

    def delta(self, t: int, node: int, nominal_col: np.ndarray) -> np.ndarray | None:
        """Column delta for node at round ``t`` (1-based); None when zero."""
        if t < 1:
            raise ValueError("rounds are 1-based")
        if t > len(self.allowance) or node not in self.targets:
            return None
        cap = self.allowance[t - 1]
        norm = float(np.linalg.norm(nominal_col))
        if cap <= 0.0 or norm == 0.0:
            return None
        if self.kind == "early_flip":
            scale = min(1.0, cap / (2.0 * norm))
            return -2.0 * scale * nominal_col
        if self.kind == "zeroing":
            return -nominal_col
        return None


def zero_schedule(horizon: int) -> DeviationSchedule:
    return DeviationSchedule(
        kind="none", measure="none", budget_c=0.0, m_c=0.0,
        targets=(), allowance=(), worst_norms=(), horizon=horizon,
    )


def _worst_norms(sem: SemInstance) -> tuple[float, ...]:
    return tuple(
        max(float(np.linalg.norm(sem.b_obs[i])), float(np.linalg.norm(sem.b_int[i])))
        for i in range(sem.dag.n_nodes)
    )


def make_early_flip(
    sem: SemInstance,
    measure: str,
    budget_c: float,
    m_c: float,
    horizon: int,
    target_nodes: tuple[int, ...] | None = None,
) -> DeviationSchedule:
    """Front-loaded sign-flip adversary.

    For the first K rounds every targeted node's active column is shifted by
    the magnitude-capped sign flip ``-2 * col * min(1, cap / (2||col||))``.
    DF: K = C/m_c flip rounds, each capped at m_c.  AD: K = ceil(C/m_c)
    rounds whose caps sum exactly to C.
    """
    if budget_c < 0:
        raise BudgetError("budget must be nonnegative")
    if m_c <= 0:
        raise ValueError("per-round cap m_c must be positive")
    if measure not in ("df", "ad"):
        raise ValueError("early_flip needs measure 'df' or 'ad'")
    if target_nodes is None:
        target_nodes = sem.dag.parented_nodes
    if budget_c == 0:
        return zero_schedule(horizon)
    if measure == "df":
        k = int(budget_c / m_c)
        allowance = (m_c,) * k
    else:
        k = int(np.ceil(budget_c / m_c))
        last = budget_c - m_c * (k - 1)
        allowance = (m_c,) * (k - 1) + (last,)
    if k > horizon:
        raise BudgetError(f"schedule needs {k} deviation rounds but horizon is {horizon}")
    return DeviationSchedule(
        kind="early_flip", measure=measure, budget_c=float(budget_c), m_c=float(m_c),
        targets=tuple(target_nodes), allowance=allowance,
        worst_norms=_worst_norms(sem), horizon=horizon,
    )


def make_zeroing(sem: SemInstance, budget_c: float, horizon: int) -> DeviationSchedule:
    """Zero the reward node's column for the first ``budget_c`` rounds.

    Declared under the DF measure with the per-round cap set to the reward
    column's worst norm, so the unified budget is at most ``budget_c``.
    """
    r = sem.dag.reward_node
    if not sem.dag.parents[r]:
        raise ValueError("zeroing needs a reward node with parents")
    if budget_c < 0:
        raise BudgetError("budget must be nonnegative")
    k = int(budget_c)
    if k == 0:
        return zero_schedule(horizon)
    if k > horizon:
        raise BudgetError(f"schedule needs {k} deviation rounds but horizon is {horizon}")
    worst = _worst_norms(sem)
    m_c = max(worst[r], 1e-12)
    return DeviationSchedule(
        kind="zeroing", measure="df", budget_c=float(k) * m_c, m_c=m_c,
        targets=(r,), allowance=(m_c,) * k, worst_norms=worst, horizon=horizon,
    )


def apply(schedule: DeviationSchedule, t: int, nominal: WeightMatrix) -> WeightMatrix:
    """Effective weights at round ``t``: nominal columns plus the rule's deltas."""
    if t < 1:
        raise ValueError("rounds are 1-based")
    if t > schedule.n_deviation_rounds:
        return nominal
    replacements: dict[int, np.ndarray] = {}
    for i in schedule.targets:
        d = schedule.delta(t, i, nominal.cols[i])
        if d is not None:
            replacements[i] = nominal.cols[i] + d
    return nominal.with_columns(replacements) if replacements else nominal


@dataclass
class BudgetReport:
    """Worst-case-over-arms per-node deviation totals for a schedule."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros(0))
    aggregates: np.ndarray = field(default_factory=lambda: np.zeros(0))


def realized_budget(schedule: DeviationSchedule) -> BudgetReport:
    """Per-node deviation-round counts and aggregate norms, checked against
    the declared measure's budget.  Raises :class:`BudgetError` on violation.
    """
    n = len(schedule.worst_norms)
    counts = np.zeros(n)
    aggregates = np.zeros(n)
    for i in schedule.targets:
        worst = schedule.worst_norms[i]
        if worst == 0.0:
            continue
        for cap in schedule.allowance:
            if schedule.kind == "early_flip":
                mag = min(2.0 * worst, cap)
            else:  # zeroing
                mag = worst
            if mag > 0.0:
                counts[i] += 1
                aggregates[i] += mag
    if schedule.measure == "df":
        c_df = schedule.budget_c / schedule.m_c if schedule.m_c > 0 else 0.0
        if counts.max(initial=0.0) > c_df + 1e-9:
            raise BudgetError(
                f"DF budget violated: {counts.max():.0f} deviation rounds > C_DF={c_df:.0f}"
            )
        for i in schedule.targets:
            for cap in schedule.allowance:
                if cap > schedule.m_c + 1e-9:
                    raise BudgetError("DF per-round cap m_c violated")
    elif schedule.measure == "ad":
        if aggregates.max(initial=0.0) > schedule.budget_c + 1e-9:
            raise BudgetError(
                f"AD budget violated: aggregate {aggregates.max():.6g} > C={schedule.budget_c:.6g}"
            )
    else:
        if counts.max(initial=0.0) > 0:
            raise BudgetError("schedule declared no measure but has deviations")
    return BudgetReport(counts=counts, aggregates=aggregates)


def schedule_from_config(
    sem: SemInstance,
    kind: str,
    measure: str,
    budget_c: float,
    m_c: float,
    horizon: int,
) -> DeviationSchedule:
    if kind == "none" or budget_c == 0:
        return zero_schedule(horizon)
    if kind == "early_flip":
        return make_early_flip(sem, measure, budget_c, m_c, horizon)
    if kind == "zeroing":
        return make_zeroing(sem, budget_c, horizon)
    raise ValueError(f"unknown schedule kind {kind!r}")


__all__ = [
    "BudgetError",
    "BudgetReport",
    "DeviationSchedule",
    "apply",
    "make_early_flip",
    "make_zeroing",
    "realized_budget",
    "schedule_from_config",
    "zero_schedule",
]
