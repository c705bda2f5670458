"""Truncated preconditioned CG on ``L x = 0``, with optional restarts.

Running PCG formally on the homogeneous system ``L x = 0`` from the noisy
signal drives ``x`` toward the kernel of ``L`` (piecewise constants in the
edge-aware graph metric). Stopping after a few operator applications leaves a
smoothed signal; the iteration count is the regularizer, so there is no
tolerance-based stopping.

Each cycle costs ``k_max`` applications of ``L``: one for the initial residual
and one ``L p`` per inner step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import BreakdownError, SpecificationError
from .graph_operators import BandedSymOperator, build_operator
from .iterated_filters import GuidancePolicy, IterationLog
from .signal_core import Signal

__all__ = [
    "FREEZE_AT_RESTART",
    "REFRESH_EVERY_STEP",
    "CgSchedule",
    "PcgState",
    "pcg_truncated",
    "pcg_restarted",
]

FREEZE_AT_RESTART = "restart"
REFRESH_EVERY_STEP = "step"

# residuals below this fraction of ||D x|| are rounding noise, treated as zero
ZERO_RESIDUAL_RTOL = 1e-14


@dataclass(frozen=True)
class CgSchedule:
    """``l_max`` cycles of ``k_max`` operator applications each."""

    k_max: int
    l_max: int = 1
    guidance: GuidancePolicy = GuidancePolicy("self")
    freeze_policy: str = FREEZE_AT_RESTART

    def __post_init__(self):
        if self.k_max < 1 or self.l_max < 1:
            raise SpecificationError("k_max and l_max must be >= 1")
        if self.freeze_policy not in (FREEZE_AT_RESTART, REFRESH_EVERY_STEP):
            raise SpecificationError(f"unknown freeze policy {self.freeze_policy!r}")

    @property
    def applications(self) -> int:
        return self.k_max * self.l_max


@dataclass
class PcgState:
    x: np.ndarray
    r: np.ndarray
    s: Optional[np.ndarray] = None
    p: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    gamma: float = math.nan
    gamma_old: float = math.nan
    alpha: float = math.nan
    beta: float = math.nan
    k: int = 0


def _pcg_cycle(
    x: np.ndarray,
    op: BandedSymOperator,
    k_max: int,
    log: IterationLog,
    applications: int,
    rebuild: Optional[Callable[[np.ndarray], BandedSymOperator]] = None,
    callback: Optional[Callable[[PcgState], None]] = None,
):
    """One truncated PCG cycle. Returns ``(x, applications)``.

    ``rebuild`` (when given) re-derives the operator from the current
    iterate before every inner step instead of keeping ``op`` frozen.
    Raises ``BreakdownError`` on ``p.q <= 0`` or a non-finite step.
    """
    x = x.copy()
    r = op.wx(x) - op.degrees * x
    applications += 1
    state = PcgState(x=x, r=r)
    log.record(len(log.records), applications, x, float(np.linalg.norm(r)))
    floor = ZERO_RESIDUAL_RTOL * float(np.linalg.norm(op.degrees * x))
    for k in range(1, k_max):
        if rebuild is not None and k > 1:
            op = rebuild(x)
        s = r / op.degrees
        gamma = float(s @ r)
        if float(np.linalg.norm(r)) <= floor:
            # x already lies in the kernel of the frozen operator
            log.event(f"zero residual at step {k}; cycle stopped")
            break
        if gamma < 0.0:
            log.event(f"indefinite preconditioner: gamma={gamma:.3e} at step {k}")
        if k == 1:
            beta = math.nan
            p = s
        else:
            beta = gamma / state.gamma_old
            p = s + beta * p
        q = op.degrees * p - op.wx(p)
        applications += 1
        pq = float(p @ q)
        alpha = gamma / pq if pq != 0.0 else math.inf
        if pq <= 0.0 or not math.isfinite(alpha):
            log.event(f"breakdown at step {k}: p.q={pq:.3e}")
            raise BreakdownError(f"p.q={pq:.3e} at step {k}", iterate=x, log=log,
                                 applications=applications)
        x = x + alpha * p
        r = r - alpha * q
        state.x, state.r, state.s, state.p, state.q = x, r, s, p, q
        state.gamma_old = gamma
        state.gamma, state.alpha, state.beta, state.k = gamma, alpha, beta, k
        log.record(len(log.records), applications, x, float(np.linalg.norm(r)))
        if callback is not None:
            callback(state)
    return x, applications


def pcg_truncated(
    x0: Signal,
    g,
    params,
    k_max: int,
    log: Optional[IterationLog] = None,
    *,
    callback: Optional[Callable[[PcgState], None]] = None,
):
    """Truncated PCG with weights frozen from the guide ``g``.

    Returns ``(signal, log)``. ``k_max == 1`` only evaluates the residual and
    returns ``x0`` unchanged. On breakdown a ``BreakdownError`` carrying the
    last finite iterate is raised.
    """
    if k_max < 1:
        raise SpecificationError("k_max must be >= 1")
    if log is None:
        log = IterationLog()
    op = build_operator(g, params)
    if np.any(op.degrees <= 0):
        raise SpecificationError("operator has non-positive degrees")
    try:
        x, _ = _pcg_cycle(x0.samples, op, k_max, log, log.applications, callback=callback)
    except BreakdownError as exc:
        exc.iterate = x0.with_samples(exc.iterate)
        raise
    return x0.with_samples(x), log


def pcg_restarted(
    x0: Signal,
    params,
    schedule: CgSchedule,
    log: Optional[IterationLog] = None,
    *,
    callback: Optional[Callable[[PcgState], None]] = None,
    on_cycle: Optional[Callable[[int, np.ndarray, int], None]] = None,
):
    """Restarted truncated PCG for the nonlinear self-guided filters.

    Every restart rebuilds ``W(x)``, ``D(x)`` from the current iterate and
    runs a fresh cycle of ``k_max`` applications (no CG state crosses a
    restart). With ``freeze_policy="step"`` the weights are also refreshed
    before each inner step. A breakdown ends the current cycle only; it is
    recorded in ``log.events``.

    With fixed guidance every cycle reuses the operator of the guide, so
    ``l_max == 1`` is exactly ``pcg_truncated``.

    ``on_cycle(cycle, x, applications)`` is called after every cycle; since a
    cycle never looks ahead, the state after cycle ``l`` of a long run equals
    the result of a run with ``l_max == l``.
    """
    if log is None:
        log = IterationLog()
    if schedule.guidance.is_fixed:
        fixed = build_operator(schedule.guidance.guide, params)

        def rebuild(v):
            return fixed

        per_step = None
    else:

        def rebuild(v):
            return build_operator(x0.with_samples(v), params)

        per_step = rebuild if schedule.freeze_policy == REFRESH_EVERY_STEP else None
    x = x0.samples
    applications = log.applications
    for cycle in range(1, schedule.l_max + 1):
        op = rebuild(x)
        try:
            x, applications = _pcg_cycle(x, op, schedule.k_max, log, applications,
                                         rebuild=per_step, callback=callback)
        except BreakdownError as exc:
            log.event(f"cycle {cycle} aborted, continuing with last iterate")
            x = exc.iterate
            applications = exc.applications
        if on_cycle is not None:
            on_cycle(cycle, x, applications)
    return x0.with_samples(x), log
