"""Strang-split leapfrog integration under data-subsampling schedules.

A schedule assigns a potential oracle to every integrator step: the full
posterior, one scaled batch fixed per trajectory, a random scaled batch per
step, or a symmetric forward-then-reverse sweep over batches. The recorded
integrator logs phase states and both Hamiltonians per step; chains use the
closed-form quadratic propagators at the bottom of this module instead, which
produce endpoints without recording.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import csv

import numpy as np

from subhmc.core import (
    ConfigurationError,
    DivergenceError,
    PhaseState,
    PotentialOracle,
)
from subhmc.model import ModelContext, scaled_potential

# A step whose schedule-Hamiltonian moves by more than this is a blowup, not
# discretization error.
DIVERGENCE_JUMP = 1e6


@dataclass(frozen=True)
class Full:
    """Every step uses the full-data potential."""


@dataclass(frozen=True)
class FixedBatch:
    """Every step uses J * V_j for one fixed batch j (1-based)."""

    j: int


@dataclass(frozen=True)
class PerStepRandom:
    """Each step draws a batch uniformly from the pool; J * V_j per step.

    close_loop appends one extra step reusing the first drawn batch, which
    cancels the boundary term of the step-to-step bias.
    """

    pool: tuple[int, ...]
    close_loop: bool = False


@dataclass(frozen=True)
class PerTrajectoryRandom:
    """One batch drawn per trajectory from the pool, then held fixed."""

    pool: tuple[int, ...]


@dataclass(frozen=True)
class SymmetricSweep:
    """Forward-then-reverse pass over the batches, each visited twice."""

    batches: tuple[int, ...]


@dataclass(frozen=True)
class PartialSymmetricSweep:
    """Symmetric sweep over a sublist, kicks scaled by J/|sublist|."""

    batches: tuple[int, ...]


SubsampleSchedule = Union[
    Full, FixedBatch, PerStepRandom, PerTrajectoryRandom, SymmetricSweep,
    PartialSymmetricSweep,
]


@dataclass(frozen=True)
class StepEntry:
    index: int
    state: PhaseState
    h_full: float
    h_schedule: float
    batch: int | None


@dataclass(frozen=True)
class TrajectoryRecord:
    """Per-step log of a trajectory; entry 0 is the initial state."""

    steps: tuple[StepEntry, ...]
    step_size: float
    n_steps: int
    total_cost_units: int
    elapsed_time: float

    def __post_init__(self):
        if len(self.steps) != self.n_steps + 1:
            raise ConfigurationError("record must hold L+1 entries")

    @property
    def final_state(self) -> PhaseState:
        return self.steps[-1].state


def leapfrog_step(s: PhaseState, eps: float, pot: PotentialOracle) -> PhaseState:
    """Half-kick, drift, half-kick under V = pot."""
    return _kick_drift_kick(s, eps, eps, pot)


def _kick_drift_kick(
    s: PhaseState, kick_eps: float, drift_eps: float, pot: PotentialOracle
) -> PhaseState:
    if kick_eps <= 0 or drift_eps <= 0:
        raise ConfigurationError("step sizes must be positive")
    p_half = s.p - 0.5 * kick_eps * pot.gradient(s.q)
    q_new = s.q + drift_eps * p_half
    p_new = p_half - 0.5 * kick_eps * pot.gradient(q_new)
    out = PhaseState(q_new, p_new)
    if not out.is_finite():
        raise DivergenceError("leapfrog step produced a non-finite state")
    return out


def _validate_pool(pool: tuple[int, ...], ctx: ModelContext) -> None:
    if len(pool) == 0:
        raise ConfigurationError("batch pool must be nonempty")
    for j in pool:
        ctx.partition.batch_slice(j)  # raises on out-of-range indices


def draw_step_batches(
    schedule: PerStepRandom, L: int, rng: np.random.Generator
) -> list[int]:
    """The trajectory's batch sequence, drawn in a single rng call."""
    picks = rng.integers(0, len(schedule.pool), size=L)
    js = [schedule.pool[int(i)] for i in picks]
    if schedule.close_loop:
        js.append(js[0])
    return js


def draw_trajectory_batch(
    schedule: PerTrajectoryRandom, rng: np.random.Generator
) -> int:
    return schedule.pool[int(rng.integers(0, len(schedule.pool)))]


def integrate(
    s0: PhaseState,
    eps: float,
    L: int,
    schedule: SubsampleSchedule,
    ctx: ModelContext,
    rng: np.random.Generator | None = None,
) -> TrajectoryRecord:
    """Apply L recorded leapfrog steps under the schedule.

    Sweep schedules delegate to symmetric_sweep with the nearest whole number
    of sweeps (each sweep is 2*|batches| sub-steps advancing the full flow by
    2*eps); all other schedules advance eps per step.
    """
    if L < 1:
        raise ConfigurationError("L must be >= 1")
    if isinstance(schedule, (SymmetricSweep, PartialSymmetricSweep)):
        n_sweeps = max(1, round(L / (2 * len(schedule.batches))))
        return symmetric_sweep(s0, eps, n_sweeps, schedule.batches, ctx)

    if isinstance(schedule, Full):
        js: list[int | None] = [None] * L
    elif isinstance(schedule, FixedBatch):
        ctx.partition.batch_slice(schedule.j)
        js = [schedule.j] * L
    elif isinstance(schedule, PerTrajectoryRandom):
        _validate_pool(schedule.pool, ctx)
        if rng is None:
            raise ConfigurationError("random schedules need an rng")
        js = [draw_trajectory_batch(schedule, rng)] * L
    elif isinstance(schedule, PerStepRandom):
        _validate_pool(schedule.pool, ctx)
        if rng is None:
            raise ConfigurationError("random schedules need an rng")
        js = list(draw_step_batches(schedule, L, rng))
    else:
        raise ConfigurationError(f"unknown schedule {type(schedule).__name__}")

    oracle_of = lambda j: ctx.full if j is None else ctx.scaled_batch(j)
    return _run_recorded(
        s0,
        ctx,
        [(oracle_of(j), eps, eps, j) for j in js],
        step_size=eps,
    )


def symmetric_sweep(
    s0: PhaseState,
    eps: float,
    sweeps: int,
    batches: tuple[int, ...],
    ctx: ModelContext,
) -> TrajectoryRecord:
    """Run `sweeps` symmetric sweeps, recording every sub-step.

    One sweep visits the batches forward then reversed (2K sub-steps). Each
    sub-step half-kicks with (J/K) * V_j at kick size eps and drifts eps/K, so
    a whole sweep is a symmetric second-order splitting of the full
    Hamiltonian advancing time 2*eps; with K = J the kicks use V_j unscaled.
    Coarse per-sweep states are the recorded entries at stride 2K.
    """
    if sweeps < 1:
        raise ConfigurationError("sweeps must be >= 1")
    if len(batches) == 0:
        raise ConfigurationError("batch list must be nonempty")
    _validate_pool(tuple(batches), ctx)
    K = len(batches)
    scale = ctx.partition.J / K
    sub = {j: scaled_potential(ctx.batches[j - 1], scale) for j in set(batches)}
    order = list(batches) + list(reversed(batches))
    plan = [(sub[j], eps, eps / K, j) for _ in range(sweeps) for j in order]
    return _run_recorded(s0, ctx, plan, step_size=eps)


def _run_recorded(
    s0: PhaseState,
    ctx: ModelContext,
    plan: list[tuple[PotentialOracle, float, float, int | None]],
    step_size: float,
) -> TrajectoryRecord:
    """Execute (oracle, kick_eps, drift_eps, batch) sub-steps with logging."""
    if s0.dimension != ctx.D:
        raise ConfigurationError("state dimension does not match the model")
    if not s0.is_finite():
        raise DivergenceError("initial state is not finite")
    kinetic = lambda p: 0.5 * float(p @ p)
    h_full = lambda st: kinetic(st.p) + ctx.full.value(st.q)

    first_oracle = plan[0][0]
    entries = [
        StepEntry(0, s0, h_full(s0), kinetic(s0.p) + first_oracle.value(s0.q), None)
    ]
    state = s0
    cost = 0
    elapsed = 0.0
    prev_sched = entries[0].h_schedule
    for idx, (oracle, kick_eps, drift_eps, j) in enumerate(plan, start=1):
        try:
            state = _kick_drift_kick(state, kick_eps, drift_eps, oracle)
        except DivergenceError as err:
            raise DivergenceError(str(err), step=idx) from None
        h_sched = kinetic(state.p) + oracle.value(state.q)
        if not np.isfinite(h_sched) or abs(h_sched - prev_sched) > DIVERGENCE_JUMP:
            raise DivergenceError("schedule Hamiltonian diverged", step=idx)
        cost += 2 * oracle.cost_units()
        elapsed += drift_eps
        entries.append(StepEntry(idx, state, h_full(state), h_sched, j))
        prev_sched = h_sched
    return TrajectoryRecord(
        steps=tuple(entries),
        step_size=step_size,
        n_steps=len(plan),
        total_cost_units=cost,
        elapsed_time=elapsed,
    )


def endpoint_error(rec: TrajectoryRecord, oracle_state: PhaseState) -> float:
    """Euclidean phase-space distance between the final and oracle states."""
    final = rec.final_state
    if final.dimension != oracle_state.dimension:
        raise ConfigurationError("states have different dimensions")
    return float(
        np.sqrt(
            np.sum((final.q - oracle_state.q) ** 2)
            + np.sum((final.p - oracle_state.p) ** 2)
        )
    )


def record_to_csv(rec: TrajectoryRecord, path: str | Path, wide: bool = False) -> Path:
    """Columns step,batch,q0,p0,H_full,H_sched; wide adds every coordinate."""
    path = Path(path)
    D = rec.steps[0].state.dimension
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["step", "batch", "q0", "p0", "H_full", "H_sched"]
        if wide:
            header += [f"q{d}" for d in range(1, D)] + [f"p{d}" for d in range(1, D)]
        writer.writerow(header)
        for e in rec.steps:
            row = [
                e.index,
                "" if e.batch is None else e.batch,
                str(e.state.q[0]),
                str(e.state.p[0]),
                str(e.h_full),
                str(e.h_schedule),
            ]
            if wide:
                row += [str(v) for v in e.state.q[1:]]
                row += [str(v) for v in e.state.p[1:]]
            writer.writerow(row)
    return path


# ---------------------------------------------------------------------------
# Closed-form propagation on quadratic targets.
#
# One leapfrog step under V(q) = lambda (q - c)^2 / 2 is the affine map
#     (q - c, p) -> M (q - c, p)
# with the unit-determinant matrix below, so a whole trajectory under a fixed
# center collapses to one matrix power. Chains use this; the recorded
# integrator above stays the reference implementation.

def substep_matrix(lam: float, kick_eps: float, drift_eps: float) -> np.ndarray:
    """Matrix of one half-kick/drift/half-kick with distinct kick and drift sizes."""
    k2 = 0.5 * kick_eps * lam
    a = 1.0 - drift_eps * k2
    return np.array([[a, drift_eps], [-k2 * (2.0 - drift_eps * k2), a]])


def step_matrix(lam: float, eps: float) -> np.ndarray:
    return substep_matrix(lam, eps, eps)


def matrix_power_2x2(M: np.ndarray, L: int) -> np.ndarray:
    if L < 0:
        raise ConfigurationError("power must be >= 0")
    result = np.eye(2)
    base = M
    n = L
    while n:
        if n & 1:
            result = result @ base
        base = base @ base
        n >>= 1
    return result


def propagate_fixed_center(
    s0: PhaseState, eps: float, L: int, lam: float, center: np.ndarray
) -> PhaseState:
    """Endpoint of L leapfrog steps under a quadratic with one center."""
    ML = matrix_power_2x2(step_matrix(lam, eps), L)
    dq = s0.q - center
    q_new = center + ML[0, 0] * dq + ML[0, 1] * s0.p
    p_new = ML[1, 0] * dq + ML[1, 1] * s0.p
    out = PhaseState(q_new, p_new)
    if not out.is_finite():
        raise DivergenceError("quadratic propagation produced a non-finite state")
    return out


def propagate_per_step_centers(
    s0: PhaseState, eps: float, lam: float, centers: np.ndarray
) -> PhaseState:
    """Endpoint of len(centers) leapfrog steps, step l centered at centers[l]."""
    M = step_matrix(lam, eps)
    q, p = s0.q, s0.p
    for c in centers:
        dq = q - c
        q = c + M[0, 0] * dq + M[0, 1] * p
        p = M[1, 0] * dq + M[1, 1] * p
    out = PhaseState(q, p)
    if not out.is_finite():
        raise DivergenceError("quadratic propagation produced a non-finite state")
    return out
