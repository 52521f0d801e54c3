"""Scenario drivers: calibrated chains and trajectory studies written as CSVs.

Each scenario reads the flat config mapping (see config.SCHEMA), runs fully
seeded computations, and writes one CSV with a fixed header into the output
directory. Identical config and seed give byte-identical files.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from subhmc.core import ConfigurationError, DivergenceError, PhaseState, substream
from subhmc.integrate import (
    DIVERGENCE_JUMP,
    FixedBatch,
    Full,
    PartialSymmetricSweep,
    PerStepRandom,
    PerTrajectoryRandom,
    SubsampleSchedule,
    SymmetricSweep,
    endpoint_error,
    integrate,
    leapfrog_step,
    symmetric_sweep,
)
from subhmc.model import (
    ModelConfig,
    exact_flow,
    full_potential,
    generate_data,
    make_context,
    subsample_potential,
    to_quadratic,
)
from subhmc.sampler import SamplerConfig, run_chain

_PLATEAU_STREAM = 301


@dataclass(frozen=True)
class ScenarioResult:
    path: Path
    summary: str


def model_config_from(cfg: Mapping[str, Any], dimensions: int | None = None) -> ModelConfig:
    D = cfg["model.D"] if dimensions is None else dimensions
    mu = cfg["model.mu"]
    return ModelConfig(
        sigma=cfg["model.sigma"],
        m=cfg["model.m"],
        s=cfg["model.s"],
        N=cfg["model.N"],
        D=D,
        mu_true=None if mu is None else (float(mu),) * D,
        seed=cfg["seed"],
    )


def _require_1d(cfg: Mapping[str, Any], scenario: str) -> None:
    if cfg["model.D"] != 1:
        raise ConfigurationError(f"{scenario} requires model.D=1")


def _write_csv(path: Path, header: list[str], rows: Iterable[list]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path


def _fmt(value: float) -> str:
    return str(float(value))


def calibrate_eps(
    ctx,
    target_accept: float,
    n_iterations: int = 500,
    tau_max: float | None = None,
    seed: int = 0,
    lo: float = 1e-4,
    hi: float = 1.0,
    tol: float = 0.05,
    max_bisections: int = 20,
) -> float:
    """Step size whose full-schedule pilot acceptance is near the target.

    Bisection over [lo, hi] against short pilot chains, reusing one seed so
    every probe shares its random draws. Stops inside +/- tol of the target or
    after max_bisections halvings. A target outside what the bracket can reach
    returns the nearest boundary and emits a warning.
    """
    if not 0.0 < target_accept < 1.0:
        raise ConfigurationError("target acceptance must lie in (0, 1)")

    kwargs = {} if tau_max is None else {"tau_max": tau_max}

    def pilot_accept(eps: float) -> float:
        pilot = SamplerConfig(eps=eps, n_iterations=n_iterations, seed=seed, **kwargs)
        try:
            return run_chain(pilot, ctx).summary.mean_accept
        except DivergenceError:
            return 0.0

    # Bisection needs the target bracketed: acceptance falls as eps grows, so
    # the reachable band is [accept(hi), accept(lo)].
    if pilot_accept(lo) < target_accept:
        warnings.warn(
            f"target acceptance {target_accept} unattainable even at eps={lo}"
        )
        return lo
    if pilot_accept(hi) > target_accept:
        warnings.warn(
            f"target acceptance {target_accept} already exceeded at eps={hi}"
        )
        return hi
    mid = 0.5 * (lo + hi)
    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        accept = pilot_accept(mid)
        if abs(accept - target_accept) <= tol:
            return mid
        if accept > target_accept:
            lo = mid
        else:
            hi = mid
    return mid


def scenario_trajectory(cfg: Mapping[str, Any], out_dir: Path | None = None) -> ScenarioResult:
    """Exact vs numerical flows for the full posterior and fixed subsets.

    Writes series,t_or_step,q,p with series exact_full / numerical_full and
    exact_B{count} / numerical_B{count} per configured subset size; every
    series shares the initial state and total time.
    """
    _require_1d(cfg, "trajectory")
    out_dir = Path(cfg["output.dir"]) if out_dir is None else Path(out_dir)
    mc = model_config_from(cfg)
    data = generate_data(mc)
    eps = cfg["trajectory.eps"]
    tau = cfg["trajectory.tau"]
    L = max(1, round(tau / eps))
    s0 = PhaseState(np.array([cfg["trajectory.q0"]]), np.array([cfg["trajectory.p0"]]))

    oracles = [("full", full_potential(mc, data))]
    for count in cfg["trajectory.subsets"]:
        oracles.append((f"B{count}", subsample_potential(mc, data, count)))

    rows: list[list] = []
    tracking_error = 0.0
    for name, pot in oracles:
        form = to_quadratic(pot)
        states = [s0]
        state = s0
        h_prev = 0.5 * float(s0.p @ s0.p) + pot.value(s0.q)
        for _ in range(L):
            state = leapfrog_step(state, eps, pot)
            h = 0.5 * float(state.p @ state.p) + pot.value(state.q)
            if not np.isfinite(h) or abs(h - h_prev) > DIVERGENCE_JUMP:
                raise DivergenceError(f"series {name} diverged", step=len(states))
            h_prev = h
            states.append(state)
        for k, st in enumerate(states):
            t = k * eps
            ex = exact_flow(form, s0, t)
            rows.append([f"exact_{name}", _fmt(t), _fmt(ex.q[0]), _fmt(ex.p[0])])
            rows.append([f"numerical_{name}", _fmt(t), _fmt(st.q[0]), _fmt(st.p[0])])
            if name == "full":
                dist = float(
                    np.hypot(st.q[0] - ex.q[0], st.p[0] - ex.p[0])
                )
                tracking_error = max(tracking_error, dist)
    rows.sort(key=lambda r: (r[0], float(r[1])))

    path = _write_csv(out_dir / "trajectory.csv", ["series", "t_or_step", "q", "p"], rows)
    return ScenarioResult(
        path,
        f"trajectory: max full-flow tracking distance {tracking_error:.3g} "
        f"over tau={tau:g} at eps={eps:g} -> {path}",
    )


def scenario_dimscan(cfg: Mapping[str, Any], out_dir: Path | None = None) -> ScenarioResult:
    """Acceptance decay across dimensions for full and subsampled chains.

    Per dimension: calibrate the step size on full-data pilots, run the full
    chain at that step, and run both subsampled variants (batch pool = first
    dimscan.pool batches) at the calibrated step divided by the cost factor.
    Writes variant,D,eps,mean_accept,mean_abs_z,cost_units.
    """
    out_dir = Path(cfg["output.dir"]) if out_dir is None else Path(out_dir)
    J = cfg["model.J"]
    pool_size = cfg["dimscan.pool"]
    if pool_size > J:
        raise ConfigurationError("dimscan.pool cannot exceed model.J")
    pool = tuple(range(1, pool_size + 1))
    factor = cfg["dimscan.cost_factor"]
    iterations = cfg["dimscan.iterations"]
    seed = cfg["seed"]

    rows: list[list] = []
    full_accepts: list[float] = []
    drops: dict[str, list[float]] = {"per_trajectory": [], "per_step": []}
    for D in cfg["dimscan.dims"]:
        ctx = make_context(model_config_from(cfg, dimensions=D), J)
        eps_star = calibrate_eps(
            ctx,
            cfg["dimscan.target_accept"],
            n_iterations=cfg["dimscan.pilot_iterations"],
            seed=seed,
        )
        eps_sub = eps_star / factor
        variants: list[tuple[str, float, SubsampleSchedule]] = [
            ("full", eps_star, Full()),
            ("per_trajectory", eps_sub, PerTrajectoryRandom(pool)),
            ("per_step", eps_sub, PerStepRandom(pool)),
        ]
        for name, eps, schedule in variants:
            chain_cfg = SamplerConfig(
                eps=eps, n_iterations=iterations, schedule=schedule, seed=seed
            )
            summary = run_chain(chain_cfg, ctx).summary
            rows.append(
                [
                    name,
                    D,
                    _fmt(eps),
                    _fmt(summary.mean_accept),
                    _fmt(summary.mean_abs_z),
                    summary.total_cost_units,
                ]
            )
            if name == "full":
                full_accepts.append(summary.mean_accept)
            else:
                drops[name].append(summary.mean_accept)

    path = _write_csv(
        out_dir / "dimscan.csv",
        ["variant", "D", "eps", "mean_accept", "mean_abs_z", "cost_units"],
        rows,
    )
    drop_ps = drops["per_step"][0] - drops["per_step"][-1]
    drop_pt = drops["per_trajectory"][0] - drops["per_trajectory"][-1]
    return ScenarioResult(
        path,
        f"dimscan: full acceptance min {min(full_accepts):.3f}; acceptance drop "
        f"per_trajectory {drop_pt:.3f}, per_step {drop_ps:.3f} -> {path}",
    )


def scenario_sweep(cfg: Mapping[str, Any], out_dir: Path | None = None) -> ScenarioResult:
    """Symmetric-sweep traces at several step sizes.

    For each step size: trace intermediate@{eps} logs every sub-step and
    coarse@{eps} keeps only whole-sweep boundaries, both indexed by sub-step.
    Writes trace,index,q,p,H_full.
    """
    _require_1d(cfg, "sweep")
    out_dir = Path(cfg["output.dir"]) if out_dir is None else Path(out_dir)
    ctx = make_context(model_config_from(cfg), cfg["model.J"])
    batches = tuple(range(1, cfg["model.J"] + 1))
    sweeps = cfg["sweep.sweeps"]
    s0 = PhaseState(np.array([cfg["sweep.q0"]]), np.array([cfg["sweep.p0"]]))

    rows: list[list] = []
    spreads: dict[float, float] = {}
    stride = 2 * len(batches)
    for eps in cfg["sweep.eps_scan"]:
        rec = symmetric_sweep(s0, eps, sweeps, batches, ctx)
        for entry in rec.steps:
            rows.append(
                [
                    f"intermediate@{eps:g}",
                    entry.index,
                    _fmt(entry.state.q[0]),
                    _fmt(entry.state.p[0]),
                    _fmt(entry.h_full),
                ]
            )
        coarse = rec.steps[::stride]
        h_coarse = np.array([e.h_full for e in coarse])
        spreads[eps] = float(np.max(np.abs(h_coarse - np.median(h_coarse))))
        for entry in coarse:
            rows.append(
                [
                    f"coarse@{eps:g}",
                    entry.index,
                    _fmt(entry.state.q[0]),
                    _fmt(entry.state.p[0]),
                    _fmt(entry.h_full),
                ]
            )

    path = _write_csv(out_dir / "sweep.csv", ["trace", "index", "q", "p", "H_full"], rows)
    spread_text = ", ".join(f"{eps:g}: {val:.3g}" for eps, val in spreads.items())
    return ScenarioResult(
        path, f"sweep: coarse energy spread by eps {{{spread_text}}} -> {path}"
    )


def scenario_plateau(cfg: Mapping[str, Any], out_dir: Path | None = None) -> ScenarioResult:
    """Endpoint error against the exact full flow across a step-size grid.

    Five variants: full, fixed_batch, per_step (random pool draws), and the
    two sweep schedules. Sweep variants run whole sweeps closest to the
    requested time; comparisons always use each record's own elapsed time.
    Writes variant,eps,endpoint_error.
    """
    _require_1d(cfg, "plateau")
    out_dir = Path(cfg["output.dir"]) if out_dir is None else Path(out_dir)
    J = cfg["model.J"]
    ctx = make_context(model_config_from(cfg), J)
    form = to_quadratic(ctx.full)
    tau = cfg["plateau.tau"]
    pool = tuple(cfg["plateau.pool"])
    if len(set(pool)) >= J:
        raise ConfigurationError("plateau.pool must be a strict subset of the batches")
    all_batches = tuple(range(1, J + 1))
    s0 = PhaseState(np.array([cfg["plateau.q0"]]), np.array([cfg["plateau.p0"]]))

    variants: list[tuple[str, SubsampleSchedule]] = [
        ("full", Full()),
        ("fixed_batch", FixedBatch(cfg["plateau.batch"])),
        ("per_step", PerStepRandom(pool)),
        ("partial_sweep", PartialSymmetricSweep(tuple(cfg["plateau.partial"]))),
        ("full_sweep", SymmetricSweep(all_batches)),
    ]
    rows: list[list] = []
    errors: dict[str, list[float]] = {}
    for name, schedule in variants:
        for i_eps, eps in enumerate(cfg["plateau.eps_grid"]):
            if isinstance(schedule, (SymmetricSweep, PartialSymmetricSweep)):
                sweeps = max(1, round(tau / (2.0 * eps)))
                rec = symmetric_sweep(s0, eps, sweeps, schedule.batches, ctx)
            else:
                L = max(1, round(tau / eps))
                rng = None
                if isinstance(schedule, PerStepRandom):
                    rng = np.random.default_rng(
                        substream(cfg["seed"], _PLATEAU_STREAM, i_eps)
                    )
                rec = integrate(s0, eps, L, schedule, ctx, rng=rng)
            err = endpoint_error(rec, exact_flow(form, s0, rec.elapsed_time))
            errors.setdefault(name, []).append(err)
            rows.append([name, _fmt(eps), _fmt(err)])

    path = _write_csv(out_dir / "plateau.csv", ["variant", "eps", "endpoint_error"], rows)
    floor = errors["fixed_batch"][-1]
    decay = errors["full"][-1] / errors["full"][0] if errors["full"][0] else 0.0
    return ScenarioResult(
        path,
        f"plateau: fixed_batch floor {floor:.3g}, full error ratio "
        f"(smallest/largest eps) {decay:.3g} -> {path}",
    )


SCENARIOS = {
    "trajectory": scenario_trajectory,
    "dimscan": scenario_dimscan,
    "sweep": scenario_sweep,
    "plateau": scenario_plateau,
}
