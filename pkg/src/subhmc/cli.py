"""Command-line entry point for scenarios, single chains, and self-checks.

Exit codes: 0 success, 1 selftest failure, 2 configuration error (the message
names the offending key), 3 numerical divergence (the message names the
scenario).
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from subhmc.config import SCHEMA, load_config
from subhmc.core import ConfigurationError, DivergenceError, PhaseState
from subhmc.expt import SCENARIOS
from subhmc.integrate import (
    FixedBatch,
    Full,
    PerStepRandom,
    PerTrajectoryRandom,
    integrate,
    leapfrog_step,
)
from subhmc.model import (
    ModelConfig,
    QuadraticForm,
    QuadraticPotential,
    analytic_posterior,
    exact_flow,
    full_potential,
    generate_data,
    make_context,
    to_quadratic,
)
from subhmc.sampler import SamplerConfig, acceptance_probability, run_chain, trace_to_csv

try:
    from subhmc import __version__
except ImportError:  # pragma: no cover
    __version__ = "unknown"


def _epilog() -> str:
    lines = [
        "precedence: key=value overrides beat --config file entries, which beat",
        "defaults; --seed beats all of them for the seed key.",
        "",
        "config keys (key: default -- description):",
    ]
    for key, (default, _, help_text) in SCHEMA.items():
        if isinstance(default, tuple):
            shown = ",".join(str(v) for v in default)
        else:
            shown = str(default)
        lines.append(f"  {key}: {shown} -- {help_text}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subhmc",
        description=(
            "HMC on a conjugate Gaussian model with data-subsampling schedules: "
            "scenario CSV artifacts, single chains, and built-in self-checks."
        ),
        epilog=_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", metavar="FILE", help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="root seed (overrides everything)")
    parser.add_argument(
        "command",
        choices=["trajectory", "dimscan", "sweep", "plateau", "chain", "selftest"],
        help="scenario to run, a single chain, or the invariant self-checks",
    )
    parser.add_argument(
        "overrides",
        nargs="*",
        metavar="key=value",
        help="config overrides, e.g. model.D=10 sampler.eps=0.05",
    )
    return parser


def _schedule_from(cfg: dict):
    name = cfg["sampler.schedule"]
    pool = tuple(cfg["sampler.pool"])
    if name == "full":
        return Full()
    if name == "fixed_batch":
        return FixedBatch(cfg["sampler.batch"])
    if name == "per_step":
        return PerStepRandom(pool)
    if name == "per_trajectory":
        return PerTrajectoryRandom(pool)
    raise ConfigurationError(f"unknown sampler.schedule: {name}")


def _run_chain_command(cfg: dict) -> str:
    mu = cfg["model.mu"]
    D = cfg["model.D"]
    mc = ModelConfig(
        sigma=cfg["model.sigma"],
        m=cfg["model.m"],
        s=cfg["model.s"],
        N=cfg["model.N"],
        D=D,
        mu_true=None if mu is None else (float(mu),) * D,
        seed=cfg["seed"],
    )
    ctx = make_context(mc, cfg["model.J"])
    chain_cfg = SamplerConfig(
        eps=cfg["sampler.eps"],
        tau_max=cfg["sampler.tau_max"],
        n_iterations=cfg["sampler.iterations"],
        metropolis=cfg["sampler.metropolis"],
        schedule=_schedule_from(cfg),
        seed=cfg["seed"],
        warmup_frac=cfg["sampler.warmup_frac"],
    )
    run = run_chain(chain_cfg, ctx)
    out_dir = Path(cfg["output.dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    trace = trace_to_csv(run, out_dir / "chain_trace.csv")
    s = run.summary
    return (
        f"chain: mean_accept={s.mean_accept:.6f} "
        f"est_mean={float(s.est_mean[0])!r} "
        f"analytic_mean={float(s.analytic_mean[0])!r} "
        f"est_var={float(s.est_var[0])!r} "
        f"mean_abs_z={s.mean_abs_z:.6f} n_kept={s.n_kept} "
        f"cost_units={s.total_cost_units} -> {trace}"
    )


def _selftest_checks():
    """Fast invariant checks runnable without test files; yields (name, fn)."""

    def hamiltonian_value_check():
        from subhmc.core import Hamiltonian, KineticEnergy, ZeroPotential, hamiltonian_value

        ham = Hamiltonian(KineticEnergy(2), ZeroPotential())
        value = hamiltonian_value(ham, PhaseState(np.zeros(2), np.array([3.0, 4.0])))
        assert value == 12.5, f"got {value}"

    def leapfrog_example_check():
        pot = QuadraticPotential(QuadraticForm(np.array([1.0]), np.array([0.0])))
        out = leapfrog_step(PhaseState(np.array([1.0]), np.array([0.0])), 0.1, pot)
        assert abs(out.q[0] - 0.995) < 1e-15 and abs(out.p[0] + 0.09975) < 1e-15

    def decomposition_check():
        mc = ModelConfig(seed=3)
        data = generate_data(mc)
        ctx = make_context(mc, 25)
        rng = np.random.default_rng(7)
        for _ in range(20):
            q = rng.normal(scale=2.0, size=1)
            total = sum(b.gradient(q) for b in ctx.batches)
            assert np.max(np.abs(total - ctx.full.gradient(q))) < 1e-12
        del data

    def posterior_quadrature_check():
        from scipy.integrate import trapezoid

        mc = ModelConfig(seed=5)
        data = generate_data(mc)
        mean_a, var_a = analytic_posterior(mc, data)
        pot = full_potential(mc, data)
        sd = math.sqrt(float(var_a[0]))
        grid = np.linspace(mean_a[0] - 10 * sd, mean_a[0] + 10 * sd, 100_001)
        v = np.array([pot.value(np.array([g])) for g in grid])
        w = np.exp(-(v - v.min()))
        z = trapezoid(w, grid)
        mean_q = trapezoid(grid * w, grid) / z
        var_q = trapezoid((grid - mean_q) ** 2 * w, grid) / z
        assert abs(mean_q - mean_a[0]) <= 1e-6 * abs(mean_a[0])
        assert abs(var_q - var_a[0]) <= 1e-6 * var_a[0]

    def exact_flow_check():
        form = QuadraticForm(np.array([2.5]), np.array([0.3]))
        s0 = PhaseState(np.array([1.1]), np.array([-0.4]))
        h0 = 0.5 * s0.p[0] ** 2 + 0.5 * 2.5 * (s0.q[0] - 0.3) ** 2
        for t in (0.1, 1.0, 10.0):
            st = exact_flow(form, s0, t)
            h = 0.5 * st.p[0] ** 2 + 0.5 * 2.5 * (st.q[0] - 0.3) ** 2
            assert abs(h - h0) < 1e-12 * max(1.0, abs(h0))
        ab = exact_flow(form, exact_flow(form, s0, 0.4), 0.3)
        direct = exact_flow(form, s0, 0.7)
        assert abs(ab.q[0] - direct.q[0]) < 1e-12 and abs(ab.p[0] - direct.p[0]) < 1e-12

    def reversibility_check():
        ctx = make_context(ModelConfig(seed=9), 25)
        s0 = PhaseState(np.array([0.4]), np.array([0.8]))
        fwd = integrate(s0, 0.01, 100, Full(), ctx)
        back = integrate(fwd.final_state.negate_momentum(), 0.01, 100, Full(), ctx)
        rec = back.final_state.negate_momentum()
        assert np.max(np.abs(rec.q - s0.q)) < 1e-8 and np.max(np.abs(rec.p - s0.p)) < 1e-8

    def determinant_check():
        ctx = make_context(ModelConfig(seed=9), 25)
        base = PhaseState(np.array([0.7]), np.array([-0.2]))
        out0 = leapfrog_step(base, 0.05, ctx.full)
        out_q = leapfrog_step(PhaseState(base.q + 1.0, base.p), 0.05, ctx.full)
        out_p = leapfrog_step(PhaseState(base.q, base.p + 1.0), 0.05, ctx.full)
        det = (out_q.q[0] - out0.q[0]) * (out_p.p[0] - out0.p[0]) - (
            out_p.q[0] - out0.q[0]
        ) * (out_q.p[0] - out0.p[0])
        assert abs(det - 1.0) < 1e-12

    def acceptance_check():
        assert acceptance_probability(1.0, 1.0) == 1.0
        assert abs(acceptance_probability(0.0, math.log(2.0)) - 0.5) < 1e-15
        assert acceptance_probability(0.0, float("inf")) == 0.0

    def chain_determinism_check():
        ctx = make_context(ModelConfig(seed=2), 25)
        cfg = SamplerConfig(eps=0.05, n_iterations=50, seed=4)
        a = run_chain(cfg, ctx)
        b = run_chain(cfg, ctx)
        assert np.array_equal(a.q0_trace, b.q0_trace)

    def batch_center_check():
        mc = ModelConfig(seed=6)
        data = generate_data(mc)
        full_form = to_quadratic(full_potential(mc, data))
        ctx = make_context(mc, 25)
        scaled_form = to_quadratic(ctx.scaled_batch(1))
        assert abs(scaled_form.stiffness[0] - full_form.stiffness[0]) < 1e-9
        assert scaled_form.center[0] != full_form.center[0]

    return [
        ("hamiltonian value", hamiltonian_value_check),
        ("leapfrog step example", leapfrog_example_check),
        ("potential decomposition", decomposition_check),
        ("posterior vs quadrature", posterior_quadrature_check),
        ("exact flow conservation", exact_flow_check),
        ("reversibility", reversibility_check),
        ("volume preservation", determinant_check),
        ("acceptance probability", acceptance_check),
        ("chain determinism", chain_determinism_check),
        ("scaled batch curvature", batch_center_check),
    ]


def _run_selftest() -> int:
    failures = 0
    for name, check in _selftest_checks():
        try:
            check()
        except AssertionError as err:
            failures += 1
            print(f"FAIL {name}: {err}")
        except Exception as err:  # pragma: no cover - defensive
            failures += 1
            print(f"FAIL {name}: {type(err).__name__}: {err}")
        else:
            print(f"ok   {name}")
    if failures:
        print(f"selftest: {failures} check(s) failed")
        return 1
    print("selftest: all checks passed")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, list(args.overrides), args.seed)
    except ConfigurationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    if args.command == "selftest":
        return _run_selftest()

    try:
        if args.command == "chain":
            print(_run_chain_command(cfg))
        else:
            result = SCENARIOS[args.command](cfg)
            print(result.summary)
    except ConfigurationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except DivergenceError as err:
        print(f"error: divergence in {args.command}: {err}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
