"""Conjugate-Gaussian experimental model.

Independent dimensions d = 1..D, observations x_{d,n} ~ Normal(mu_d, sigma^2)
for n = 1..N, prior mu_d ~ Normal(m, s^2). The negative log posterior is an
exact quadratic per dimension, so every potential here (full data, one batch,
scaled batch, leading subset) reduces to a canonical quadratic form with a
closed-form center and stiffness, and the exact Hamiltonian flow is a harmonic
oscillator. Those closed forms are the oracles the integrator and sampler are
tested against.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from subhmc.core import (
    ConfigurationError,
    Hamiltonian,
    KineticEnergy,
    PhaseState,
    PotentialOracle,
    substream,
)

# Stream labels for substream derivation; fixed so layouts never collide.
_DATA_STREAM = 101


@dataclass(frozen=True)
class ModelConfig:
    """Model parameters. Defaults: sigma=2, m=0, s=1, N=500, D=1.

    mu_true supplies the data-generating means; when None they are drawn
    Normal(0, 1) from a dedicated substream of the data seed.
    """

    sigma: float = 2.0
    m: float = 0.0
    s: float = 1.0
    N: int = 500
    D: int = 1
    mu_true: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.sigma <= 0 or self.s <= 0:
            raise ConfigurationError("sigma and s must be positive")
        if self.N < 1 or self.D < 1:
            raise ConfigurationError("N and D must be >= 1")
        if self.mu_true is not None:
            mu = tuple(float(v) for v in self.mu_true)
            if len(mu) != self.D:
                raise ConfigurationError(
                    f"mu_true has length {len(mu)}, expected D={self.D}"
                )
            object.__setattr__(self, "mu_true", mu)


@dataclass(frozen=True)
class DataSet:
    """Observations as a D x N matrix."""

    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2:
            raise ConfigurationError("data must be a D x N matrix")
        object.__setattr__(self, "x", x)

    @property
    def D(self) -> int:
        return self.x.shape[0]

    @property
    def N(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class BatchPartition:
    """Contiguous equal batches: batch j (1-based) owns columns (j-1)B .. jB-1."""

    J: int
    B: int
    N: int

    def __post_init__(self):
        if self.J < 1 or self.B < 1:
            raise ConfigurationError("J and B must be >= 1")
        if self.J * self.B != self.N:
            raise ConfigurationError(
                f"J*B must equal N exactly, got {self.J}*{self.B} != {self.N}"
            )

    def batch_slice(self, j: int) -> slice:
        if not 1 <= j <= self.J:
            raise ConfigurationError(f"batch index {j} outside 1..{self.J}")
        return slice((j - 1) * self.B, j * self.B)


@dataclass(frozen=True)
class GaussianPotential:
    """Weighted Gaussian negative log density over a data subset.

    V(q) = w_like * sum_{d,n} (q_d - x_{d,n})^2 / (2 sigma^2)
         + w_prior * sum_d (q_d - m)^2 / (2 s^2)

    Sufficient statistics (count, sum, sum of squares) are precomputed, so
    evaluation is O(D); cost_units still reports the subset size, which is
    the accounting contract.
    """

    sigma: float
    m: float
    s: float
    n_points: int
    sum_x: np.ndarray
    sum_x2: np.ndarray
    w_like: float
    w_prior: float

    @classmethod
    def from_subset(
        cls,
        cfg: ModelConfig,
        x_subset: np.ndarray,
        w_like: float = 1.0,
        w_prior: float = 1.0,
    ) -> "GaussianPotential":
        x_subset = np.asarray(x_subset, dtype=float)
        return cls(
            sigma=cfg.sigma,
            m=cfg.m,
            s=cfg.s,
            n_points=x_subset.shape[1],
            sum_x=x_subset.sum(axis=1),
            sum_x2=(x_subset**2).sum(axis=1),
            w_like=w_like,
            w_prior=w_prior,
        )

    def _check(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != self.sum_x.shape:
            raise ConfigurationError(
                f"q has shape {q.shape}, expected {self.sum_x.shape}"
            )
        return q

    def value(self, q: np.ndarray) -> float:
        q = self._check(q)
        like = (self.n_points * q**2 - 2.0 * q * self.sum_x + self.sum_x2).sum()
        prior = ((q - self.m) ** 2).sum()
        return float(
            self.w_like * like / (2.0 * self.sigma**2)
            + self.w_prior * prior / (2.0 * self.s**2)
        )

    def gradient(self, q: np.ndarray) -> np.ndarray:
        q = self._check(q)
        like = (self.n_points * q - self.sum_x) / self.sigma**2
        prior = (q - self.m) / self.s**2
        return self.w_like * like + self.w_prior * prior

    def cost_units(self) -> int:
        return self.n_points


@dataclass(frozen=True)
class ScaledPotential:
    """factor * inner; cost accounting is unchanged by scaling."""

    inner: PotentialOracle
    factor: float

    def __post_init__(self):
        if self.factor <= 0:
            raise ConfigurationError("scale factor must be positive")

    def value(self, q: np.ndarray) -> float:
        return self.factor * self.inner.value(q)

    def gradient(self, q: np.ndarray) -> np.ndarray:
        return self.factor * self.inner.gradient(q)

    def cost_units(self) -> int:
        return self.inner.cost_units()


@dataclass(frozen=True)
class QuadraticForm:
    """V(q) = sum_d lambda_d (q_d - c_d)^2 / 2, up to a constant."""

    stiffness: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.stiffness, dtype=float)
        c = np.asarray(self.center, dtype=float)
        if lam.shape != c.shape or lam.ndim != 1:
            raise ConfigurationError("stiffness and center must be equal-length vectors")
        if np.any(lam <= 0):
            raise ConfigurationError("stiffness must be positive")
        object.__setattr__(self, "stiffness", lam)
        object.__setattr__(self, "center", c)

    @property
    def D(self) -> int:
        return self.stiffness.size


@dataclass(frozen=True)
class QuadraticPotential:
    """Oracle wrapper around a canonical quadratic form (touches no data)."""

    form: QuadraticForm

    def value(self, q: np.ndarray) -> float:
        dq = np.asarray(q, dtype=float) - self.form.center
        return float(0.5 * (self.form.stiffness * dq * dq).sum())

    def gradient(self, q: np.ndarray) -> np.ndarray:
        dq = np.asarray(q, dtype=float) - self.form.center
        return self.form.stiffness * dq

    def cost_units(self) -> int:
        return 0


def resolve_mu(cfg: ModelConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.mu_true is not None:
        return np.asarray(cfg.mu_true, dtype=float)
    return rng.standard_normal(cfg.D)


def generate_data(cfg: ModelConfig, rng: np.random.Generator | None = None) -> DataSet:
    """Draw x_{d,n} ~ Normal(mu_d, sigma^2).

    Without an explicit rng the stream derives from cfg.seed, so an identical
    config always regenerates an identical matrix. The means use their own
    substream, so supplying mu_true leaves the noise realization unchanged.
    """
    if rng is None:
        rng = substream(cfg.seed, _DATA_STREAM)
    mu_rng, x_rng = rng.spawn(2)
    mu = resolve_mu(cfg, mu_rng)
    x = mu[:, None] + cfg.sigma * x_rng.standard_normal((cfg.D, cfg.N))
    return DataSet(x)


def full_potential(cfg: ModelConfig, data: DataSet) -> GaussianPotential:
    _check_data(cfg, data)
    return GaussianPotential.from_subset(cfg, data.x)


def batch_potential(
    cfg: ModelConfig, data: DataSet, part: BatchPartition, j: int
) -> GaussianPotential:
    """V_j: batch j's likelihood plus a 1/J share of the prior.

    The even prior split is what makes sum_j V_j = V exact.
    """
    _check_data(cfg, data)
    if part.N != cfg.N:
        raise ConfigurationError("partition does not match the model's N")
    subset = data.x[:, part.batch_slice(j)]
    return GaussianPotential.from_subset(cfg, subset, w_prior=1.0 / part.J)


def scaled_potential(inner: PotentialOracle, factor: float) -> ScaledPotential:
    return ScaledPotential(inner, float(factor))


def subsample_potential(cfg: ModelConfig, data: DataSet, count: int) -> GaussianPotential:
    """Leading `count` observations, scaled by N/count to stand in for V.

    The real-valued scale keeps the stiffness equal to the full potential's
    even when count does not divide N.
    """
    _check_data(cfg, data)
    if not 1 <= count <= cfg.N:
        raise ConfigurationError(f"subsample count {count} outside 1..{cfg.N}")
    scale = cfg.N / count
    return GaussianPotential.from_subset(
        cfg, data.x[:, :count], w_like=scale, w_prior=1.0
    )


def analytic_posterior(cfg: ModelConfig, data: DataSet) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance per dimension (conjugate closed form)."""
    _check_data(cfg, data)
    xbar = data.x.mean(axis=1)
    denom = cfg.sigma**2 + cfg.N * cfg.s**2
    mean = (cfg.N * xbar * cfg.s**2 + cfg.m * cfg.sigma**2) / denom
    var = np.full(cfg.D, cfg.sigma**2 * cfg.s**2 / denom)
    return mean, var


def to_quadratic(pot: PotentialOracle) -> QuadraticForm:
    """Canonical (stiffness, center) of a model potential.

    Raises ConfigurationError for oracles that are not exactly quadratic.
    The returned form's gradient is cross-checked against the oracle at three
    fixed pseudo-random points.
    """
    form = _to_quadratic(pot)
    probe = np.random.default_rng(12345)
    for _ in range(3):
        q = form.center + probe.standard_normal(form.D)
        want = pot.gradient(q)
        got = form.stiffness * (q - form.center)
        scale = np.maximum(1.0, np.abs(want))
        if np.max(np.abs(got - want) / scale) > 1e-9:
            raise ConfigurationError("potential is not the quadratic it claims to be")
    return form


def _to_quadratic(pot: PotentialOracle) -> QuadraticForm:
    if isinstance(pot, QuadraticPotential):
        return pot.form
    if isinstance(pot, ScaledPotential):
        inner = _to_quadratic(pot.inner)
        return QuadraticForm(pot.factor * inner.stiffness, inner.center)
    if isinstance(pot, GaussianPotential):
        D = pot.sum_x.size
        lam_scalar = pot.w_like * pot.n_points / pot.sigma**2 + pot.w_prior / pot.s**2
        lam = np.full(D, lam_scalar)
        # Solve lambda * c = gradient of the linear term.
        rhs = pot.w_like * pot.sum_x / pot.sigma**2 + pot.w_prior * pot.m / pot.s**2
        return QuadraticForm(lam, rhs / lam)
    raise ConfigurationError(f"unsupported oracle type {type(pot).__name__}")


def exact_flow(qf: QuadraticForm, state: PhaseState, t: float) -> PhaseState:
    """Harmonic-oscillator flow for time t: exact, H-conserving, additive in t."""
    if state.dimension != qf.D:
        raise ConfigurationError("state and quadratic form dimensions differ")
    omega = np.sqrt(qf.stiffness)
    dq = state.q - qf.center
    cos = np.cos(omega * t)
    sin = np.sin(omega * t)
    q_new = qf.center + dq * cos + (state.p / omega) * sin
    p_new = -omega * dq * sin + state.p * cos
    return PhaseState(q_new, p_new)


def bias_gradient(
    full: PotentialOracle, approx: PotentialOracle, q: np.ndarray
) -> np.ndarray:
    """Gradient discrepancy grad V(q) - grad V_approx(q), the per-step bias."""
    return np.asarray(full.gradient(q)) - np.asarray(approx.gradient(q))


def _check_data(cfg: ModelConfig, data: DataSet) -> None:
    if data.D != cfg.D or data.N != cfg.N:
        raise ConfigurationError(
            f"data shape {data.D}x{data.N} does not match config {cfg.D}x{cfg.N}"
        )


def export_dataset(data: DataSet, path: str | Path) -> Path:
    """Write observations as CSV rows dim,index,value."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dim", "index", "value"])
        for d in range(data.D):
            for n in range(data.N):
                writer.writerow([d, n, str(data.x[d, n])])
    return path


def import_dataset(path: str | Path) -> DataSet:
    rows: dict[int, dict[int, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["dim", "index", "value"]:
            raise ConfigurationError(
                f"expected header dim,index,value, got {reader.fieldnames}"
            )
        for row in reader:
            rows.setdefault(int(row["dim"]), {})[int(row["index"])] = float(row["value"])
    D = len(rows)
    N = len(rows[0]) if D else 0
    x = np.empty((D, N))
    for d, cols in rows.items():
        for n, v in cols.items():
            x[d, n] = v
    return DataSet(x)


@dataclass(frozen=True)
class ModelContext:
    """A model instance with its partition and cached oracles.

    All scaled batch potentials share the full potential's stiffness and
    differ only in center; `lam` is that common per-dimension stiffness and
    `centers[j-1]` is the center of J*V_j. Chain-level fast paths rely on it.
    """

    cfg: ModelConfig
    data: DataSet
    partition: BatchPartition
    full: GaussianPotential
    batches: tuple[GaussianPotential, ...]
    scaled_batches: tuple[ScaledPotential, ...]
    lam: float
    full_center: np.ndarray
    centers: np.ndarray
    posterior_mean: np.ndarray
    posterior_var: np.ndarray

    @property
    def D(self) -> int:
        return self.cfg.D

    def hamiltonian(self) -> Hamiltonian:
        return Hamiltonian(KineticEnergy(self.cfg.D), self.full)

    def scaled_batch(self, j: int) -> ScaledPotential:
        self.partition.batch_slice(j)  # range check
        return self.scaled_batches[j - 1]


def make_context(cfg: ModelConfig, J: int) -> ModelContext:
    data = generate_data(cfg)
    if cfg.N % J != 0:
        raise ConfigurationError(f"J={J} does not divide N={cfg.N}")
    part = BatchPartition(J=J, B=cfg.N // J, N=cfg.N)
    full = full_potential(cfg, data)
    batches = tuple(batch_potential(cfg, data, part, j) for j in range(1, J + 1))
    scaled = tuple(scaled_potential(b, float(J)) for b in batches)
    full_qf = to_quadratic(full)
    centers = np.stack([to_quadratic(s).center for s in scaled])
    mean, var = analytic_posterior(cfg, data)
    return ModelContext(
        cfg=cfg,
        data=data,
        partition=part,
        full=full,
        batches=batches,
        scaled_batches=scaled,
        lam=float(full_qf.stiffness[0]),
        full_center=full_qf.center,
        centers=centers,
        posterior_mean=mean,
        posterior_var=var,
    )
