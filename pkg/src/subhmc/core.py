"""Phase-space primitives: states, the Gaussian kinetic energy, and separable
Hamiltonians H(q, p) = T(p) + V(q).

Everything here is an immutable value; randomness enters only through
explicitly passed numpy generators so that runs are reproducible under a
root seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np


class ConfigurationError(ValueError):
    """Invalid dimensions, parameters, or configuration keys."""


class DivergenceError(RuntimeError):
    """A numerical trajectory produced a non-finite state."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ConfigurationError(f"{name} must be a 1-d vector of length >= 1")
    return arr


@dataclass(frozen=True)
class PhaseState:
    """Position q and momentum p of equal dimension."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = _as_vector(self.q, "q")
        p = _as_vector(self.p, "p")
        if q.shape != p.shape:
            raise ConfigurationError(
                f"q and p must share a dimension, got {q.shape} vs {p.shape}"
            )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def dimension(self) -> int:
        return self.q.size

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p)))

    def negate_momentum(self) -> "PhaseState":
        return PhaseState(self.q, -self.p)


@runtime_checkable
class PotentialOracle(Protocol):
    """Potential energy surface: value, gradient, and a data-touch count.

    cost_units() reports how many observations one gradient evaluation
    touches; it is an accounting quantity, independent of how the
    implementation caches sufficient statistics.
    """

    def value(self, q: np.ndarray) -> float: ...

    def gradient(self, q: np.ndarray) -> np.ndarray: ...

    def cost_units(self) -> int: ...


@dataclass(frozen=True)
class ZeroPotential:
    """V identically zero; free motion."""

    def value(self, q: np.ndarray) -> float:
        return 0.0

    def gradient(self, q: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(q, dtype=float))

    def cost_units(self) -> int:
        return 0


@dataclass(frozen=True)
class KineticEnergy:
    """T(p) = |p|^2 / 2 with an implied identity mass matrix."""

    dimension: int

    def __post_init__(self):
        if self.dimension < 1:
            raise ConfigurationError("dimension must be >= 1")

    def value(self, p: np.ndarray) -> float:
        p = self._check(p)
        return 0.5 * float(p @ p)

    def gradient(self, p: np.ndarray) -> np.ndarray:
        return self._check(p).copy()

    def _check(self, p) -> np.ndarray:
        p = _as_vector(p, "p")
        if p.size != self.dimension:
            raise ConfigurationError(
                f"momentum has dimension {p.size}, expected {self.dimension}"
            )
        return p


@dataclass(frozen=True)
class Hamiltonian:
    """Separable H(q, p) = T(p) + V(q)."""

    kinetic: KineticEnergy
    potential: PotentialOracle


def hamiltonian_value(h: Hamiltonian, s: PhaseState) -> float:
    if s.dimension != h.kinetic.dimension:
        raise ConfigurationError(
            f"state dimension {s.dimension} does not match Hamiltonian "
            f"dimension {h.kinetic.dimension}"
        )
    return h.kinetic.value(s.p) + float(h.potential.value(s.q))


def kinetic_gradient(k: KineticEnergy, p: np.ndarray) -> np.ndarray:
    return k.gradient(p)


def sample_momentum(rng: np.random.Generator, dimension: int) -> np.ndarray:
    if dimension < 1:
        raise ConfigurationError("dimension must be >= 1")
    return rng.standard_normal(dimension)


def substream(root_seed: int, *path: int) -> np.random.Generator:
    """Derive an independent generator from a root seed and an integer path.

    Identical (root_seed, path) pairs always produce the same stream, which
    is what makes every experiment bitwise reproducible.
    """
    return np.random.default_rng(np.random.SeedSequence(root_seed, spawn_key=path))
