"""Domain types, physical parameters, and the closed-form reaction laws."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_PARAM_NAMES = ("chi", "d_u", "d_m", "d_w", "alpha", "beta", "gamma")

# Oxygen enters the w equation with a fixed unit linear consumption rate.
W_DECAY_RATE = 1.0


@dataclass(frozen=True)
class ModelParams:
    """Positive physical constants of the four-component invasion system.

    chi    -- haptotactic sensitivity of the cells
    d_u    -- cell diffusivity
    d_m    -- enzyme (MDE) diffusivity
    d_w    -- oxygen diffusivity
    alpha  -- matrix degradation rate per unit enzyme
    beta   -- enzyme decay rate
    gamma  -- oxygen production rate per unit matrix
    """

    chi: float
    d_u: float
    d_m: float
    d_w: float
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in _PARAM_NAMES:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"model parameter {name!r} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class DomainSpec:
    """Periodic box [origin, origin + length]^dim."""

    dim: int
    length: float
    origin: tuple = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")
        origin = self.origin
        if origin is None:
            origin = (0.0,) * self.dim
        origin = tuple(float(x) for x in np.atleast_1d(origin))
        if len(origin) != self.dim:
            raise ValueError(f"origin has {len(origin)} components, expected {self.dim}")
        object.__setattr__(self, "origin", origin)

    @property
    def origin_array(self) -> np.ndarray:
        return np.asarray(self.origin, dtype=float)


@dataclass(frozen=True)
class Discretization:
    """Grid resolution, filter scale, timestep, horizon, and particle count.

    h_modes is the grid size per axis (even); h0_cutoff the filter scale;
    dt must not exceed 0.5 or the nonnegativity of the oxygen reaction
    stage is lost.
    """

    h_modes: int
    h0_cutoff: int
    dt: float
    t_final: float
    n_particles: int

    def __post_init__(self):
        if self.h_modes <= 0 or self.h_modes % 2 != 0:
            raise ValueError(f"h_modes must be a positive even integer, got {self.h_modes}")
        if not 0 < self.h0_cutoff <= self.h_modes:
            raise ValueError(f"h0_cutoff must satisfy 0 < h0 <= h_modes, got {self.h0_cutoff}")
        if not 0 < self.dt <= 0.5:
            raise ValueError(f"dt must lie in (0, 0.5], got {self.dt}")
        if self.t_final < 0:
            raise ValueError(f"t_final must be nonnegative, got {self.t_final}")
        if self.n_particles <= 0:
            raise ValueError(f"n_particles must be positive, got {self.n_particles}")

    @property
    def n_steps(self) -> int:
        if self.t_final == 0:
            return 0
        # ceil(T/dt), robust to T/dt landing a few ulp above an integer
        ratio = self.t_final / self.dt
        nearest = round(ratio)
        if abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
            return int(nearest)
        return int(math.ceil(ratio))

    def cell(self, domain: DomainSpec) -> float:
        return domain.length / self.h_modes


def wrap_positions(positions: np.ndarray, domain: DomainSpec) -> np.ndarray:
    """Reduce positions into the periodic box."""
    origin = domain.origin_array
    return origin + np.mod(positions - origin, domain.length)


class ParticleEnsemble:
    """Weighted particle cloud: positions (P, d) and nonnegative weights (P,)."""

    __slots__ = ("positions", "weights")

    def __init__(self, positions: np.ndarray, weights: np.ndarray):
        positions = np.ascontiguousarray(positions, dtype=float)
        weights = np.ascontiguousarray(weights, dtype=float)
        if positions.ndim != 2 or positions.shape[1] not in (2, 3):
            raise ValueError(f"positions must have shape (P, d) with d in {{2,3}}, got {positions.shape}")
        if weights.shape != (positions.shape[0],):
            raise ValueError("weights must match the number of particles")
        if weights.size and weights.min() < 0:
            raise ValueError("particle weights must be nonnegative")
        self.positions = positions
        self.weights = weights

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(self.positions.copy(), self.weights.copy())


def rho(w):
    """Proliferation response 2w/(1+w); monotone, saturating below 2."""
    w = np.asarray(w, dtype=float)
    if w.size and w.min() < 0:
        raise ValueError("rho requires nonnegative oxygen values (positivity violated upstream)")
    out = 2.0 * w / (1.0 + w)
    return float(out) if out.ndim == 0 else out


def eta(u):
    """Oxygen consumption response 2u/(1+u); bounded by 2."""
    u = np.asarray(u, dtype=float)
    if u.size and u.min() < 0:
        raise ValueError("eta requires nonnegative cell density (positivity violated upstream)")
    out = 2.0 * u / (1.0 + u)
    return float(out) if out.ndim == 0 else out
