"""Measurement kit: Fourier downsampling, relative L2 error, slope fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DomainSpec
from .spectral import Field


@dataclass(frozen=True)
class ErrorRecord:
    resolution: int
    error: float
    reference_resolution: int
    time: float

    def __post_init__(self):
        if self.error < 0:
            raise ValueError("error must be nonnegative")


def downsample_fourier(field: Field, target: int) -> Field:
    """Restrict to modes with per-axis |q| < target/2 and resynthesize coarsely."""
    dims = field.dims
    if target > dims[0]:
        raise ValueError(f"target {target} exceeds source resolution {dims[0]}")
    if target % 2 != 0 or target <= 0:
        raise ValueError("target must be a positive even integer")
    spec = field.spectral
    half = target // 2
    small = np.zeros((target,) * field.ndim, dtype=complex)
    src = list(range(half)) + [dims[0] - k for k in range(half - 1, 0, -1)]
    dst = list(range(half)) + [target - k for k in range(half - 1, 0, -1)]
    small[np.ix_(*([dst] * field.ndim))] = spec[np.ix_(*([src] * field.ndim))]
    return Field.from_spectral(small)


def grid_norm(values: np.ndarray, length: float) -> float:
    """Discrete L2 norm scaled to approximate the continuous one."""
    target = values.shape[0]
    dim = values.ndim
    return (length / target) ** (dim / 2.0) * float(np.sqrt((values**2).sum()))


def relative_error(u1, u2, target: int, length: float) -> float:
    """Symmetric relative L2 distance on the Fourier-truncated comparison grid."""
    f1 = u1 if isinstance(u1, Field) else Field.from_physical(np.asarray(u1, dtype=float))
    f2 = u2 if isinstance(u2, Field) else Field.from_physical(np.asarray(u2, dtype=float))
    d1 = downsample_fourier(f1, target).physical
    d2 = downsample_fourier(f2, target).physical
    n1 = grid_norm(d1, length)
    n2 = grid_norm(d2, length)
    denom = max(n1, n2)
    if denom == 0.0:
        raise ValueError("both fields vanish; relative error undefined")
    return grid_norm(d1 - d2, length) / denom


def convergence_slope(records) -> float:
    """Least-squares slope of log2(error) against log2(resolution)."""
    records = list(records)
    resolutions = [r.resolution for r in records]
    if len(set(resolutions)) < 3:
        raise ValueError("need at least 3 distinct resolutions for a slope fit")
    x = np.log2([float(r.resolution) for r in records])
    y = np.log2([float(r.error) for r in records])
    return float(np.polyfit(x, y, 1)[0])


def mass_radius(values: np.ndarray, domain: DomainSpec, center, quantile: float = 0.95) -> float:
    """Radius of the sphere around `center` holding `quantile` of the grid mass."""
    n = values.shape[0]
    h = domain.length / n
    axes = [domain.origin[j] + h * np.arange(n) for j in range(domain.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    center = np.asarray(center, dtype=float)
    r2 = np.zeros_like(values)
    for j, mx in enumerate(mesh):
        delta = mx - center[j]
        delta -= domain.length * np.round(delta / domain.length)
        r2 += delta**2
    radius = np.sqrt(r2).reshape(-1)
    mass = np.maximum(values, 0.0).reshape(-1)
    order = np.argsort(radius)
    csum = np.cumsum(mass[order])
    total = csum[-1]
    if not total > 0:
        raise ValueError("no mass on the grid")
    idx = int(np.searchsorted(csum, quantile * total))
    return float(radius[order][min(idx, radius.size - 1)])
