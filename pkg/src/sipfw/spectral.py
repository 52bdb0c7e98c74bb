"""Periodic DFT fields, propagation kernels, low-pass filter, spectral gradient.

DFT convention: forward analysis k_q = H^{-d} sum_p f(p h) exp(-2 pi i q.p/H)
(numpy's norm="forward"), synthesis is the plain mode sum. Coordinates are
taken relative to the box origin throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import DomainSpec, Discretization

# Minimum lattice-image count for the aliased kernel sums; the count grows
# automatically until the first neglected term underflows double precision,
# so the truncation never costs representable accuracy.
ALIAS_IMAGES = 3
_TAIL_EXPONENT = 710.0


class Field:
    """A scalar grid quantity with lazily synchronized physical/spectral views."""

    __slots__ = ("_physical", "_spectral")

    def __init__(self, physical: np.ndarray | None = None, spectral: np.ndarray | None = None):
        if physical is None and spectral is None:
            raise ValueError("Field needs at least one view")
        self._physical = None if physical is None else np.asarray(physical, dtype=float)
        self._spectral = None if spectral is None else np.asarray(spectral, dtype=complex)

    @classmethod
    def from_physical(cls, values: np.ndarray) -> "Field":
        return cls(physical=values)

    @classmethod
    def from_spectral(cls, coeffs: np.ndarray) -> "Field":
        return cls(spectral=coeffs)

    @property
    def dims(self) -> tuple:
        view = self._physical if self._physical is not None else self._spectral
        return view.shape

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def physical(self) -> np.ndarray:
        if self._physical is None:
            self._physical = np.fft.ifftn(self._spectral, norm="forward").real
        return self._physical

    @property
    def spectral(self) -> np.ndarray:
        if self._spectral is None:
            self._spectral = np.fft.fftn(self._physical, norm="forward")
        return self._spectral


def dft_forward(field: Field) -> Field:
    """Return the field with its spectral view materialized."""
    field.spectral
    return field


def dft_inverse(field: Field) -> Field:
    """Return the field with its physical view materialized."""
    field.physical
    return field


@lru_cache(maxsize=64)
def mode_indices(h_modes: int) -> np.ndarray:
    """Integer DFT frequencies {-H/2, ..., H/2-1} in fft layout."""
    return (np.fft.fftfreq(h_modes) * h_modes).astype(float)


@lru_cache(maxsize=64)
def mode_norm2(dims: tuple) -> np.ndarray:
    """|q|^2 over the full frequency grid."""
    axes = [mode_indices(h) ** 2 for h in dims]
    out = axes[0]
    for a in axes[1:]:
        out = np.add.outer(out, a)
    return out


@dataclass(frozen=True)
class PropagationKernel:
    """Per-frequency multipliers for one diffusing, linearly decaying species."""

    diffusivity: float
    decay: float
    tau: float
    flavor: str  # "theoretical" | "aliased"
    multipliers: np.ndarray
    length: float

    @property
    def dims(self) -> tuple:
        return self.multipliers.shape


def _gauss_coeff(diffusivity: float, tau: float, length: float) -> float:
    """Coefficient c in the frequency Gaussian exp(-c q^2), integer-mode units."""
    return 4.0 * math.pi**2 * diffusivity * tau / length**2


def aliased_axis_profile(coeff: float, h_modes: int) -> np.ndarray:
    """Zero-mode-normalized lattice fold of exp(-coeff q^2) along one axis.

    The fold makes the physical-space kernel a sampled periodized Gaussian,
    hence strictly positive; the normalization pins the zero mode to 1 so the
    operator never inflates mass, even when the Gaussian is far narrower than
    the grid.
    """
    if coeff == 0.0:
        return np.ones(h_modes)
    q = mode_indices(h_modes)
    if coeff * h_modes**2 >= math.pi:
        # wide kernel: the lattice sum converges in a few images
        images = max(ALIAS_IMAGES, int(math.ceil(0.5 + math.sqrt(_TAIL_EXPONENT / coeff) / h_modes)))
        total = np.zeros(h_modes)
        peak = 0.0
        for n in range(-images, images + 1):
            total += np.exp(-coeff * (q + n * h_modes) ** 2)
            peak += math.exp(-coeff * (n * h_modes) ** 2)
        return total / peak
    # narrow kernel: evaluate the same fold through its Poisson-dual cosine
    # series, which needs at most ~sqrt(710/pi) terms in this branch
    decay = math.pi**2 / (coeff * h_modes**2)
    k_max = int(math.ceil(math.sqrt(_TAIL_EXPONENT / decay)))
    total = np.ones(h_modes)
    norm = 1.0
    for k in range(1, k_max + 1):
        term = math.exp(-decay * k * k)
        total += (2.0 * term) * np.cos((2.0 * math.pi * k / h_modes) * q)
        norm += 2.0 * term
    return total / norm


def positive_axis_kernel(coeff: float, h_modes: int, length: float) -> np.ndarray:
    """Physical-space circular convolution weights matching aliased_axis_profile.

    Built by sampling the periodized heat kernel directly, so every weight is
    a sum of nonnegative terms: convolving nonnegative data with it can never
    produce a negative value, even in floating point.
    """
    if coeff == 0.0:
        weights = np.zeros(h_modes)
        weights[0] = 1.0
        return weights
    # exp(-coeff q^2) in integer modes <-> Gaussian of variance coeff L^2/(2 pi^2)
    var = coeff * length**2 / (2.0 * math.pi**2)
    h = length / h_modes
    x = np.arange(h_modes) * h
    sigma = math.sqrt(var)
    images = max(ALIAS_IMAGES, int(math.ceil(0.5 + math.sqrt(2.0 * _TAIL_EXPONENT) * sigma / length)))
    weights = np.zeros(h_modes)
    for n in range(-images, images + 1):
        weights += np.exp(-((x + n * length) ** 2) / (2.0 * var))
    return weights / weights.sum()


def build_kernel_theoretical(
    diffusivity: float, decay: float, tau: float, domain: DomainSpec, disc: Discretization
) -> PropagationKernel:
    """Exact frequency multipliers exp(-4 pi^2 |q|^2 D tau / L^2 - r tau)."""
    if diffusivity < 0 or decay < 0 or tau < 0:
        raise ValueError("diffusivity, decay, and tau must be nonnegative")
    dims = (disc.h_modes,) * domain.dim
    coeff = _gauss_coeff(diffusivity, tau, domain.length)
    mult = np.exp(-coeff * mode_norm2(dims) - decay * tau)
    return PropagationKernel(diffusivity, decay, tau, "theoretical", mult, domain.length)


def build_kernel_aliased(
    diffusivity: float, decay: float, tau: float, domain: DomainSpec, disc: Discretization
) -> PropagationKernel:
    """Lattice-aliased multipliers whose inverse DFT is positive at every node.

    Per axis the multiplier is the fold sum_n exp(-c (q + nH)^2) normalized by
    its q=0 value; the product over axes times exp(-r tau) gives the kernel.
    Aliasing keeps the physical kernel a periodized Gaussian (positive), the
    normalization keeps the zero-mode multiplier exactly exp(-r tau).
    """
    if diffusivity < 0 or decay < 0 or tau < 0:
        raise ValueError("diffusivity, decay, and tau must be nonnegative")
    coeff = _gauss_coeff(diffusivity, tau, domain.length)
    profile = aliased_axis_profile(coeff, disc.h_modes)
    mult = profile
    for _ in range(domain.dim - 1):
        mult = np.multiply.outer(mult, profile)
    mult = mult * math.exp(-decay * tau)
    return PropagationKernel(diffusivity, decay, tau, "aliased", mult, domain.length)


def apply_kernel(field: Field, kernel: PropagationKernel) -> Field:
    if field.dims != kernel.dims:
        raise ValueError("field and kernel grids differ")
    return Field.from_spectral(field.spectral * kernel.multipliers)


@lru_cache(maxsize=64)
def lowpass_multiplier(dims: tuple, h0_cutoff: float) -> np.ndarray:
    return np.exp(-2.0 * math.pi**2 * mode_norm2(dims) / float(h0_cutoff) ** 2)


def gaussian_lowpass(field: Field, h0_cutoff: float) -> Field:
    """Damp mode q by exp(-2 pi^2 |q|^2 / H0^2); the zero mode is untouched."""
    if h0_cutoff <= 0:
        raise ValueError("h0_cutoff must be positive")
    return Field.from_spectral(field.spectral * lowpass_multiplier(field.dims, h0_cutoff))


@lru_cache(maxsize=64)
def sharp_cutoff_mask(dims: tuple, h0_cutoff: float) -> np.ndarray:
    return (mode_norm2(dims) <= float(h0_cutoff) ** 2).astype(float)


@lru_cache(maxsize=64)
def _gradient_factor(h_modes: int, length: float) -> np.ndarray:
    q = mode_indices(h_modes).copy()
    q[h_modes // 2] = 0.0  # unmatched Nyquist mode would break realness
    return 2j * math.pi * q / length


def spectral_gradient(field: Field, length: float) -> list:
    """Mode-wise derivative along each axis; returns one Field per axis."""
    spec = field.spectral
    out = []
    for axis in range(field.ndim):
        factor = _gradient_factor(field.dims[axis], length)
        shape = [1] * field.ndim
        shape[axis] = field.dims[axis]
        out.append(Field.from_spectral(spec * factor.reshape(shape)))
    return out
