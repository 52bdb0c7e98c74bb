"""One-step update of the chemical triple (v; m; w).

Per step: explicit reaction sources evaluated at the old state, an implicit
nodewise quotient for the matrix density v, and propagation of m and w by
frequency-space multipliers. With the "aliased" flavor the propagation
multiplier is the zero-mode-normalized lattice fold of the Gaussian
diffusion-decay kernel -- optionally fused with the Gaussian low-pass
filter -- whose physical-space form is a sampled periodized Gaussian and
therefore positive at every node. The strict_positive mode applies that same
operator as a separable physical-space convolution so nonnegative inputs can
never round to a negative output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import DomainSpec, Discretization, ModelParams, W_DECAY_RATE, eta
from .spectral import (
    Field,
    PropagationKernel,
    aliased_axis_profile,
    build_kernel_aliased,
    build_kernel_theoretical,
    lowpass_multiplier,
    mode_norm2,
    positive_axis_kernel,
    sharp_cutoff_mask,
    _gauss_coeff,
)

POSITIVITY_TOL = 1e-12

FILTER_KINDS = ("sharp", "gaussian", "off")
V_UPDATES = ("implicit", "explicit_kernel")
KERNEL_FLAVORS = ("aliased", "theoretical")


class PositivityError(RuntimeError):
    """A chemical field dropped below the tolerated negative floor."""


class _SpeciesOp:
    """Frequency multiplier (and matching positive physical form) for one species."""

    def __init__(self, diffusivity, decay, tau, domain, disc, flavor, filter_kind, strict):
        h = disc.h_modes
        dims = (h,) * domain.dim
        coeff = _gauss_coeff(diffusivity, tau, domain.length)
        self.decay_factor = math.exp(-decay * tau)
        self.circulants = None
        if flavor == "aliased":
            fused = coeff + (2.0 * math.pi**2 / disc.h0_cutoff**2 if filter_kind == "gaussian" else 0.0)
            profile = aliased_axis_profile(fused, h)
            mult = profile
            for _ in range(domain.dim - 1):
                mult = np.multiply.outer(mult, profile)
            mult = mult * self.decay_factor
            if filter_kind == "sharp":
                mult = mult * sharp_cutoff_mask(dims, disc.h0_cutoff)
            if strict:
                if filter_kind == "sharp" and disc.h0_cutoff < h:
                    raise ValueError("strict_positive is incompatible with an active sharp cutoff")
                weights = positive_axis_kernel(fused, h, domain.length)
                idx = np.arange(h)
                self.circulants = [weights[(idx[:, None] - idx[None, :]) % h]] * domain.dim
        else:  # theoretical
            if strict:
                raise ValueError("strict_positive requires the aliased kernel flavor")
            mult = np.exp(-coeff * mode_norm2(dims) - decay * tau)
            if filter_kind == "gaussian":
                mult = mult * lowpass_multiplier(dims, disc.h0_cutoff)
            elif filter_kind == "sharp":
                mult = mult * sharp_cutoff_mask(dims, disc.h0_cutoff)
        self.multiplier = mult

    def apply(self, values: np.ndarray) -> np.ndarray:
        if self.circulants is not None:
            out = values
            for axis, mat in enumerate(self.circulants):
                out = np.moveaxis(np.tensordot(mat, out, axes=([1], [axis])), 0, axis)
            return out * self.decay_factor
        spec = np.fft.fftn(values, norm="forward")
        return np.fft.ifftn(spec * self.multiplier, norm="forward").real


@dataclass
class ChemState:
    """Chemical fields plus the propagation operators they evolve under."""

    v: Field
    m: Field
    w: Field
    params: ModelParams
    domain: DomainSpec
    disc: Discretization
    kernel_m: PropagationKernel
    kernel_w: PropagationKernel
    tau: float
    kernel_flavor: str = "aliased"
    filter_kind: str = "sharp"
    v_update: str = "implicit"
    strict_positive: bool = False
    _op_m: _SpeciesOp = None
    _op_w: _SpeciesOp = None
    _op_v: _SpeciesOp = None

    @classmethod
    def create(
        cls,
        v0,
        m0,
        w0,
        params: ModelParams,
        domain: DomainSpec,
        disc: Discretization,
        tau: float = None,
        kernel_flavor: str = "aliased",
        filter_kind: str = "sharp",
        v_update: str = "implicit",
        strict_positive: bool = False,
    ) -> "ChemState":
        if kernel_flavor not in KERNEL_FLAVORS:
            raise ValueError(f"unknown kernel flavor {kernel_flavor!r}")
        if filter_kind not in FILTER_KINDS:
            raise ValueError(f"unknown filter kind {filter_kind!r}")
        if v_update not in V_UPDATES:
            raise ValueError(f"unknown v update {v_update!r}")
        tau = disc.dt if tau is None else float(tau)
        build = build_kernel_aliased if kernel_flavor == "aliased" else build_kernel_theoretical
        kernel_m = build(params.d_m, params.beta, tau, domain, disc)
        kernel_w = build(params.d_w, W_DECAY_RATE, tau, domain, disc)
        as_field = lambda f: f if isinstance(f, Field) else Field.from_physical(np.asarray(f, dtype=float))
        state = cls(
            v=as_field(v0),
            m=as_field(m0),
            w=as_field(w0),
            params=params,
            domain=domain,
            disc=disc,
            kernel_m=kernel_m,
            kernel_w=kernel_w,
            tau=tau,
            kernel_flavor=kernel_flavor,
            filter_kind=filter_kind,
            v_update=v_update,
            strict_positive=strict_positive,
        )
        state._build_ops()
        return state

    def _build_ops(self):
        args = (self.tau, self.domain, self.disc, self.kernel_flavor, self.filter_kind, self.strict_positive)
        self._op_m = _SpeciesOp(self.params.d_m, self.params.beta, *args)
        self._op_w = _SpeciesOp(self.params.d_w, W_DECAY_RATE, *args)
        if self.v_update == "explicit_kernel":
            self._op_v = _SpeciesOp(0.0, 0.0, *args)

    def with_fields(self, v: Field, m: Field, w: Field) -> "ChemState":
        return replace(self, v=v, m=m, w=w)


def source_term(u_grid, state: ChemState):
    """Explicit reaction sources (S_m, S_w) on the grid; S_v is handled implicitly.

    The deposited cell density is clamped at zero before entering the
    saturating consumption law; quartic deposits can undershoot slightly.
    """
    u = u_grid.physical if isinstance(u_grid, Field) else np.asarray(u_grid, dtype=float)
    u = np.maximum(u, 0.0)
    s_m = u
    s_w = state.params.gamma * state.v.physical - eta(u) * state.w.physical
    return s_m, s_w


def update_v_implicit(state: ChemState, tau: float) -> Field:
    """Nodewise v / (1 + alpha tau m): unconditionally nonnegative, nonincreasing."""
    m = state.m.physical
    if m.size and m.min() < 0:
        raise PositivityError("implicit v update requires nonnegative m")
    return Field.from_physical(state.v.physical / (1.0 + state.params.alpha * tau * m))


def _check_positivity(name: str, values: np.ndarray, strict: bool):
    if not np.isfinite(values).all():
        raise PositivityError(f"non-finite values in {name}")
    low = values.min() if values.size else 0.0
    if strict:
        if low < 0.0:
            raise PositivityError(f"{name} dropped below zero ({low:.3e}) in strict mode")
        return
    floor = -POSITIVITY_TOL * max(values.max() if values.size else 0.0, 0.0)
    if low < floor:
        raise PositivityError(f"{name} fell to {low:.3e}, below tolerance {floor:.3e}")


def step_concentrations(state: ChemState, u_grid, tau: float) -> ChemState:
    """Advance (v; m; w) by one operator-split step of length tau."""
    if abs(tau - state.tau) > 1e-15 * max(1.0, abs(tau)):
        raise ValueError(f"state was built for tau={state.tau}, got {tau}")
    if tau > 0.5:
        raise ValueError("tau must not exceed 0.5 (oxygen reaction stage would lose positivity)")
    params = state.params
    u = u_grid.physical if isinstance(u_grid, Field) else np.asarray(u_grid, dtype=float)
    u = np.maximum(u, 0.0)
    v_old, m_old, w_old = state.v.physical, state.m.physical, state.w.physical

    m_reacted = m_old + tau * u
    # algebraically equal to w + tau*(gamma v - eta(u) w); factored so every
    # term is nonnegative for tau <= 0.5 and rounding cannot flip the sign
    w_reacted = w_old * (1.0 - tau * eta(u)) + (tau * params.gamma) * v_old

    m_new = state._op_m.apply(m_reacted)
    w_new = state._op_w.apply(w_reacted)

    if state.v_update == "implicit":
        v_new = v_old / (1.0 + params.alpha * tau * m_old)
    else:
        v_reacted = v_old - tau * params.alpha * m_old * v_old
        v_new = state._op_v.apply(v_reacted)

    strict = state.strict_positive
    _check_positivity("v", v_new, strict)
    _check_positivity("m", m_new, strict)
    _check_positivity("w", w_new, strict)
    return state.with_fields(Field.from_physical(v_new), Field.from_physical(m_new), Field.from_physical(w_new))
