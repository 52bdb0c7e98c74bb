"""Deterministic 2D mesh solver for cross-validating the particle engine.

Explicit scheme on a uniform periodic N x N grid: 5-point Laplacians,
dimension-split first-order upwind fluxes for the haptotactic advection
(conservative by construction), explicit reactions. Intentionally simple;
its only job is to provide an independent solution family to compare the
particle engine against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import DomainSpec, ModelParams, W_DECAY_RATE, eta, rho
from .simulator import InitialData, evaluate_on_grid


class CflError(ValueError):
    """The explicit stability bound is violated."""


@dataclass
class MeshState:
    u: np.ndarray
    v: np.ndarray
    m: np.ndarray
    w: np.ndarray
    n: int
    h: float
    dt: float
    time: float


def _laplacian(f: np.ndarray, h: float) -> np.ndarray:
    out = -2.0 * len(f.shape) * f
    for axis in range(f.ndim):
        out = out + np.roll(f, 1, axis=axis) + np.roll(f, -1, axis=axis)
    return out / h**2


def _advection_divergence(u: np.ndarray, v: np.ndarray, chi: float, h: float) -> np.ndarray:
    """div(chi u grad v) by dimension-split upwind fluxes; telescopes exactly."""
    div = np.zeros_like(u)
    for axis in range(u.ndim):
        face_vel = chi * (np.roll(v, -1, axis=axis) - v) / h
        upwind = np.where(face_vel >= 0.0, u, np.roll(u, -1, axis=axis))
        flux = face_vel * upwind
        div += (flux - np.roll(flux, 1, axis=axis)) / h
    return div


def _max_face_speed(v: np.ndarray, chi: float, h: float) -> float:
    speed = 0.0
    for axis in range(v.ndim):
        speed = max(speed, float(np.abs(chi * (np.roll(v, -1, axis=axis) - v) / h).max()))
    return speed


def _stability_rate(state: MeshState, params: ModelParams) -> float:
    d_max = max(params.d_u, params.d_m, params.d_w)
    diff = 4.0 * d_max / state.h**2
    adv = 2.0 * _max_face_speed(state.v, params.chi, state.h) / state.h
    react = params.alpha * float(state.m.max(initial=0.0)) + params.beta + W_DECAY_RATE + 2.0
    return diff + adv + react


def build_reference(
    initial: InitialData, params: ModelParams, domain: DomainSpec, n: int, safety: float = 0.4
) -> MeshState:
    """Evaluate the initial data on the mesh and pick dt from the CFL budget."""
    if domain.dim != 2:
        raise ValueError("the reference solver is 2D only")
    h = domain.length / n
    state = MeshState(
        u=evaluate_on_grid(initial.u0, domain, n),
        v=evaluate_on_grid(initial.v0, domain, n),
        m=evaluate_on_grid(initial.m0, domain, n),
        w=evaluate_on_grid(initial.w0, domain, n),
        n=n,
        h=h,
        dt=0.0,
        time=0.0,
    )
    rate = _stability_rate(state, params)
    dt = min(safety / rate, 0.25)
    if not dt > 0:
        raise CflError("could not find a stable timestep")
    state.dt = dt
    return state


def reference_step(state: MeshState, params: ModelParams, force_unit_growth: bool = False) -> MeshState:
    """One explicit step; raises CflError if the fields outgrew the dt budget."""
    if state.dt * _stability_rate(state, params) > 1.0:
        raise CflError(f"stability bound violated at t={state.time:.4g} (dt={state.dt:.3g})")
    u, v, m, w = state.u, state.v, state.m, state.w
    h, dt = state.h, state.dt
    growth = 0.0 if force_unit_growth else rho(np.maximum(w, 0.0)) - 1.0
    u_new = u + dt * (
        -_advection_divergence(u, v, params.chi, h) + params.d_u * _laplacian(u, h) + growth * u
    )
    eta_u = eta(np.maximum(u, 0.0))
    v_new = v * (1.0 - dt * params.alpha * m)
    m_new = m + dt * (params.d_m * _laplacian(m, h) - params.beta * m + np.maximum(u, 0.0))
    w_new = w + dt * (params.d_w * _laplacian(w, h) - eta_u * w + params.gamma * v - W_DECAY_RATE * w)
    return replace(state, u=u_new, v=v_new, m=m_new, w=w_new, time=state.time + dt)


def reference_run(
    initial: InitialData,
    params: ModelParams,
    domain: DomainSpec,
    n: int,
    t_final: float,
    safety: float = 0.4,
    force_unit_growth: bool = False,
) -> MeshState:
    """Integrate to t_final, adjusting dt so the horizon is hit exactly."""
    state = build_reference(initial, params, domain, n, safety=safety)
    if t_final <= 0:
        return state
    n_steps = max(1, int(math.ceil(t_final / state.dt - 1e-12)))
    state.dt = t_final / n_steps
    for _ in range(n_steps):
        state = reference_step(state, params, force_unit_growth=force_unit_growth)
    return state
