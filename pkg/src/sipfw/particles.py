"""Weighted-particle transport, mass diagnostics, and residual resampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chem import PositivityError
from .model import DomainSpec, ModelParams, ParticleEnsemble, rho, wrap_positions

# Sub-stream purposes for the counter-based generator.
MOTION_STREAM = 0
RESAMPLE_STREAM = 1
INIT_STREAM = 2


@dataclass(frozen=True)
class RngStream:
    """Counter-based random streams keyed by (purpose, step).

    Every draw for a given seed, purpose, and step is produced by one
    vectorized call on a freshly positioned Philox generator, so results do
    not depend on how work is partitioned across threads.
    """

    seed: int

    def generator(self, purpose: int, step: int) -> np.random.Generator:
        bitgen = np.random.Philox(key=np.uint64(self.seed), counter=[0, 0, purpose, step])
        return np.random.Generator(bitgen)

    def motion(self, step: int) -> np.random.Generator:
        return self.generator(MOTION_STREAM, step)

    def resampling(self, step: int) -> np.random.Generator:
        return self.generator(RESAMPLE_STREAM, step)

    def initialization(self) -> np.random.Generator:
        return self.generator(INIT_STREAM, 0)


@dataclass(frozen=True)
class MassReport:
    """Totals and extremes of the particle weights at one step."""

    total: float
    max_weight: float
    min_weight: float
    ratio: float
    step: int
    time: float
    total_in_bounds: bool
    ratio_in_bounds: bool


def advance_particles(
    ensemble: ParticleEnsemble,
    grad_v_at_particles: np.ndarray,
    w_at_particles: np.ndarray,
    params: ModelParams,
    tau: float,
    rng: np.random.Generator,
    domain: DomainSpec,
) -> ParticleEnsemble:
    """One drift-diffusion-growth update of all particles.

    Positions gain chi tau grad(v) plus N(0, 2 D_u tau I) noise and are
    wrapped periodically; each weight is scaled by 1 + tau (rho(w) - 1),
    which lies in [1 - tau, 1 + tau].
    """
    count, dim = ensemble.positions.shape
    grad_v_at_particles = np.asarray(grad_v_at_particles, dtype=float)
    w_at_particles = np.asarray(w_at_particles, dtype=float)
    if grad_v_at_particles.shape != (count, dim):
        raise ValueError("grad_v_at_particles must have shape (P, d)")
    if w_at_particles.shape != (count,):
        raise ValueError("w_at_particles must have shape (P,)")
    if not 0 < tau <= 0.5:
        raise ValueError("tau must lie in (0, 0.5]")
    if count and w_at_particles.min() < 0:
        raise PositivityError("interpolated oxygen is negative; positivity chain broken upstream")
    noise = rng.standard_normal((count, dim)) * math.sqrt(2.0 * params.d_u * tau)
    positions = wrap_positions(ensemble.positions + params.chi * tau * grad_v_at_particles + noise, domain)
    weights = ensemble.weights * (1.0 + tau * (rho(w_at_particles) - 1.0))
    return ParticleEnsemble(positions, weights)


def residual_resample(ensemble: ParticleEnsemble, rng: np.random.Generator) -> ParticleEnsemble:
    """Replace the ensemble by P equal-weight particles, conserving total mass.

    Each particle is copied floor(a_p / a0) times deterministically
    (a0 = mean weight); the remaining slots are filled by a systematic draw
    with probabilities proportional to the residual weights. Every output
    particle carries weight a0, the unique mass-conserving choice.
    """
    count = ensemble.count
    total = ensemble.total_mass
    if not total > 0:
        raise ValueError("cannot resample an ensemble with zero total mass")
    a0 = total / count
    ratio = ensemble.weights / a0
    # fp guard: a weight meant to be an exact multiple of a0 must not floor down
    nearest = np.rint(ratio)
    snap = np.abs(ratio - nearest) <= 1e-12 * np.maximum(nearest, 1.0)
    ratio = np.where(snap, nearest, ratio)
    copies = np.floor(ratio).astype(np.int64)
    n_stoch = count - int(copies.sum())
    pieces = [np.repeat(np.arange(count), copies)]
    if n_stoch > 0:
        residual = np.maximum(ensemble.weights - copies * a0, 0.0)
        cum = np.cumsum(residual)
        if not cum[-1] > 0:
            raise ValueError("residual mass vanished; cannot fill stochastic slots")
        thresholds = (np.arange(n_stoch) + rng.random()) / n_stoch * cum[-1]
        pieces.append(np.searchsorted(cum, thresholds, side="right"))
    index = np.concatenate(pieces)
    positions = ensemble.positions[index]
    weights = np.full(count, a0)
    return ParticleEnsemble(positions, weights)


def mass_report(ensemble: ParticleEnsemble, step: int, tau: float, m0: float) -> MassReport:
    """Summarize total mass and weight spread, flagging the finite-time bounds.

    The per-step weight factor lies in [1 - tau, 1 + tau], so the total must
    stay within [m0 (1-tau)^n, m0 (1+tau)^n] -- the sharp form of the
    exponential envelope m0 e^{+-t} -- and, for equal initial weights, the
    max/min ratio within ((1+tau)/(1-tau))^n <= e^{2t}. Both checks allow
    only a rounding-level slack.
    """
    t = step * tau
    total = ensemble.total_mass
    max_w = float(ensemble.weights.max()) if ensemble.count else 0.0
    min_w = float(ensemble.weights.min()) if ensemble.count else 0.0
    ratio = max_w / min_w if min_w > 0 else math.inf
    slack = 1.0 + 1e-12
    lo = m0 * (1.0 - tau) ** step
    hi = m0 * (1.0 + tau) ** step
    total_ok = lo / slack <= total <= hi * slack
    ratio_ok = ratio <= ((1.0 + tau) / (1.0 - tau)) ** step * slack if tau < 1.0 else True
    return MassReport(total, max_w, min_w, ratio, step, t, total_ok, ratio_ok)
