"""Main engine loop: initialization, the per-step sequence, snapshots.

Each step runs, in order: deposit of the particle density, the chemical
update (which consumes the deposited density and the previous fields), the
gradient/interpolation pass evaluated on the PRE-update fields, and the
particle advance. Particles at iteration n therefore move in the fields
labeled n-1, matching the staggering of the update rule.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass

import numpy as np

from .chem import ChemState, step_concentrations
from .model import Discretization, DomainSpec, ModelParams, ParticleEnsemble
from .particles import RngStream, advance_particles, residual_resample
from .pic import AssignmentOrder, deposit, interpolate_many
from .spectral import Field, spectral_gradient


class SimulationError(RuntimeError):
    """Fatal runtime failure in the engine loop."""


@dataclass(frozen=True)
class InitialData:
    """Closed-form initial state: callables map (N, d) points to (N,) values."""

    u0: callable
    v0: callable
    m0: callable
    w0: callable
    u0_bound: float


def benchmark_2d() -> InitialData:
    """Compactly supported cell bump with oscillatory matrix background (d=2)."""
    center = np.array([3.0, 3.0])
    r2 = 0.3

    def u0(x):
        d2 = ((x - center) ** 2).sum(axis=1)
        return 5.0 * np.maximum(r2 - d2, 0.0)

    def v0(x):
        return 0.05 * np.cos(5.0 * np.pi * x[:, 0] ** 2 / 18.0) * np.sin(13.0 * np.pi * x[:, 1] ** 2 / 72.0) + 0.3

    return InitialData(u0=u0, v0=v0, m0=u0, w0=lambda x: 4.0 * v0(x), u0_bound=5.0 * r2)


def benchmark_3d() -> InitialData:
    """Uniform cell ball with oscillatory matrix background (d=3)."""
    center = np.array([3.0, 3.0, 3.0])
    r2 = 0.3

    def u0(x):
        d2 = ((x - center) ** 2).sum(axis=1)
        return np.where(d2 <= r2, 3.0, 0.0)

    def v0(x):
        return (
            0.05
            * np.cos(5.0 * np.pi * x[:, 0] ** 2 / 18.0)
            * np.sin(13.0 * np.pi * x[:, 1] ** 2 / 72.0)
            * np.cos(np.pi * x[:, 2] ** 2 / 12.0)
            + 0.3
        )

    return InitialData(u0=u0, v0=v0, m0=u0, w0=lambda x: 4.0 * v0(x), u0_bound=3.0)


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a run."""

    params: ModelParams
    domain: DomainSpec
    disc: Discretization
    seed: int = 0
    deposit_order: AssignmentOrder = AssignmentOrder.QUARTIC4
    interp_order: AssignmentOrder = AssignmentOrder.LINEAR2
    kernel_flavor: str = "aliased"
    filter_kind: str = "sharp"
    v_update: str = "implicit"
    strict_positive: bool = False
    resample_mode: str = "off"  # off | every | ratio
    resample_every: int = 100
    resample_threshold: float = math.exp(4.0)
    snapshot_every: int = 0  # 0: first and last only
    plot_grid: int = 0  # 0: 128 in 2D, 32 in 3D
    output_dir: str = None
    threads: int = 1
    force_unit_growth: bool = False  # test hook: freezes every weight factor at 1

    def __post_init__(self):
        if self.resample_mode not in ("off", "every", "ratio"):
            raise ValueError(f"unknown resample mode {self.resample_mode!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def plot_grid_size(self) -> int:
        if self.plot_grid:
            return self.plot_grid
        return 128 if self.domain.dim == 2 else 32


@dataclass(frozen=True)
class SimState:
    step: int
    time: float
    ensemble: ParticleEnsemble
    chem: ChemState
    config: RunConfig
    mass0: float


@dataclass(frozen=True)
class Snapshot:
    step: int
    time: float
    u: np.ndarray  # deposited on the plot grid (linear order, nonnegative)
    v: np.ndarray
    m: np.ndarray
    w: np.ndarray
    plot_grid: int


@dataclass
class RunResult:
    state: SimState
    snapshots: list
    timings: dict


def grid_points(domain: DomainSpec, h_modes: int, centered: bool = False) -> np.ndarray:
    """All grid nodes (or cell centers) as an (H^d, d) array, x-slowest."""
    h = domain.length / h_modes
    shift = 0.5 * h if centered else 0.0
    axes = [domain.origin[j] + shift + h * np.arange(h_modes) for j in range(domain.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def evaluate_on_grid(func, domain: DomainSpec, h_modes: int) -> np.ndarray:
    values = np.asarray(func(grid_points(domain, h_modes)), dtype=float)
    return values.reshape((h_modes,) * domain.dim)


def initial_mass(initial: InitialData, domain: DomainSpec, h_modes: int) -> float:
    """Midpoint-rule quadrature of u0 at the engine's own resolution."""
    cell = domain.length / h_modes
    values = initial.u0(grid_points(domain, h_modes, centered=True))
    return float(values.sum() * cell**domain.dim)


def sample_initial_positions(
    initial: InitialData, domain: DomainSpec, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Rejection-sample `count` i.i.d. positions with density proportional to u0."""
    dim = domain.dim
    origin = domain.origin_array
    bound = float(initial.u0_bound)
    if bound <= 0:
        raise ValueError("u0_bound must be positive")
    batch = max(4 * count, 1 << 16)
    batch = min(batch, 1 << 22)
    accepted = []
    got = 0
    drawn = 0
    while got < count:
        pts = origin + rng.random((batch, dim)) * domain.length
        accept = rng.random(batch) * bound < initial.u0(pts)
        drawn += batch
        hits = pts[accept]
        if hits.shape[0]:
            accepted.append(hits)
            got += hits.shape[0]
        if drawn >= 1_000_000 and got < max(1, drawn * 1e-4):
            raise ValueError(f"rejection sampling acceptance below 1e-4 ({got}/{drawn}); degenerate initial data")
    return np.concatenate(accepted, axis=0)[:count]


def init_from_analytic(config: RunConfig, initial: InitialData) -> SimState:
    """Sample the particle cloud from u0 and evaluate the chemical fields nodewise."""
    domain, disc = config.domain, config.disc
    mass0 = initial_mass(initial, domain, disc.h_modes)
    if not mass0 > 0:
        raise ValueError("initial cell density integrates to zero")
    rng = RngStream(config.seed).initialization()
    positions = sample_initial_positions(initial, domain, disc.n_particles, rng)
    weights = np.full(disc.n_particles, mass0 / disc.n_particles)
    ensemble = ParticleEnsemble(positions, weights)
    chem = ChemState.create(
        evaluate_on_grid(initial.v0, domain, disc.h_modes),
        evaluate_on_grid(initial.m0, domain, disc.h_modes),
        evaluate_on_grid(initial.w0, domain, disc.h_modes),
        config.params,
        domain,
        disc,
        tau=disc.dt,
        kernel_flavor=config.kernel_flavor,
        filter_kind=config.filter_kind,
        v_update=config.v_update,
        strict_positive=config.strict_positive,
    )
    return SimState(step=0, time=0.0, ensemble=ensemble, chem=chem, config=config, mass0=mass0)


def _step_impl(state: SimState, rng: RngStream, timings: dict = None) -> SimState:
    config = state.config
    domain, disc = config.domain, config.disc
    tau = disc.dt
    tick = _time.perf_counter

    t0 = tick()
    u_dep = deposit(state.ensemble, config.deposit_order, domain, disc.h_modes, threads=config.threads)
    t1 = tick()
    chem_new = step_concentrations(state.chem, u_dep, tau)
    t2 = tick()
    # particle phase reads the fields from before this step's chemical update
    grads = spectral_gradient(state.chem.v, domain.length)
    grids = [g.physical for g in grads] + [state.chem.w.physical]
    values = interpolate_many(grids, state.ensemble.positions, config.interp_order, domain)
    grad_at = values[: domain.dim].T.copy()
    w_at = values[domain.dim]
    t3 = tick()
    if config.force_unit_growth:
        w_at = np.ones_like(w_at)
    ensemble = advance_particles(
        state.ensemble, grad_at, w_at, config.params, tau, rng.motion(state.step), domain
    )
    t4 = tick()
    if config.resample_mode == "every":
        if (state.step + 1) % max(config.resample_every, 1) == 0:
            ensemble = residual_resample(ensemble, rng.resampling(state.step))
    elif config.resample_mode == "ratio":
        w_min = ensemble.weights.min()
        ratio = math.inf if w_min <= 0 else ensemble.weights.max() / w_min
        if ratio > config.resample_threshold:
            ensemble = residual_resample(ensemble, rng.resampling(state.step))
    t5 = tick()

    if not np.isfinite(ensemble.positions).all() or not np.isfinite(ensemble.weights).all():
        raise SimulationError(f"non-finite particle state at step {state.step + 1}")

    if timings is not None:
        timings["deposit"] += t1 - t0
        timings["field_update"] += t2 - t1
        timings["gradient_interp"] += t3 - t2
        timings["advance"] += t4 - t3
        timings["resample"] += t5 - t4
    return SimState(
        step=state.step + 1,
        time=(state.step + 1) * tau,
        ensemble=ensemble,
        chem=chem_new,
        config=config,
        mass0=state.mass0,
    )


def step(state: SimState) -> SimState:
    """Advance the simulation by one timestep."""
    try:
        return _step_impl(state, RngStream(state.config.seed))
    except SimulationError:
        raise
    except FloatingPointError as exc:  # pragma: no cover - defensive
        raise SimulationError(f"numerical failure at step {state.step + 1}: {exc}") from exc


def take_snapshot(state: SimState) -> Snapshot:
    """Deposit u on the plot grid (linear order keeps it nonnegative) plus fields."""
    config = state.config
    plot = config.plot_grid_size
    u_plot = deposit(state.ensemble, AssignmentOrder.LINEAR2, config.domain, plot, threads=config.threads)
    return Snapshot(
        step=state.step,
        time=state.time,
        u=u_plot.physical,
        v=state.chem.v.physical.copy(),
        m=state.chem.m.physical.copy(),
        w=state.chem.w.physical.copy(),
        plot_grid=plot,
    )


def run(config: RunConfig, initial: InitialData, monitor=None, collect_snapshots: bool = True) -> RunResult:
    """Execute the full time loop; `monitor(prev_state, new_state)` runs per step."""
    timings = {k: 0.0 for k in ("deposit", "field_update", "gradient_interp", "advance", "resample", "snapshot")}
    rng = RngStream(config.seed)
    state = init_from_analytic(config, initial)
    snapshots = []
    every = config.snapshot_every
    tick = _time.perf_counter

    def maybe_snapshot(current, force=False):
        if not collect_snapshots:
            return
        due = force or (every > 0 and current.step % every == 0)
        if due:
            t0 = tick()
            snapshots.append(take_snapshot(current))
            timings["snapshot"] += tick() - t0

    maybe_snapshot(state, force=True)
    n_steps = config.disc.n_steps
    for _ in range(n_steps):
        prev = state
        state = _step_impl(state, rng, timings)
        if monitor is not None:
            monitor(prev, state)
        maybe_snapshot(state, force=(state.step == n_steps and not (every > 0 and state.step % every == 0)))
    return RunResult(state=state, snapshots=snapshots, timings=timings)


def final_density(state: SimState, order: AssignmentOrder = None) -> Field:
    """Deposit the current cloud at the native resolution for error metrics."""
    config = state.config
    order = order or config.deposit_order
    return deposit(state.ensemble, order, config.domain, config.disc.h_modes, threads=config.threads)
