"""Positivity-preserving explicit time integration of

    u_t = Lap(gamma(v) u) + a u - b u^sigma,      (I - Lap) v = u,

with the elliptic constraint re-solved after every stage. The step bound

    dt = cfl_safety / ( sum_i 2 gamma(min v) / h_i^2  +  b (max u)^(sigma-1) )

makes forward Euler a convex update: the diffusion off-diagonals contribute
nonnegative terms and each node's diagonal multiplier
1 - dt (2 dim gamma(v_i)/h^2 + b u_i^(sigma-1)) + dt a stays nonnegative
(gamma is decreasing, so gamma(v_i) <= gamma(min v)), hence u >= 0 is exact
arithmetic, not a clamp. The growth term a u only helps positivity and is
excluded from the denominator.

Heun's two-stage average is second order; its stages can undershoot zero by
rounding, so negatives above -1e-13 are floored to zero and anything larger
is reported as an event.

Per step the discrete mass law

    Delta integral(u) = dt (a integral(u) - b integral(u^sigma))

holds to rounding error because the trapezoid integral of the stencil
Laplacian telescopes to zero; the run driver tracks the worst relative
residual so tests can assert it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import Grid, ScalarField, integrate_values, laplacian_values
from .helmholtz import solve_helmholtz, solve_helmholtz_values
from .motility import Motility

HEUN_CLAMP_TOL = 1e-13


class BlowUpDetected(RuntimeError):
    """A node exceeded the blow-up threshold or became non-finite."""

    def __init__(self, t: float, linf_u: float):
        super().__init__(f"blow-up detected at t={t:.6g} (|u|_inf={linf_u:.6g})")
        self.t = t
        self.linf_u = linf_u


@dataclass
class Parameters:
    """Reaction coefficients and motility: growth a, damping b u^sigma."""

    a: float
    b: float
    sigma: float
    motility: Motility

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("a must be positive")
        if self.b <= 0:
            raise ValueError("b must be positive")
        if self.sigma <= 1:
            raise ValueError("sigma must exceed 1")


@dataclass
class StepperConfig:
    scheme: str = "euler"  # "euler" | "heun"
    cfl_safety: float = 0.9
    dt_max: float = math.inf
    blowup_threshold: float = 1e8

    def __post_init__(self):
        if self.scheme not in ("euler", "heun"):
            raise ValueError(f"unknown scheme {self.scheme!r} (use 'euler' or 'heun')")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.dt_max <= 0:
            raise ValueError("dt_max must be positive")
        if self.blowup_threshold <= 0:
            raise ValueError("blowup_threshold must be positive")


@dataclass
class SimState:
    """Snapshot (t, u, v) with v = solve_helmholtz(u) and the last step size."""

    t: float
    u: ScalarField
    v: ScalarField
    dt_last: float = 0.0


@dataclass
class RunEvent:
    t: float
    kind: str
    detail: str


@dataclass
class StepInfo:
    dt: float
    mass_residual_rel: float
    clamped_nodes: int = 0
    clamp_min: float = 0.0


@dataclass
class RunSummary:
    state: SimState
    steps: int
    events: list[RunEvent] = field(default_factory=list)
    min_u: float = math.inf
    mass_law_max_rel: float = 0.0


def stable_dt(state: SimState, params: Parameters, config: StepperConfig) -> float:
    """Positivity-preserving step bound (capped at dt_max)."""
    u = state.u.values
    v = state.v.values
    if not (np.isfinite(u).all() and np.isfinite(v).all()):
        raise ValueError("state is not finite")
    grid = state.u.grid
    gamma_max = float(params.motility.gamma(v.min()))
    diffusion = sum(2.0 * gamma_max / (h * h) for h in grid.spacing)
    absorption = params.b * float(u.max()) ** (params.sigma - 1.0)
    return min(config.cfl_safety / (diffusion + absorption), config.dt_max)


def _rhs(u: np.ndarray, v: np.ndarray, u_pow: np.ndarray, grid: Grid, params: Parameters) -> np.ndarray:
    w = np.asarray(params.motility.gamma(v)) * u
    return laplacian_values(w, grid) + params.a * u - params.b * u_pow


def _guard_blowup(values: np.ndarray, t: float, threshold: float) -> None:
    if not np.isfinite(values).all():
        raise BlowUpDetected(t, float(np.nan_to_num(np.abs(values), nan=np.inf).max()))
    peak = float(np.abs(values).max())
    if peak > threshold:
        raise BlowUpDetected(t, peak)


def _clamp_negatives(values: np.ndarray) -> tuple[np.ndarray, int, float]:
    worst = float(values.min())
    if worst >= 0.0:
        return values, 0, 0.0
    negatives = values < 0.0
    n = int(np.count_nonzero(negatives))
    values = values.copy()
    values[negatives] = 0.0
    return values, n, worst


def _advance(state: SimState, params: Parameters, config: StepperConfig, dt: float,
             events: list[RunEvent] | None = None) -> tuple[SimState, StepInfo]:
    grid = state.u.grid
    u = state.u.values
    v = state.v.values
    sigma = params.sigma
    t_new = state.t + dt

    u_pow = u ** sigma
    mass0 = integrate_values(u, grid)
    react0 = params.a * mass0 - params.b * integrate_values(u_pow, grid)
    k1 = _rhs(u, v, u_pow, grid, params)

    clamped = 0
    clamp_min = 0.0
    if config.scheme == "euler":
        u_new = u + dt * k1
        expected_delta = dt * react0
    else:
        u_mid = u + dt * k1
        u_mid, c1, m1 = _clamp_negatives(u_mid)
        _guard_blowup(u_mid, t_new, config.blowup_threshold)
        v_mid = solve_helmholtz_values(u_mid, grid)
        mid_pow = u_mid ** sigma
        react_mid = (params.a * integrate_values(u_mid, grid)
                     - params.b * integrate_values(mid_pow, grid))
        k2 = _rhs(u_mid, v_mid, mid_pow, grid, params)
        u_new = u + 0.5 * dt * (k1 + k2)
        u_new, c2, m2 = _clamp_negatives(u_new)
        clamped = c1 + c2
        clamp_min = min(m1, m2)
        expected_delta = 0.5 * dt * (react0 + react_mid)
        if clamped and events is not None and clamp_min < -HEUN_CLAMP_TOL:
            events.append(RunEvent(t_new, "heun_clamp",
                                   f"floored {clamped} node(s), worst {clamp_min:.3e}"))

    _guard_blowup(u_new, t_new, config.blowup_threshold)
    mass1 = integrate_values(u_new, grid)
    residual = abs(mass1 - mass0 - expected_delta) / max(abs(mass0), abs(mass1), 1e-300)

    v_new = solve_helmholtz_values(u_new, grid)
    new_state = SimState(t_new, ScalarField(grid, u_new), ScalarField(grid, v_new), dt_last=dt)
    return new_state, StepInfo(dt, residual, clamped, clamp_min)


def step(state: SimState, params: Parameters, config: StepperConfig,
         dt: float | None = None) -> SimState:
    """Advance one step; dt defaults to stable_dt(state, params, config)."""
    if dt is None:
        dt = stable_dt(state, params, config)
    new_state, _ = _advance(state, params, config, dt)
    return new_state


def initial_state(u0: ScalarField) -> SimState:
    """Validate initial data (nonnegative, not identically zero) and attach v."""
    if u0.values.min() < 0:
        raise ValueError("initial data must be nonnegative")
    if not u0.values.any():
        raise ValueError("initial data must not be identically zero")
    return SimState(0.0, u0, solve_helmholtz(u0))


def run(u0: ScalarField, params: Parameters, config: StepperConfig, t_end: float,
        observe_every: float | None = None, observers=()) -> RunSummary:
    """Advance to t_end, recomputing dt each step.

    Observers are callables invoked with the state at t=0, at every crossing
    of the observe_every cadence, and at t_end. Blow-up propagates as
    BlowUpDetected. t_end = 0 returns the initial state unchanged.
    """
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    if observe_every is not None and observe_every <= 0:
        raise ValueError("observe_every must be positive")

    state = initial_state(u0)
    summary = RunSummary(state=state, steps=0, min_u=float(u0.values.min()))
    for obs in observers:
        obs(state)
    last_observed = state.t
    next_obs_index = 1

    while True:
        remaining = t_end - state.t
        if remaining <= 0:
            break
        dt = stable_dt(state, params, config)
        landed_end = dt >= remaining
        if landed_end:
            dt = remaining
        state, info = _advance(state, params, config, dt, summary.events)
        if landed_end:
            state.t = t_end
        summary.steps += 1
        summary.min_u = min(summary.min_u, float(state.u.values.min()))
        summary.mass_law_max_rel = max(summary.mass_law_max_rel, info.mass_residual_rel)

        due = False
        if observe_every is not None:
            while state.t >= next_obs_index * observe_every:
                next_obs_index += 1
                due = True
        if due and state.t < t_end:
            for obs in observers:
                obs(state)
            last_observed = state.t

    if state.t != last_observed:
        for obs in observers:
            obs(state)

    summary.state = state
    return summary
