"""Time integration of the normalized lattice and growth-rate estimation.

The evolution equation is

    i du_n/dt + eps (u_{n+1} - 2 u_n + u_{n-1}) - u_n + |u_n|^(p-1) u_n
        - gamma |u_n|^(q-1) u_n = 0

with zero Dirichlet data outside the window, so stationary profiles are
fixed points and perturbations of unstable ones grow like ``exp(|Im omega| t)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NotGrowing, PreconditionError
from .model import ModelParams, energy_mass

logger = logging.getLogger(__name__)

BLOWUP = 1e6


@dataclass(frozen=True)
class EvolutionState:
    t: float
    amplitudes: np.ndarray


@dataclass
class EvolutionResult:
    t: np.ndarray
    Q: np.ndarray
    H: np.ndarray
    deviation: np.ndarray
    final: EvolutionState
    diverged: bool = False
    window_warning: bool = False

    def to_csv(self) -> str:
        lines = ["t,Q,H,deviation"]
        for row in zip(self.t, self.Q, self.H, self.deviation):
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def rhs(u: np.ndarray, params: ModelParams) -> np.ndarray:
    """du/dt for complex site amplitudes."""
    padded = np.concatenate(([0.0], u, [0.0]))
    lap = padded[2:] - 2.0 * u + padded[:-2]
    au = np.abs(u)
    return 1j * (params.eps * lap - u + au ** (params.p - 1) * u - params.gamma * au ** (params.q - 1) * u)


def rk4_step(u: np.ndarray, dt: float, params: ModelParams) -> np.ndarray:
    k1 = rhs(u, params)
    k2 = rhs(u + 0.5 * dt * k1, params)
    k3 = rhs(u + 0.5 * dt * k2, params)
    k4 = rhs(u + dt * k3, params)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def orbital_deviation(u: np.ndarray, u0: np.ndarray) -> float:
    """min over alpha of ||u - exp(i alpha) u0||, attained at alpha = arg <u0, u>."""
    phase = np.exp(1j * np.angle(np.vdot(u0, u)))
    return float(np.linalg.norm(u - phase * u0))


def evolve(
    initial,
    params: ModelParams,
    t_max: float,
    dt: float = 1e-3,
    record_every: int = 100,
    reference=None,
    boundary_tol: float = 1e-10,
) -> EvolutionResult:
    """Integrate with the classical fourth-order Runge-Kutta scheme at fixed ``dt``.

    ``deviation`` is measured against ``reference`` (default: the initial data),
    so a perturbed run can be compared with the unperturbed stationary profile.
    """
    if not dt > 0 or not t_max > 0:
        raise PreconditionError("dt and t_max must be positive")
    u = np.array(getattr(initial, "values", initial), dtype=complex)
    u0 = u.copy() if reference is None else np.array(getattr(reference, "values", reference), dtype=complex)
    if u0.shape != u.shape:
        raise PreconditionError("reference and initial data need the same window")
    n_steps = int(round(t_max / dt))
    ts, Qs, Hs, devs = [], [], [], []
    window_warning = False
    warned_edge = np.abs(u[[0, -1]]).max() >= 10 * boundary_tol

    def record(t):
        H, Q, _ = energy_mass(u, params)
        ts.append(t)
        Qs.append(Q)
        Hs.append(H)
        devs.append(orbital_deviation(u, u0))

    record(0.0)
    diverged = False
    for k in range(1, n_steps + 1):
        u = rk4_step(u, dt, params)
        if k % record_every == 0 or k == n_steps:
            if not np.all(np.isfinite(u)) or np.abs(u).max() > BLOWUP:
                diverged = True
                logger.warning("amplitude exceeded %g at t=%.4g", BLOWUP, k * dt)
                break
            record(k * dt)
            if not warned_edge and not window_warning and np.abs(u[[0, -1]]).max() >= 10 * boundary_tol:
                window_warning = True
                logger.warning("radiation reached the window edge at t=%.4g", k * dt)
    return EvolutionResult(
        t=np.array(ts),
        Q=np.array(Qs),
        H=np.array(Hs),
        deviation=np.array(devs),
        final=EvolutionState(ts[-1], u),
        diverged=diverged,
        window_warning=window_warning or warned_edge,
    )


def perturb(profile, rel_size: float = 1e-3, seed: int = 0) -> np.ndarray:
    """Add a uniform random complex perturbation with ``||du|| = rel_size * ||u||``."""
    u = np.asarray(getattr(profile, "values", profile), dtype=complex)
    rng = np.random.default_rng(seed)
    du = rng.uniform(-1, 1, u.size) + 1j * rng.uniform(-1, 1, u.size)
    du *= rel_size * np.linalg.norm(u) / np.linalg.norm(du)
    return u + du


def growth_rate(t, deviation, rise: float = 3.0, saturation: float = 0.1, min_samples: int = 10) -> float:
    """Exponential rate of ``deviation`` from a log-linear least-squares fit.

    The window starts where the deviation first exceeds ``rise`` times its
    initial value and ends where it first exceeds ``saturation`` times its
    maximum.

    Raises
    ------
    NotGrowing
        If no such window with at least ``min_samples`` samples exists.
    """
    t = np.asarray(t, dtype=float)
    dev = np.asarray(deviation, dtype=float)
    if t.size < min_samples:
        raise NotGrowing(f"need at least {min_samples} samples")
    floor = max(dev[0], 1e-300)
    above = np.nonzero(dev > rise * floor)[0]
    if above.size == 0:
        raise NotGrowing("deviation never rises above its initial level")
    start = above[0]
    sat = np.nonzero(dev > saturation * dev.max())[0]
    stop = sat[sat >= start][0] if np.any(sat >= start) else dev.size - 1
    sel = slice(start, stop + 1)
    if stop + 1 - start < min_samples:
        raise NotGrowing(f"exponential window has only {stop + 1 - start} samples")
    slope = np.polyfit(t[sel], np.log(dev[sel]), 1)[0]
    if slope <= 0:
        raise NotGrowing(f"fitted slope {slope:.3e} is not positive")
    return float(slope)
