"""Scalar nonlinearity, critical parameters and conserved functionals.

The normalized lattice reads

    i du_n/dt + eps (u_{n+1} - 2 u_n + u_{n-1}) - u_n + |u_n|^(p-1) u_n
        - gamma |u_n|^(q-1) u_n = 0,

and at eps = 0 every site sits at a real root of
``f(u) = u (1 - |u|^(p-1) + gamma |u|^(q-1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import NoCompetingRoots, PreconditionError

ROOT_TOL = 1e-13
ROOT_MAXITER = 200


def _check_powers(p: int, q: int) -> None:
    if isinstance(p, bool) or isinstance(q, bool):
        raise PreconditionError("powers must be integers")
    if not (isinstance(p, (int, np.integer)) and isinstance(q, (int, np.integer))):
        raise PreconditionError(f"powers must be integers, got p={p!r}, q={q!r}")
    if not 2 <= p < q:
        raise PreconditionError(f"need 2 <= p < q, got p={p}, q={q}")


@dataclass(frozen=True)
class ModelParams:
    """Powers, defocusing strength and coupling of the normalized lattice.

    ``gamma`` is only range-checked by operations that build states
    (see :meth:`check_window`), so that ``f`` can be evaluated anywhere.
    """

    p: int
    q: int
    gamma: float
    eps: float = 0.0

    def __post_init__(self):
        _check_powers(self.p, self.q)
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "eps", float(self.eps))
        if not math.isfinite(self.gamma):
            raise PreconditionError("gamma must be finite")
        if not (math.isfinite(self.eps) and self.eps >= 0.0):
            raise PreconditionError(f"eps must be finite and >= 0, got {self.eps}")

    @property
    def gamma_crit(self) -> float:
        return gamma_crit(self.p, self.q)

    @property
    def delta(self) -> float:
        """gamma as a fraction of the critical value."""
        return self.gamma / self.gamma_crit

    def check_window(self) -> None:
        """Raise unless 0 < gamma < gamma_crit(p, q)."""
        if self.gamma <= 0.0:
            raise PreconditionError(f"gamma must be > 0, got {self.gamma}")
        if self.gamma >= self.gamma_crit:
            raise NoCompetingRoots(
                f"gamma={self.gamma} >= gamma_crit({self.p},{self.q})={self.gamma_crit}"
            )

    def with_eps(self, eps: float) -> ModelParams:
        return ModelParams(self.p, self.q, self.gamma, eps)

    def with_gamma(self, gamma: float) -> ModelParams:
        return ModelParams(self.p, self.q, gamma, self.eps)

    @classmethod
    def from_delta(cls, p: int, q: int, delta: float, eps: float = 0.0) -> ModelParams:
        return cls(p, q, delta * gamma_crit(p, q), eps)


@dataclass(frozen=True)
class RootPair:
    a: float
    A: float
    dfa: float
    dfA: float
    gamma_crit: float
    u_pq: float


@dataclass(frozen=True)
class PhysicalParams:
    """Coefficients of the unnormalized lattice and the ILM frequency."""

    C: float
    kappa: float
    Gamma_def: float
    omega: float

    def __post_init__(self):
        for name in ("C", "kappa", "Gamma_def", "omega"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise PreconditionError(f"{name} must be positive, got {value}")


def f_eval(u, params: ModelParams):
    """f(u) = u (1 - |u|^(p-1) + gamma |u|^(q-1)); works on scalars and arrays."""
    au = np.abs(u)
    return u * (1.0 - au ** (params.p - 1) + params.gamma * au ** (params.q - 1))


def fprime_eval(u, params: ModelParams):
    """f'(u) = 1 - p |u|^(p-1) + gamma q |u|^(q-1), even in u."""
    au = np.abs(u)
    p, q = params.p, params.q
    return 1.0 - p * au ** (p - 1) + params.gamma * q * au ** (q - 1)


def gamma_crit(p: int, q: int) -> float:
    """Largest gamma for which f still has two distinct positive roots."""
    _check_powers(p, q)
    return ((p - 1) / (q - 1)) * ((q - p) / (q - 1)) ** ((q - p) / (p - 1))


def u_double_root(p: int, q: int) -> float:
    """Location of the double positive root of f at gamma = gamma_crit."""
    _check_powers(p, q)
    return ((q - 1) / (q - p)) ** (1.0 / (p - 1))


def _root_scale(u: float, p: int, q: int, gamma: float) -> float:
    # magnitude of the individual terms of f, for a rounding-aware residual test
    return max(1.0, u * (1.0 + u ** (p - 1) + gamma * u ** (q - 1)))


@lru_cache(maxsize=4096)
def _find_roots(p: int, q: int, gamma: float) -> RootPair:
    g = lambda u: 1.0 - u ** (p - 1) + gamma * u ** (q - 1)  # f(u)/u for u > 0
    upq = u_double_root(p, q)
    a = brentq(g, 0.0, upq, xtol=1e-300, rtol=8.9e-16, maxiter=ROOT_MAXITER)
    upper = 2.0 * upq
    while g(upper) <= 0.0:
        upper *= 2.0
    A = brentq(g, upq, upper, xtol=1e-300, rtol=8.9e-16, maxiter=ROOT_MAXITER)
    prm = ModelParams(p, q, gamma)
    for r in (a, A):
        if abs(f_eval(r, prm)) > ROOT_TOL * _root_scale(r, p, q, gamma):
            raise ArithmeticError(f"root refinement stalled at u={r}")
    dfa, dfA = float(fprime_eval(a, prm)), float(fprime_eval(A, prm))
    if not (dfa < 0.0 < dfA and 0.0 < a < upq < A):
        raise ArithmeticError(f"root ordering violated: a={a}, A={A}, f'(a)={dfa}, f'(A)={dfA}")
    return RootPair(a=a, A=A, dfa=dfa, dfA=dfA, gamma_crit=gamma_crit(p, q), u_pq=upq)


def find_roots(params: ModelParams) -> RootPair:
    """Return the small and large positive roots of f and the slopes there.

    Raises
    ------
    PreconditionError
        If gamma <= 0.
    NoCompetingRoots
        If gamma >= gamma_crit(p, q).
    """
    params.check_window()
    return _find_roots(params.p, params.q, params.gamma)


def normalize_physical(phys: PhysicalParams, p: int, q: int) -> tuple[ModelParams, float]:
    """Map physical coefficients to (eps, gamma) and the amplitude scale.

    Physical amplitudes are ``scale * u_n`` and physical time is ``t / omega``.
    """
    _check_powers(p, q)
    ratio = phys.omega / phys.kappa
    eps = phys.C / phys.omega
    gamma = (phys.Gamma_def / phys.omega) * ratio ** ((q - 1) / (p - 1))
    scale = ratio ** (1.0 / (p - 1))
    return ModelParams(p, q, gamma, eps), scale


def energy_mass(profile, params: ModelParams) -> tuple[float, float, float]:
    """Energy H, mass Q and augmented energy H + Q of a zero-padded profile.

    ``profile`` may be a :class:`~ilmlab.solver.LatticeProfile` or any real or
    complex array of site amplitudes; sites outside it are zero.
    """
    u = np.asarray(getattr(profile, "values", profile))
    padded = np.concatenate(([0.0], u, [0.0]))
    au = np.abs(u)
    p, q = params.p, params.q
    H = (
        params.eps * np.sum(np.abs(np.diff(padded)) ** 2)
        - (2.0 / (p + 1)) * np.sum(au ** (p + 1))
        + (2.0 * params.gamma / (q + 1)) * np.sum(au ** (q + 1))
    )
    Q = np.sum(au**2)
    return float(H), float(Q), float(H + Q)
