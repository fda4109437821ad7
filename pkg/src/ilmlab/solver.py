"""Anticontinuum seeds and Newton continuation of stationary profiles.

Profiles live on a finite window of the lattice with zero Dirichlet data
outside it.  Site ``n`` of the window is ``offset + j`` for array index
``j``; the code occupies sites ``1..N``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .codes import Code, Symbol, as_code
from .errors import NoConvergence, PreconditionError, SignPatternBroken, WindowTooSmall
from .model import ModelParams, RootPair, find_roots, fprime_eval

logger = logging.getLogger(__name__)

MAX_ENLARGEMENTS = 3


@dataclass(frozen=True)
class NewtonSettings:
    tol: float = 1e-12
    max_iter: int = 50
    boundary_tol: float = 1e-10
    buffer: int = 20

    def __post_init__(self):
        if not self.tol > 0:
            raise PreconditionError("tol must be positive")
        if self.max_iter < 1:
            raise PreconditionError("max_iter must be >= 1")
        if self.buffer < 1:
            raise PreconditionError("buffer must be >= 1")


@dataclass(frozen=True, eq=False)
class LatticeProfile:
    """Real site amplitudes on a window of the lattice.

    ``n_code`` is the number of code sites (1..N); zero means the profile
    is not tied to a code.  ``residual_history`` holds the max-norm of the
    residual at every Newton iterate, when the profile came out of a solve.
    """

    offset: int
    values: np.ndarray
    n_code: int = 0
    residual_history: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def window(self) -> int:
        return len(self.values)

    @property
    def sites(self) -> np.ndarray:
        return self.offset + np.arange(self.window)

    @property
    def interior(self) -> np.ndarray:
        """Values at the code sites 1..N."""
        start = 1 - self.offset
        return self.values[start : start + self.n_code]

    @property
    def buffer(self) -> int:
        return 1 - self.offset

    @property
    def iterations(self) -> int:
        return max(len(self.residual_history) - 1, 0)

    def boundary_max(self) -> float:
        return float(max(abs(self.values[0]), abs(self.values[-1])))

    def padded(self, extra: int) -> LatticeProfile:
        """Same profile with ``extra`` zero sites added on each side."""
        vals = np.concatenate((np.zeros(extra), self.values, np.zeros(extra)))
        return LatticeProfile(self.offset - extra, vals, self.n_code)

    def with_values(self, values) -> LatticeProfile:
        return LatticeProfile(self.offset, values, self.n_code)

    def reflected(self) -> LatticeProfile:
        """The profile under n -> N + 1 - n, which maps the code window onto itself."""
        vals = self.values[::-1]
        # stored window [offset, offset+M-1] maps to [N+1-offset-M+1, N+1-offset]
        return LatticeProfile(self.n_code + 2 - self.offset - self.window, vals, self.n_code)


def seed_profile(c: Code, roots: RootPair, buffer: int = 20) -> LatticeProfile:
    """Anticontinuum profile: +-a / +-A on the code sites, zeros elsewhere."""
    c = as_code(c)
    if buffer < 1:
        raise PreconditionError("buffer must be >= 1")
    vals = np.zeros(len(c) + 2 * buffer)
    vals[buffer : buffer + len(c)] = c.amplitudes(roots.a, roots.A)
    return LatticeProfile(1 - buffer, vals, len(c))


def _values(profile) -> np.ndarray:
    return np.asarray(getattr(profile, "values", profile), dtype=float)


def residual(profile, params: ModelParams) -> np.ndarray:
    """eps * (discrete Laplacian of u) - f(u), with zeros outside the window."""
    u = _values(profile)
    if u.size < 3:
        raise PreconditionError("window must hold at least 3 sites")
    padded = np.concatenate(([0.0], u, [0.0]))
    lap = padded[2:] - 2.0 * u + padded[:-2]
    au = np.abs(u)
    return params.eps * lap - u + au ** (params.p - 1) * u - params.gamma * au ** (params.q - 1) * u


def _diag_plus(u: np.ndarray, params: ModelParams) -> np.ndarray:
    return 2.0 * params.eps + fprime_eval(u, params)


def jacobian(profile, params: ModelParams) -> np.ndarray:
    """The symmetric tridiagonal operator L+ at ``profile`` (dense).

    The derivative of :func:`residual` is ``-jacobian``.
    """
    u = _values(profile)
    if u.size < 3:
        raise PreconditionError("window must hold at least 3 sites")
    off = -params.eps * np.ones(u.size - 1)
    return np.diag(_diag_plus(u, params)) + np.diag(off, 1) + np.diag(off, -1)


def jacobian_banded(u: np.ndarray, params: ModelParams) -> np.ndarray:
    """L+ in the (1, 1) banded storage used by :func:`scipy.linalg.solve_banded`."""
    ab = np.empty((3, u.size))
    ab[0, :] = -params.eps
    ab[2, :] = -params.eps
    ab[1, :] = _diag_plus(u, params)
    return ab


def residual_scale(u: np.ndarray, params: ModelParams) -> float:
    """Size of the largest individual term in the residual; rounding sets the floor."""
    au = np.abs(u)
    terms = au * (1.0 + 4.0 * params.eps + au ** (params.p - 1) + params.gamma * au ** (params.q - 1))
    return float(max(1.0, terms.max(initial=0.0)))


def _newton(u: np.ndarray, params: ModelParams, settings: NewtonSettings):
    history = []
    tol = settings.tol * residual_scale(u, params)
    for _ in range(settings.max_iter + 1):
        F = residual(u, params)
        rn = float(np.max(np.abs(F)))
        history.append(rn)
        if not np.isfinite(rn):
            break
        if rn < tol:
            return u, history
        if len(history) > settings.max_iter:
            break
        # residual'(u) = -L+, so the Newton update solves L+ du = F
        du = solve_banded((1, 1), jacobian_banded(u, params), F)
        u = u + du
        tol = settings.tol * residual_scale(u, params)
    raise NoConvergence(
        f"Newton did not converge in {settings.max_iter} iterations "
        f"(eps={params.eps}, last residual {history[-1]:.3e})"
    )


def newton_solve(
    seed: LatticeProfile, params: ModelParams, settings: NewtonSettings | None = None
) -> LatticeProfile:
    """Solve the stationary lattice equation starting from ``seed``.

    The window is enlarged (buffer doubled, zero re-padding) when the solution
    does not decay below ``boundary_tol`` at its ends.  For profiles tied to a
    code, the signs on the code sites must still match the code.

    Raises
    ------
    NoConvergence, WindowTooSmall, SignPatternBroken
    """
    settings = settings or NewtonSettings()
    prof = seed
    for attempt in range(MAX_ENLARGEMENTS + 1):
        u, history = _newton(np.array(prof.values, dtype=float), params, settings)
        out = LatticeProfile(prof.offset, u, prof.n_code, tuple(history))
        if out.boundary_max() < settings.boundary_tol:
            break
        if attempt == MAX_ENLARGEMENTS:
            raise WindowTooSmall(
                f"boundary amplitude {out.boundary_max():.3e} after {MAX_ENLARGEMENTS} enlargements"
            )
        extra = max(prof.buffer, 1)
        logger.debug("enlarging window by %d sites per side", extra)
        prof = out.padded(extra)
    if out.n_code:
        seed_signs = np.sign(seed.interior)
        got = np.sign(out.interior)
        if np.any(got != seed_signs):
            raise SignPatternBroken(
                f"code-site signs {got.astype(int).tolist()} differ from seed "
                f"{seed_signs.astype(int).tolist()} at eps={params.eps}"
            )
    return out


def solve_code(
    c: Code,
    params: ModelParams,
    settings: NewtonSettings | None = None,
    max_substeps: int = 64,
) -> LatticeProfile:
    """Seed ``c`` at the anticontinuum limit and continue it to ``params.eps``.

    Tries a direct Newton solve first and falls back to natural continuation
    in eps with step halving.
    """
    settings = settings or NewtonSettings()
    c = as_code(c)
    roots = find_roots(params)
    prof = seed_profile(c, roots, settings.buffer)
    try:
        return newton_solve(prof, params, settings)
    except (NoConvergence, SignPatternBroken):
        pass
    eps_now, step = 0.0, params.eps / 8
    for _ in range(max_substeps):
        target = min(eps_now + step, params.eps)
        try:
            prof = newton_solve(prof, params.with_eps(target), settings)
        except (NoConvergence, SignPatternBroken):
            step /= 2
            continue
        eps_now = target
        if eps_now >= params.eps:
            return prof
        step *= 1.5
    raise NoConvergence(f"could not continue code {c} to eps={params.eps}")


def profile_flips(profile: LatticeProfile, rel_floor: float = 0.0) -> int:
    """Sign changes of the code-site values, the analogue of :func:`flips`."""
    vals = profile.interior
    signs = np.sign(vals[np.abs(vals) > rel_floor * np.abs(vals).max()])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def code_of(profile: LatticeProfile, roots: RootPair) -> Code | None:
    """Read a code back off a small-eps profile by snapping code sites to +-a / +-A."""
    syms = []
    for v in profile.interior:
        if abs(v) < 0.5 * roots.a:
            return None
        large = abs(abs(v) - roots.A) < abs(abs(v) - roots.a)
        syms.append(Symbol(2 * large + (v < 0)))
    return Code(tuple(syms))


__all__ = [
    "LatticeProfile",
    "NewtonSettings",
    "seed_profile",
    "residual",
    "jacobian",
    "jacobian_banded",
    "newton_solve",
    "solve_code",
    "profile_flips",
    "code_of",
]
