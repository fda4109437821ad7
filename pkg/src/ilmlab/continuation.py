"""Pseudo-arclength continuation of ILM branches in the coupling eps.

The generic core works on any smooth family ``F(x, eps) = 0`` and is reused
for manufactured test problems.  Folds show up as turning points in eps.  A
pitchfork is seen either on a symmetric branch (a Jacobian eigenvalue
crosses zero with an antisymmetric eigenvector while eps keeps increasing) or,
from one of the two asymmetric branches it connects, as a turning point at
which the profile becomes symmetric.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import linalg

from .codes import Code, Symbol, as_code, canonicalize
from .errors import InitialSolveFailed, NoConvergence, SignPatternBroken, WindowTooSmall
from .model import ModelParams, RootPair, energy_mass, find_roots
from .solver import LatticeProfile, NewtonSettings, jacobian, residual, residual_scale, solve_code
from .spectrum import Verdict, analyze_profile

logger = logging.getLogger(__name__)

STEP_INIT = 1e-3
STEP_MIN = 1e-6
STEP_MAX = 5e-3
STEP_GROW = 1.3
SYMMETRY_TOL = 1e-3


class EventKind(enum.Enum):
    FOLD = "Fold"
    PITCHFORK = "Pitchfork"


@dataclass(frozen=True)
class BifurcationEvent:
    kind: EventKind
    eps_at: float
    detail: str = "unidentified"


@dataclass
class ArcPoint:
    """One converged point of the generic continuation."""

    x: np.ndarray
    eps: float
    s: float
    tangent: np.ndarray
    min_sv: float
    jac_eigs: np.ndarray = field(repr=False)
    jac_vecs: np.ndarray = field(repr=False)
    iterations: int = 0

    @property
    def deps_ds(self) -> float:
        return float(self.tangent[-1])


@dataclass
class BranchPoint:
    eps: float
    profile: LatticeProfile
    Q: float
    H: float
    verdict: Verdict
    jac_min_sv: float
    s: float = 0.0
    deps_ds: float = 0.0


@dataclass
class Problem:
    """A smooth family ``F(x, eps) = 0`` with its partial derivatives.

    ``symmetry`` maps a state to its mirror image (an involution); ``jac_x``
    must be symmetric so that its eigenvectors are real and orthogonal.
    """

    residual: Callable[[np.ndarray, float], np.ndarray]
    jac_x: Callable[[np.ndarray, float], np.ndarray]
    jac_eps: Callable[[np.ndarray, float], np.ndarray]
    tol: Callable[[np.ndarray], float] = lambda x: 1e-12
    symmetry: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True)
class ArcSettings:
    step_init: float = STEP_INIT
    step_min: float = STEP_MIN
    step_max: float = STEP_MAX
    max_corrector: int = 8
    fast_iterations: int = 3
    max_points: int = 20000


def _tangent(problem: Problem, x: np.ndarray, eps: float, t_prev: np.ndarray) -> np.ndarray:
    Fx = problem.jac_x(x, eps)
    Fe = problem.jac_eps(x, eps)
    n = x.size
    B = np.zeros((n + 1, n + 1))
    B[:n, :n] = Fx
    B[:n, n] = Fe
    B[n, :] = t_prev
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    t = linalg.solve(B, rhs)
    t /= np.linalg.norm(t)
    return t if t @ t_prev >= 0 else -t


def _make_point(problem: Problem, x, eps, s, tangent, iterations) -> ArcPoint:
    ev, vecs = np.linalg.eigh(problem.jac_x(x, eps))
    return ArcPoint(
        x=x.copy(),
        eps=float(eps),
        s=float(s),
        tangent=tangent,
        min_sv=float(np.min(np.abs(ev))),
        jac_eigs=ev,
        jac_vecs=vecs,
        iterations=iterations,
    )


def _corrector(problem: Problem, x_pred, eps_pred, tangent, settings: ArcSettings):
    n = x_pred.size
    x, eps = x_pred.copy(), float(eps_pred)
    for it in range(settings.max_corrector + 1):
        F = problem.residual(x, eps)
        if not np.all(np.isfinite(F)):
            break
        if np.max(np.abs(F)) < problem.tol(x) and it > 0:
            return x, eps, it
        if it == settings.max_corrector:
            break
        B = np.zeros((n + 1, n + 1))
        B[:n, :n] = problem.jac_x(x, eps)
        B[:n, n] = problem.jac_eps(x, eps)
        B[n, :] = tangent
        g = np.append(F, tangent[:n] @ (x - x_pred) + tangent[n] * (eps - eps_pred))
        try:
            d = linalg.solve(B, -g)
        except linalg.LinAlgError:
            break
        x = x + d[:n]
        eps = eps + d[n]
    raise NoConvergence("corrector failed")


def arclength(
    problem: Problem,
    x0: np.ndarray,
    eps0: float,
    eps_max: float,
    settings: ArcSettings | None = None,
    accept: Callable[[np.ndarray, float], bool] | None = None,
    eps_min: float = 0.0,
    direction: float = 1.0,
) -> list[ArcPoint]:
    """Trace the solution curve through ``(x0, eps0)``, initially moving eps by ``sign(direction)``.

    Stops when eps leaves ``(eps_min, eps_max]``, when the step falls below
    ``step_min``, or after ``max_points`` points.  ``accept`` may veto a
    converged point (the step is then halved).
    """
    settings = settings or ArcSettings()
    x = np.asarray(x0, dtype=float)
    t = np.zeros(x.size + 1)
    t[-1] = 1.0 if direction >= 0 else -1.0
    t = _tangent(problem, x, eps0, t)
    points = [_make_point(problem, x, eps0, 0.0, t, 0)]
    ds = settings.step_init
    while len(points) < settings.max_points:
        last = points[-1]
        x_pred = last.x + ds * last.tangent[:-1]
        eps_pred = last.eps + ds * last.tangent[-1]
        try:
            xn, en, iters = _corrector(problem, x_pred, eps_pred, last.tangent, settings)
            if accept is not None and not accept(xn, en):
                raise NoConvergence("point rejected")
            tn = _tangent(problem, xn, en, last.tangent)
        except (NoConvergence, linalg.LinAlgError):
            ds /= 2.0
            if ds < settings.step_min:
                logger.info("step fell below %g at eps=%.6g", settings.step_min, last.eps)
                break
            continue
        if en > eps_max:
            break
        points.append(_make_point(problem, xn, en, last.s + ds, tn, iters))
        if en <= eps_min:
            break
        if iters <= settings.fast_iterations:
            ds = min(ds * STEP_GROW, settings.step_max)
    return points


# ---------------------------------------------------------------- event detection


def _turning_location(p0: ArcPoint, p1: ArcPoint, pm: ArcPoint | None) -> float:
    """eps at the turning point between p0 and p1 (where d eps / ds = 0)."""
    # secant on d eps/ds gives s*, a quadratic through three points gives eps(s*)
    d0, d1 = p0.deps_ds, p1.deps_ds
    s_star = p0.s + (p1.s - p0.s) * d0 / (d0 - d1)
    others = [p for p in (pm,) if p is not None]
    pts = others + [p0, p1]
    if len(pts) < 3:
        # a quadratic with slopes d0 at p0 and d1 at p1
        h = p1.s - p0.s
        return p0.eps + d0 * (s_star - p0.s) + 0.5 * (d1 - d0) / h * (s_star - p0.s) ** 2
    coef = np.polyfit([p.s for p in pts], [p.eps for p in pts], 2)
    return float(np.polyval(coef, s_star))


def _sym_defect(problem: Problem, x: np.ndarray) -> np.ndarray | None:
    if problem.symmetry is None:
        return None
    return x - problem.symmetry(x)


def _is_symmetric_turn(problem: Problem, p0: ArcPoint, p1: ArcPoint) -> bool:
    # across a symmetric turning point the antisymmetric part changes sign;
    # across a fold it stays essentially the same
    d0, d1 = _sym_defect(problem, p0.x), _sym_defect(problem, p1.x)
    if d0 is None:
        return False
    n0, n1 = np.linalg.norm(d0), np.linalg.norm(d1)
    scale = max(np.linalg.norm(p0.x), 1.0)
    if max(n0, n1) < SYMMETRY_TOL * scale:
        return False  # symmetric branch turning: an ordinary fold of that branch
    return float(d0 @ d1) < -0.5 * n0 * n1 or min(n0, n1) < SYMMETRY_TOL * scale


def turning_points(points: list[ArcPoint]) -> list[int]:
    """Indices i where d eps/ds changes sign between points i and i + 1."""
    return [i for i in range(len(points) - 1) if points[i].deps_ds * points[i + 1].deps_ds < 0]


def detect_fold(points: list[ArcPoint], problem: Problem | None = None) -> BifurcationEvent | None:
    """First fold: a turning point in eps that is not a symmetry-breaking point."""
    for i in turning_points(points):
        if problem is not None and _is_symmetric_turn(problem, points[i], points[i + 1]):
            continue
        pm = points[i - 1] if i > 0 else None
        return BifurcationEvent(EventKind.FOLD, _turning_location(points[i], points[i + 1], pm))
    return None


def _critical_antisymmetric(problem: Problem, p0: ArcPoint, p1: ArcPoint) -> int | None:
    """Index of a Jacobian eigenvalue changing sign between p0 and p1 with an
    eigenvector odd under the symmetry, if any."""
    if problem.symmetry is None:
        return None
    n0 = int(np.count_nonzero(p0.jac_eigs < 0))
    n1 = int(np.count_nonzero(p1.jac_eigs < 0))
    if n0 == n1:
        return None
    k = min(n0, n1)  # the eigenvalue that moved through zero, in ascending order
    for idx in (k, k - 1):
        if not 0 <= idx < p0.jac_eigs.size:
            continue
        w = p1.jac_vecs[:, idx]
        if abs(w @ problem.symmetry(w) + 1.0) < 1e-3 and np.linalg.norm(
            _sym_defect(problem, p0.x)
        ) < SYMMETRY_TOL * max(np.linalg.norm(p0.x), 1.0):
            return idx
    return None


def _bisect_crossing(problem: Problem, p0: ArcPoint, p1: ArcPoint, idx: int, iterations: int = 40) -> float:
    """Locate eps where the ``idx``-th Jacobian eigenvalue vanishes on a symmetric branch."""
    lo, hi = (p0, p1)
    x_lo, e_lo, x_hi, e_hi = lo.x, lo.eps, hi.x, hi.eps
    sign_lo = np.sign(lo.jac_eigs[idx])
    for _ in range(iterations):
        e_mid = 0.5 * (e_lo + e_hi)
        x = 0.5 * (x_lo + x_hi)
        for _ in range(20):
            F = problem.residual(x, e_mid)
            if np.max(np.abs(F)) < problem.tol(x):
                break
            J = problem.jac_x(x, e_mid)
            # restrict Newton to the symmetric subspace, where J stays regular
            dx = np.linalg.lstsq(J, -F, rcond=1e-12)[0]
            if problem.symmetry is not None:
                dx = 0.5 * (dx + problem.symmetry(dx))
            x = x + dx
        lam = np.linalg.eigvalsh(problem.jac_x(x, e_mid))[idx]
        if np.sign(lam) == sign_lo:
            x_lo, e_lo = x, e_mid
        else:
            x_hi, e_hi = x, e_mid
        if abs(e_hi - e_lo) < 1e-10:
            break
    return 0.5 * (e_lo + e_hi)


def detect_pitchfork(points: list[ArcPoint], problem: Problem) -> BifurcationEvent | None:
    """First pitchfork along the branch.

    Either a symmetry-breaking turning point of an asymmetric branch, or on a
    symmetric branch a Jacobian eigenvalue crossing zero, with an odd
    eigenvector, while eps keeps moving in the same direction.
    """
    for i in range(len(points) - 1):
        p0, p1 = points[i], points[i + 1]
        if p0.deps_ds * p1.deps_ds < 0:
            if _is_symmetric_turn(problem, p0, p1):
                pm = points[i - 1] if i > 0 else None
                return BifurcationEvent(EventKind.PITCHFORK, _turning_location(p0, p1, pm))
            continue
        idx = _critical_antisymmetric(problem, p0, p1)
        if idx is not None:
            return BifurcationEvent(EventKind.PITCHFORK, _bisect_crossing(problem, p0, p1, idx))
    return None


def detect_events(points: list[ArcPoint], problem: Problem) -> list[BifurcationEvent]:
    """All folds and pitchforks along the branch, in order of arclength."""
    events = []
    for i in range(len(points) - 1):
        seg = points[max(i - 1, 0) : i + 2]
        pair = points[i : i + 2]
        if pair[0].deps_ds * pair[1].deps_ds < 0:
            ev = detect_pitchfork(seg, problem) or detect_fold(seg, problem)
        else:
            ev = detect_pitchfork(pair, problem)
        if ev is not None:
            events.append(ev)
    return events


# ---------------------------------------------------------------- lattice branches


def lattice_problem(params: ModelParams, n_code: int, settings: NewtonSettings | None = None) -> Problem:
    """The stationary lattice equation as a family in eps on a fixed window.

    The window is assumed symmetric about the code (as produced by
    :func:`~ilmlab.solver.seed_profile`), so reflection reverses the array.
    """
    settings = settings or NewtonSettings()

    # written with eps explicit so that correctors may step through eps < 0
    base = params.with_eps(0.0)

    def lap(x):
        padded = np.concatenate(([0.0], x, [0.0]))
        return padded[2:] - 2.0 * x + padded[:-2]

    def F(x, eps):
        return residual(x, base) + eps * lap(x)

    def Fx(x, eps):
        n = x.size
        second = np.diag(-2.0 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
        return -jacobian(x, base) + eps * second

    def Fe(x, eps):
        return lap(x)

    def tol(x):
        return settings.tol * residual_scale(x, params)

    return Problem(F, Fx, Fe, tol, symmetry=None)


def _with_symmetry(problem: Problem, sign: float) -> Problem:
    return Problem(problem.residual, problem.jac_x, problem.jac_eps, problem.tol, lambda x: sign * x[::-1])


def branch_symmetry(x: np.ndarray) -> float:
    """+1 or -1: which of R or -R the state is closest to being invariant under."""
    return 1.0 if np.linalg.norm(x - x[::-1]) <= np.linalg.norm(x + x[::-1]) else -1.0


def window_code(profile: LatticeProfile, roots: RootPair, tol: float = 0.15) -> Code | None:
    """Canonical code of a small-eps profile over its whole window, if it snaps cleanly."""
    vals = profile.values
    syms = []
    for v in vals:
        av = abs(v)
        if av < tol * roots.a:
            syms.append(None)
            continue
        if abs(av - roots.a) < tol * roots.a:
            syms.append(Symbol(int(v < 0)))
        elif abs(av - roots.A) < tol * roots.A:
            syms.append(Symbol(2 + int(v < 0)))
        else:
            return None
    nz = [i for i, s in enumerate(syms) if s is not None]
    if not nz:
        return None
    inner = syms[nz[0] : nz[-1] + 1]
    if any(s is None for s in inner):
        return None
    return canonicalize(Code(tuple(inner)))


def continue_branch(
    c: Code,
    params_base: ModelParams,
    eps_max: float = 0.2,
    step: float = STEP_INIT,
    settings: NewtonSettings | None = None,
    arc: ArcSettings | None = None,
) -> tuple[list[BranchPoint], list[BifurcationEvent]]:
    """Continue the branch of code ``c`` from the anticontinuum limit.

    The first point is solved at ``eps = step``; pseudo-arclength stepping then
    follows the branch until eps exceeds ``eps_max``, returns to zero (another
    anticontinuum endpoint) or the step underflows.  Every point is tagged
    with the full-problem stability verdict.

    Raises
    ------
    InitialSolveFailed
    """
    c = as_code(c)
    settings = settings or NewtonSettings()
    arc = arc or ArcSettings(step_init=step)
    roots = find_roots(params_base)
    try:
        start = solve_code(c, params_base.with_eps(step), settings)
    except (NoConvergence, SignPatternBroken, WindowTooSmall) as exc:
        raise InitialSolveFailed(f"could not solve code {c} at eps={step}: {exc}") from exc
    problem = lattice_problem(params_base, len(c), settings)
    problem = _with_symmetry(problem, branch_symmetry(start.values))
    raw = arclength(problem, np.array(start.values), step, eps_max, arc, eps_min=0.0)

    points = []
    for rp in raw:
        prm = params_base.with_eps(max(rp.eps, 0.0))
        prof = start.with_values(rp.x)
        H, Q, _ = energy_mass(prof, prm)
        try:
            verdict = analyze_profile(prof, prm).verdict if rp.eps > 0 else Verdict.INCONCLUSIVE
        except Exception as exc:  # noqa: BLE001 - a tag, never fatal for the branch
            logger.debug("spectrum failed at eps=%g: %s", rp.eps, exc)
            verdict = Verdict.INCONCLUSIVE
        points.append(BranchPoint(rp.eps, prof, Q, H, verdict, rp.min_sv, rp.s, rp.deps_ds))

    events = detect_events(raw, problem)
    if events and raw[-1].eps < 2 * step:
        end = window_code(points[-1].profile, roots)
        if end is not None and end != canonicalize(c):
            last = events[-1]
            events[-1] = BifurcationEvent(last.kind, last.eps_at, f"merges with the branch of ({end})")
    for i, ev in enumerate(events):
        if ev.kind is EventKind.PITCHFORK and ev.detail == "unidentified":
            codes = _symmetric_partners(problem, raw, ev.eps_at, start, roots, arc, eps_max)
            if codes:
                events[i] = BifurcationEvent(ev.kind, ev.eps_at, "connects to the symmetric branches of " + ", ".join(f"({k})" for k in codes))
    return points, events


def _symmetric_partners(
    problem: Problem,
    raw: list[ArcPoint],
    eps_at: float,
    start: LatticeProfile,
    roots: RootPair,
    arc: ArcSettings,
    eps_max: float,
) -> list[Code]:
    """Follow the symmetric branch through a pitchfork to the anticontinuum limit in both directions."""
    nearest = min(raw, key=lambda p: abs(p.eps - eps_at) + np.linalg.norm(_sym_defect(problem, p.x)))
    x = 0.5 * (nearest.x + problem.symmetry(nearest.x))
    found = []
    for direction in (-1.0, 1.0):
        try:
            pts = arclength(problem, x, nearest.eps, eps_max, replace(arc, max_points=4000), eps_min=0.0, direction=direction)
        except (NoConvergence, linalg.LinAlgError):
            continue
        if pts[-1].eps < 2 * arc.step_init:
            code = window_code(start.with_values(pts[-1].x), roots)
            if code is not None and code not in found:
                found.append(code)
    return found


def manufactured_pitchfork(eps_c: float = 0.3) -> Problem:
    """Two unknowns with a symmetric branch x1 = x2 = 1/2 that loses stability at eps_c.

    With d = x1 - x2, s = x1 + x2 and mu = eps - eps_c the equations are
    ``mu d - d^3 = 0`` and ``s - 1 = 0``; the asymmetric branches are
    ``d^2 = mu``.
    """

    def F(x, eps):
        d, s = x[0] - x[1], x[0] + x[1]
        mu = eps - eps_c
        g = mu * d - d**3
        return np.array([g + (s - 1.0), -g + (s - 1.0)]) / 2.0

    def Fx(x, eps):
        d = x[0] - x[1]
        gd = (eps - eps_c) - 3.0 * d**2
        # d/dx of (g +- (s-1))/2 with dg/dx1 = gd, dg/dx2 = -gd
        return 0.5 * np.array([[gd + 1.0, -gd + 1.0], [-gd + 1.0, gd + 1.0]])

    def Fe(x, eps):
        d = x[0] - x[1]
        return 0.5 * np.array([d, -d])

    return Problem(F, Fx, Fe, symmetry=lambda x: x[::-1].copy())


def manufactured_fold(eps_star: float = 0.3) -> Problem:
    """x1^2 = eps_star - eps, x2 = 1: a fold at eps_star with no symmetry."""

    def F(x, eps):
        return np.array([eps_star - eps - x[0] ** 2, 1.0 - x[1]])

    def Fx(x, eps):
        return np.array([[-2.0 * x[0], 0.0], [0.0, -1.0]])

    def Fe(x, eps):
        return np.array([-1.0, 0.0])

    return Problem(F, Fx, Fe, symmetry=lambda x: x[::-1].copy())
