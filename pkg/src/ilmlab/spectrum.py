"""Linear stability of ILMs: operators, eigenvalues, Krein signatures, counts.

Writing a perturbation of a real profile as ``v + i w``, the linearized
lattice gives ``omega v = L- w`` and ``omega w = L+ v``.  With
``lambda = omega**2`` the problem becomes ``L+ L- w = lambda w``; positive
real ``lambda`` are neutral oscillations, while negative or complex
``lambda`` signal instability.

Near the anticontinuum limit the small eigenvalues are ``eps * lt`` where
``lt`` solves the N x N truncated problem ``Lt+ Lt- w = lt w`` built from the
code alone.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .codes import Code, as_code, flips
from .errors import NotApplicable, PreconditionError, SingularLplus
from .model import ModelParams, RootPair, fprime_eval
from .solver import LatticeProfile, jacobian

logger = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-9
COMPLEX_TOL = 1e-9
NEG_TOL = 1e-9
COINCIDE_TOL = 1e-8
ZERO_OVERLAP = 0.999
SINGULAR_TOL = 1e-12


class Verdict(enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"


class EigenClass(enum.Enum):
    ZERO = "zero"
    REAL_NEGATIVE = "real-negative"
    REAL_POSITIVE = "real-positive"
    COMPLEX = "complex"


@dataclass(frozen=True)
class LinearOps:
    Lminus: np.ndarray
    Lplus: np.ndarray
    phase_residual: float = 0.0


@dataclass(frozen=True)
class TruncatedPencil:
    Lm_t: np.ndarray
    Lp_t: np.ndarray
    u_t: np.ndarray


@dataclass(frozen=True)
class Counts:
    N_c: int = 0
    N_r_plus: int = 0
    N_r_minus: int = 0
    N_i_plus: int = 0
    N_i_minus: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "N_c": self.N_c,
            "N_r_plus": self.N_r_plus,
            "N_r_minus": self.N_r_minus,
            "N_i_plus": self.N_i_plus,
            "N_i_minus": self.N_i_minus,
        }


@dataclass
class SpectrumReport:
    """Classified spectrum of one ILM, from the truncated or the full problem.

    ``krein`` holds, per eigenvalue, +1 / -1 for real eigenvalues with a
    positive / negative quadratic form ``<(L+)^-1 w, w>``, and 0 for the zero
    mode, complex eigenvalues and degenerate forms.  ``sigma`` is 1 or 0, or
    ``None`` when ``<(L+)^-1 u, u>`` is degenerate.
    """

    eigenvalues: np.ndarray
    classes: list[EigenClass]
    krein: np.ndarray
    counts: Counts
    n_Lplus: int
    n_Lminus: int
    sigma: int | None
    sigma_value: float
    verdict: Verdict
    zero_index: int
    zero_multiplicity: int
    zero_mode_check: float
    identities_ok: bool
    mode: str = "truncated"
    diagnostic: str = ""
    candidate: bool = False
    eigenvectors: np.ndarray | None = field(default=None, repr=False)

    @property
    def omegas(self) -> np.ndarray:
        """omega = sqrt(lambda) on the principal branch (the pair is +-omega)."""
        return np.sqrt(self.eigenvalues.astype(complex))

    @property
    def max_growth(self) -> float:
        """Largest |Im omega|; the exponential growth rate of the worst mode."""
        others = np.delete(self.omegas, self.zero_index)
        return float(np.max(np.abs(others.imag), initial=0.0))

    @property
    def n_negative_krein(self) -> int:
        return int(np.count_nonzero(self.krein < 0))

    def nonzero_eigenvalues(self) -> np.ndarray:
        return np.array([lam for lam, cls in zip(self.eigenvalues, self.classes) if cls is not EigenClass.ZERO])


# ---------------------------------------------------------------- operators


def _diag_minus(u: np.ndarray, params: ModelParams) -> np.ndarray:
    au = np.abs(u)
    return 2.0 * params.eps + 1.0 - au ** (params.p - 1) + params.gamma * au ** (params.q - 1)


def build_full_ops(profile, params: ModelParams) -> LinearOps:
    """L- and L+ on the profile window (zero Dirichlet truncation)."""
    u = np.asarray(getattr(profile, "values", profile), dtype=float)
    off = -params.eps * np.ones(u.size - 1)
    Lm = np.diag(_diag_minus(u, params)) + np.diag(off, 1) + np.diag(off, -1)
    Lp = jacobian(u, params)
    norm = float(np.linalg.norm(u))
    phase = float(np.linalg.norm(Lm @ u) / norm) if norm > 0 else 0.0
    return LinearOps(Lm, Lp, phase)


def build_truncated(c: Code, roots: RootPair) -> TruncatedPencil:
    """N x N matrices of the truncated problem for code ``c``."""
    c = as_code(c)
    u = c.amplitudes(roots.a, roots.A)
    N = len(u)
    padded = np.concatenate(([0.0], u, [0.0]))
    d_minus = (padded[:-2] + padded[2:]) / u
    Lm = np.diag(d_minus) - np.diag(np.ones(N - 1), 1) - np.diag(np.ones(N - 1), -1)
    Lp = np.diag(np.where(c.large_mask, roots.dfA, roots.dfa))
    return TruncatedPencil(Lm, Lp, u)


# ---------------------------------------------------------------- eigenvalues


def _product_eigs(Lp: np.ndarray, Lm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam, vecs = linalg.eig(Lp @ Lm)
    order = np.lexsort((lam.imag, lam.real))
    return lam[order], vecs[:, order]


def truncated_eigs(pencil: TruncatedPencil) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of Lt+ Lt-, sorted by real part."""
    return _product_eigs(pencil.Lp_t, pencil.Lm_t)


def full_eigs(ops: LinearOps, profile=None) -> tuple[np.ndarray, np.ndarray, int]:
    """Eigenpairs of L+ L- and the index of the phase (zero) mode.

    The zero mode is the eigenvector best aligned with the profile ``u``
    (``L- u = 0``), never the eigenvalue of smallest modulus.  Without a
    profile the smallest-modulus eigenvalue is used.
    """
    lam, vecs = _product_eigs(ops.Lplus, ops.Lminus)
    if profile is None:
        return lam, vecs, int(np.argmin(np.abs(lam)))
    u = np.asarray(getattr(profile, "values", profile), dtype=float)
    return lam, vecs, int(np.argmax(_overlaps(vecs, u)))


def _overlaps(vecs: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.abs(u @ vecs) / (np.linalg.norm(vecs, axis=0) * np.linalg.norm(u))


def _realify(vec: np.ndarray) -> np.ndarray:
    """Rotate a complex eigenvector of a real eigenvalue to be real."""
    k = int(np.argmax(np.abs(vec)))
    phase = np.conj(vec[k]) / abs(vec[k])
    return np.real(vec * phase)


def _check_invertible(Lplus: np.ndarray) -> None:
    ev = np.linalg.eigvalsh(Lplus)
    scale = max(np.max(np.abs(ev)), 1e-300)
    if np.min(np.abs(ev)) <= SINGULAR_TOL * scale:
        raise SingularLplus(f"L+ is singular to working precision (min |eig| = {np.min(np.abs(ev)):.3e})")


def krein_value(eigvec: np.ndarray, Lplus: np.ndarray) -> float:
    """<(L+)^-1 w, w> for a unit-normalized real eigenvector ``w``."""
    w = np.asarray(eigvec)
    if np.iscomplexobj(w):
        w = _realify(w)
    w = w / np.linalg.norm(w)
    _check_invertible(Lplus)
    return float(w @ linalg.solve(Lplus, w, assume_a="sym"))


def krein_signature(eigvec: np.ndarray, Lplus: np.ndarray, degeneracy_tol: float = DEGENERACY_TOL) -> int:
    """Sign of <(L+)^-1 w, w>: +1, -1, or 0 when the form is degenerate.

    Raises
    ------
    SingularLplus
    """
    value = krein_value(eigvec, Lplus)
    if abs(value) < degeneracy_tol:
        return 0
    return 1 if value > 0 else -1


# ---------------------------------------------------------------- counts


def sigma_quantity(c: Code, roots: RootPair) -> float:
    """<(Lt+)^-1 u, u> = K a^2 / f'(a) + (N - K) A^2 / f'(A)."""
    c = as_code(c)
    K = c.n_small
    return K * roots.a**2 / roots.dfa + (len(c) - K) * roots.A**2 / roots.dfA


def sigma_flag(value: float, scale: float, degeneracy_tol: float = DEGENERACY_TOL) -> int | None:
    """1 if negative, 0 if positive, None if |value| < degeneracy_tol * scale."""
    if abs(value) < degeneracy_tol * scale:
        return None
    return 1 if value < 0 else 0


def sigma0(c: Code, roots: RootPair, degeneracy_tol: float = DEGENERACY_TOL) -> int | None:
    return sigma_flag(sigma_quantity(c, roots), roots.a**2 + roots.A**2, degeneracy_tol)


def inertia(matrix: np.ndarray, zero_tol: float = 1e-10) -> tuple[int, int, int]:
    """(n_neg, n_zero, n_pos) of a symmetric matrix; |eig| < zero_tol counts as zero."""
    m = np.asarray(matrix, dtype=float)
    if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(m)))):
        raise PreconditionError("inertia needs a symmetric matrix")
    ev = np.linalg.eigvalsh(m)
    n_zero = int(np.count_nonzero(np.abs(ev) < zero_tol))
    n_neg = int(np.count_nonzero(ev <= -zero_tol))
    return n_neg, n_zero, len(ev) - n_neg - n_zero


def zero_multiplicity(
    Lm: np.ndarray, Lp: np.ndarray, u: np.ndarray, degeneracy_tol: float = DEGENERACY_TOL
) -> int:
    """Algebraic multiplicity of lambda = 0 in L+ L-, via its Jordan chain.

    With ``ker L- = span(u)`` a chain ``L+ L- v_{k+1} = v_k`` (``v_0 = u``)
    extends exactly while ``<(L+)^-1 v_k, u> = 0``.  This test is exact
    algebra, whereas the eigenvalues of a k-fold zero are perturbed by
    roundoff to the power 1/k.
    """
    u = np.asarray(u, dtype=float)
    un = u / np.linalg.norm(u)
    Lm_pinv = np.linalg.pinv(Lm, rcond=1e-10)
    mult, v = 1, un
    while mult < len(u):
        rhs = linalg.solve(Lp, v, assume_a="sym")
        if abs(rhs @ un) >= degeneracy_tol * max(np.linalg.norm(rhs), 1.0):
            break
        v = Lm_pinv @ rhs
        v = v - (v @ un) * un
        nv = np.linalg.norm(v)
        if nv == 0.0:
            break
        v = v / nv
        mult += 1
    return mult


# ---------------------------------------------------------------- classification


def classify(
    eigenvalues: np.ndarray,
    eigenvectors: np.ndarray,
    Lplus: np.ndarray,
    Lminus: np.ndarray,
    u: np.ndarray,
    *,
    zero_index: int | None = None,
    sigma_value: float | None = None,
    sigma_scale: float | None = None,
    mode: str = "truncated",
    degeneracy_tol: float = DEGENERACY_TOL,
) -> SpectrumReport:
    """Count eigenvalues by type and Krein sign and render a verdict.

    The completeness relations

        N_c + N_r^- + N_i^- = n(L+) - sigma,
        N_c + N_r^+ + N_i^- = n(L-)

    are checked; a mismatch makes the verdict Inconclusive.
    """
    lam = np.asarray(eigenvalues, dtype=complex)
    u = np.asarray(u, dtype=float)
    if zero_index is None:
        zero_index = int(np.argmax(_overlaps(eigenvectors, u)))
    unorm2 = float(u @ u)
    if sigma_value is None:
        sigma_value = float(u @ linalg.solve(Lplus, u, assume_a="sym"))
    if sigma_scale is None:
        sigma_scale = unorm2
    sigma = sigma_flag(sigma_value, sigma_scale, degeneracy_tol)

    zmult = zero_multiplicity(Lminus, Lplus, u, degeneracy_tol) if sigma is None else 1
    zero_set = {zero_index}
    if zmult > 1:
        # the other members of a degenerate zero cluster sit nearest to zero
        for k in np.argsort(np.abs(lam)):
            if len(zero_set) >= zmult:
                break
            zero_set.add(int(k))

    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    _check_invertible(Lplus)
    classes: list[EigenClass] = []
    krein = np.zeros(len(lam), dtype=int)
    N_c = N_rp = N_rm = N_ip = N_im = 0
    n_degenerate_krein = 0
    for k, val in enumerate(lam):
        if k in zero_set:
            classes.append(EigenClass.ZERO)
            continue
        if abs(val.imag) > COMPLEX_TOL * max(1.0, abs(val)):
            classes.append(EigenClass.COMPLEX)
            if val.imag > 0:
                N_c += 1
            continue
        sign = krein_signature(eigenvectors[:, k], Lplus, degeneracy_tol)
        krein[k] = sign
        if sign == 0:
            n_degenerate_krein += 1
        if val.real < -NEG_TOL * scale:
            classes.append(EigenClass.REAL_NEGATIVE)
            N_rp += sign > 0
            N_rm += sign < 0
        else:
            classes.append(EigenClass.REAL_POSITIVE)
            N_ip += sign > 0
            N_im += sign < 0
    counts = Counts(N_c, N_rp, N_rm, N_ip, N_im)

    n_plus = inertia(Lplus)[0]
    n_minus = inertia(Lminus, zero_tol=1e-10 * max(1.0, np.max(np.abs(np.diag(Lminus)))))[0]

    unstable = any(cl in (EigenClass.COMPLEX, EigenClass.REAL_NEGATIVE) for cl in classes)
    diagnostic = []
    identities_ok = True
    if sigma is not None and n_degenerate_krein == 0:
        lhs1, rhs1 = N_c + N_rm + N_im, n_plus - sigma
        lhs2, rhs2 = N_c + N_rp + N_im, n_minus
        if lhs1 != rhs1 or lhs2 != rhs2:
            identities_ok = False
            diagnostic.append(f"count identities fail: {lhs1} vs {rhs1}, {lhs2} vs {rhs2}")
    else:
        identities_ok = False

    if sigma is None:
        verdict = Verdict.INCONCLUSIVE
        diagnostic.append(f"degenerate <(L+)^-1 u, u> = {sigma_value:.3e}; zero has multiplicity {zmult}")
    elif n_degenerate_krein:
        verdict = Verdict.INCONCLUSIVE
        diagnostic.append(f"{n_degenerate_krein} real eigenvalue(s) with degenerate Krein form")
    elif not identities_ok:
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.UNSTABLE if unstable else Verdict.STABLE

    if verdict is Verdict.STABLE and mode == "truncated":
        nz = np.sort(np.real([lam[k] for k in range(len(lam)) if k not in zero_set]))
        if nz.size > 1 and np.min(np.diff(nz)) < COINCIDE_TOL * scale:
            verdict = Verdict.INCONCLUSIVE
            diagnostic.append("coinciding truncated eigenvalues; corrections may leave the real axis")

    # an inconclusive code whose remaining spectrum shows no instability
    candidate = verdict is Verdict.INCONCLUSIVE and not unstable

    zero_check = float(abs(lam[zero_index]))
    return SpectrumReport(
        eigenvalues=lam,
        classes=classes,
        krein=krein,
        counts=counts,
        n_Lplus=n_plus,
        n_Lminus=n_minus,
        sigma=sigma,
        sigma_value=float(sigma_value),
        verdict=verdict,
        zero_index=zero_index,
        zero_multiplicity=zmult,
        zero_mode_check=zero_check,
        identities_ok=identities_ok,
        mode=mode,
        diagnostic="; ".join(diagnostic),
        candidate=candidate,
        eigenvectors=eigenvectors,
    )


def analyze_truncated(c: Code, roots: RootPair, degeneracy_tol: float = DEGENERACY_TOL) -> SpectrumReport:
    """Classify code ``c`` from its truncated pencil."""
    pencil = build_truncated(c, roots)
    lam, vecs = truncated_eigs(pencil)
    return classify(
        lam,
        vecs,
        pencil.Lp_t,
        pencil.Lm_t,
        pencil.u_t,
        sigma_value=sigma_quantity(c, roots),
        sigma_scale=roots.a**2 + roots.A**2,
        mode="truncated",
        degeneracy_tol=degeneracy_tol,
    )


def analyze_profile(
    profile: LatticeProfile, params: ModelParams, degeneracy_tol: float = DEGENERACY_TOL
) -> SpectrumReport:
    """Classify a solved profile from the full M x M problem."""
    ops = build_full_ops(profile, params)
    lam, vecs, iz = full_eigs(ops, profile)
    report = classify(
        lam,
        vecs,
        ops.Lplus,
        ops.Lminus,
        np.asarray(profile.values),
        zero_index=iz,
        mode="full",
        degeneracy_tol=degeneracy_tol,
    )
    overlap = float(_overlaps(vecs[:, [iz]], np.asarray(profile.values))[0])
    if overlap < ZERO_OVERLAP:
        report.verdict = Verdict.INCONCLUSIVE
        report.diagnostic = "; ".join(filter(None, [report.diagnostic, f"phase mode overlap {overlap:.4f}"]))
    return report


# ---------------------------------------------------------------- analytic predictions


def _family(c: Code) -> int | None:
    N = len(c)
    K = c.n_small
    if K == 0:
        return 1
    if K == N:
        return 2
    n0 = flips(c)
    if n0 == 0:
        return 3
    if n0 == N - 1:
        return 4
    return None


def predict_inertia(c: Code, roots: RootPair) -> tuple[int, int, int]:
    """Predicted (negative, zero, positive) eigenvalue counts of the truncated pencil.

    Defined for codes made only of large symbols, only of small symbols, of
    one sign only, or fully sign-alternating.

    Raises
    ------
    NotApplicable
        Outside these families, or when sigma is degenerate in the last two.
    """
    c = as_code(c)
    N, K, n0 = len(c), c.n_small, flips(c)
    family = _family(c)
    if family == 1:
        return n0, 1, N - n0 - 1
    if family == 2:
        return N - n0 - 1, 1, n0
    if family is None:
        raise NotApplicable(f"code {c} is in none of the four analytic families")
    s0 = sigma0(c, roots)
    if s0 is None:
        raise NotApplicable(f"sigma is degenerate for code {c}")
    if family == 3:
        return K - s0, 1, N - K - (1 - s0)
    return N - K - (1 - s0), 1, K - s0


def pencil_inertia(report: SpectrumReport) -> tuple[int, int, int]:
    """(negative, zero, positive) real eigenvalue counts in a report."""
    neg = sum(cl is EigenClass.REAL_NEGATIVE for cl in report.classes)
    pos = sum(cl is EigenClass.REAL_POSITIVE for cl in report.classes)
    zero = sum(cl is EigenClass.ZERO for cl in report.classes)
    return neg, zero, pos


@dataclass(frozen=True)
class ConditionResult:
    shape: str
    value: float
    holds: bool
    prediction: str


def theorem_conditions(c: Code, roots: RootPair) -> ConditionResult:
    """Evaluate the sign condition for the two mixed-amplitude stable shapes.

    Shape "C": one sign throughout, exactly one small symbol.  The ILM is a
    constrained energy minimizer when ``a^2/f'(a) + (N-1) A^2/f'(A) < 0``.

    Shape "D": fully sign-alternating, exactly one large symbol.  The ILM is
    spectrally stable (not a constrained minimizer for N >= 2) when
    ``(N-1) a^2/f'(a) + A^2/f'(A) > 0``.
    """
    c = as_code(c)
    N, K = len(c), c.n_small
    a2, A2 = roots.a**2, roots.A**2
    if K == 1 and flips(c) == 0:
        value = a2 / roots.dfa + (N - 1) * A2 / roots.dfA
        holds = value < 0
        return ConditionResult("C", value, holds, "constrained minimizer, stable" if holds else "not predicted stable")
    if K == N - 1 and flips(c) == N - 1:
        value = (N - 1) * a2 / roots.dfa + A2 / roots.dfA
        holds = value > 0
        pred = "stable, not a constrained minimizer" if N >= 2 else "stable"
        return ConditionResult("D", value, holds, pred if holds else "not predicted stable")
    raise NotApplicable(f"code {c} has neither of the two mixed shapes")
