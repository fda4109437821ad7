"""Bulk stability classification of irreducible codes over (N, delta) grids."""

from __future__ import annotations

import csv
import enum
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .codes import Code, as_code, describe, enumerate_irreducible, N_MAX
from .errors import ILMError, PreconditionError
from .model import ModelParams, find_roots
from .solver import solve_code
from .spectrum import EigenClass, Verdict, analyze_profile, analyze_truncated

logger = logging.getLogger(__name__)


class ScanMode(enum.Enum):
    TRUNCATED_ONLY = "truncated"
    FULL_AT_EPS = "full"


@dataclass(frozen=True)
class ScanRequest:
    p: int
    q: int
    deltas: tuple[float, ...]
    n_range: tuple[int, int]
    mode: ScanMode = ScanMode.TRUNCATED_ONLY
    eps: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        object.__setattr__(self, "mode", ScanMode(self.mode))
        if not self.deltas or any(not 0.0 < d < 1.0 for d in self.deltas):
            raise PreconditionError(f"deltas must lie strictly inside (0, 1), got {self.deltas}")
        lo, hi = self.n_range
        if not 1 <= lo <= hi <= N_MAX:
            raise PreconditionError(f"n_range must satisfy 1 <= lo <= hi <= {N_MAX}, got {self.n_range}")
        if self.mode is ScanMode.FULL_AT_EPS and not (self.eps is not None and self.eps > 0):
            raise PreconditionError("full-problem scans need eps > 0")
        ModelParams(self.p, self.q, 0.5)


@dataclass
class ScanRow:
    N: int
    delta: float
    stable: list[Code]
    inconclusive: list[Code]
    total_checked: int
    verdicts: dict[Code, Verdict] = field(default_factory=dict, repr=False)
    diagnostics: dict[Code, str] = field(default_factory=dict, repr=False)


def _classify_one(c: Code, params: ModelParams, mode: ScanMode) -> tuple[Verdict, str]:
    try:
        if mode is ScanMode.TRUNCATED_ONLY:
            rep = analyze_truncated(c, find_roots(params))
        else:
            rep = analyze_profile(solve_code(c, params), params)
    except (ILMError, np.linalg.LinAlgError) as exc:
        return Verdict.INCONCLUSIVE, f"{type(exc).__name__}: {exc}"
    return rep.verdict, rep.diagnostic


def run_scan(req: ScanRequest, threads: int = 1) -> list[ScanRow]:
    """Classify every irreducible code for each (N, delta) of the request.

    Rows come out ordered by N, then by delta in request order; codes within a
    row are in canonical order, independent of ``threads``.
    """
    rows = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for N in range(req.n_range[0], req.n_range[1] + 1):
            codes = enumerate_irreducible(N)
            for delta in req.deltas:
                params = ModelParams.from_delta(req.p, req.q, delta, req.eps or 0.0)
                if pool is None:
                    results = [_classify_one(c, params, req.mode) for c in codes]
                else:
                    results = list(pool.map(lambda c: _classify_one(c, params, req.mode), codes))
                verdicts = {c: v for c, (v, _) in zip(codes, results)}
                diags = {c: d for c, (_, d) in zip(codes, results) if d}
                rows.append(
                    ScanRow(
                        N=N,
                        delta=delta,
                        stable=[c for c in codes if verdicts[c] is Verdict.STABLE],
                        inconclusive=[c for c in codes if verdicts[c] is Verdict.INCONCLUSIVE],
                        total_checked=len(codes),
                        verdicts=verdicts,
                        diagnostics=diags,
                    )
                )
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


def rows_to_csv(rows: list[ScanRow]) -> str:
    """CSV with columns N, delta, code, verdict (every checked code)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "delta", "code", "verdict"])
    for row in rows:
        for c, v in row.verdicts.items():
            w.writerow([row.N, repr(row.delta), str(c), v.value])
    return buf.getvalue()


def rows_to_table(rows: list[ScanRow]) -> str:
    """Stable codes per N (lines) and delta (columns), named by stacked family."""
    deltas = sorted({r.delta for r in rows})
    by_key = {(r.N, r.delta): r for r in rows}
    lines = ["N | " + " | ".join(f"delta={d:g}" for d in deltas)]
    for N in sorted({r.N for r in rows}):
        cells = []
        for d in deltas:
            r = by_key.get((N, d))
            if r is None:
                cells.append("-")
                continue
            text = ", ".join(describe(c) for c in r.stable) or "none"
            if r.inconclusive:
                text += " ; inconclusive: " + ", ".join(describe(c) for c in r.inconclusive)
            cells.append(text)
        lines.append(f"{N} | " + " | ".join(cells))
    return "\n".join(lines) + "\n"


@dataclass
class SweepPoint:
    gamma: float
    eigenvalues: np.ndarray
    classes: list[EigenClass]

    @property
    def has_negative(self) -> bool:
        return EigenClass.REAL_NEGATIVE in self.classes

    @property
    def has_complex(self) -> bool:
        return EigenClass.COMPLEX in self.classes


def sweep_gamma(c: Code, p: int, q: int, grid) -> list[SweepPoint]:
    """Truncated eigenvalues of code ``c`` with class tags along a gamma grid."""
    c = as_code(c)
    out = []
    for g in grid:
        rep = analyze_truncated(c, find_roots(ModelParams(p, q, float(g))))
        order = np.lexsort((rep.eigenvalues.imag, rep.eigenvalues.real))
        out.append(SweepPoint(float(g), rep.eigenvalues[order], [rep.classes[k] for k in order]))
    return out


def default_gamma_grid(p: int, q: int, n: int = 40, lo: float = 0.002, hi: float = 0.998) -> np.ndarray:
    """``n`` equally spaced gamma values from ``lo`` to ``hi`` times gamma_crit."""
    return np.linspace(lo, hi, n) * ModelParams(p, q, 0.0).gamma_crit


def sweep_to_csv(points: list[SweepPoint]) -> str:
    """Long-format CSV: gamma, index, re, im, class."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma", "index", "re", "im", "class"])
    for pt in points:
        for k, (lam, cls) in enumerate(zip(pt.eigenvalues, pt.classes)):
            w.writerow([repr(pt.gamma), k, repr(float(lam.real)), repr(float(lam.imag)), cls.value])
    return buf.getvalue()
