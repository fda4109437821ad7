"""Command-line front end.

Every command prints one JSON object (``"schema": "ilm/1"``) unless a CSV or
table format is requested.  Exit codes: 0 success, 1 usage or precondition
error, 2 domain error (no competing roots, not applicable), 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .codes import Code, count_irreducible, describe, enumerate_irreducible
from .continuation import continue_branch
from .dynamics import evolve, growth_rate, perturb
from .errors import DomainError, ILMError, NotApplicable, NotGrowing, NumericalError, PreconditionError
from .model import ModelParams, find_roots
from .scan import ScanMode, ScanRequest, default_gamma_grid, rows_to_csv, rows_to_table, run_scan, sweep_gamma, sweep_to_csv
from .solver import LatticeProfile, NewtonSettings, solve_code
from .spectrum import SpectrumReport, analyze_profile, analyze_truncated

logger = logging.getLogger("ilmlab")

SCHEMA = "ilm/1"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output


def _num(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def _emit(payload: dict) -> None:
    sys.stdout.write(dumps({"schema": SCHEMA, **payload}) + "\n")


def _params_dict(params: ModelParams) -> dict:
    return {"p": params.p, "q": params.q, "gamma": params.gamma, "eps": params.eps}


def report_dict(rep: SpectrumReport) -> dict:
    return {
        "mode": rep.mode,
        "verdict": rep.verdict.value,
        "eigenvalues": [[float(v.real), float(v.imag)] for v in rep.eigenvalues],
        "classes": [c.value for c in rep.classes],
        "krein": [int(k) for k in rep.krein],
        "counts": rep.counts.as_dict(),
        "n_Lplus": rep.n_Lplus,
        "n_Lminus": rep.n_Lminus,
        "sigma": rep.sigma,
        "sigma_value": rep.sigma_value,
        "zero_multiplicity": rep.zero_multiplicity,
        "zero_mode_check": rep.zero_mode_check,
        "identities_ok": rep.identities_ok,
        "max_growth": rep.max_growth,
        "candidate": rep.candidate,
        "diagnostic": rep.diagnostic,
    }


def profile_dict(prof: LatticeProfile, params: ModelParams, code: Code | None) -> dict:
    return {
        "kind": "profile",
        "params": _params_dict(params),
        "code": str(code) if code is not None else None,
        "offset": prof.offset,
        "n_code": prof.n_code,
        "values": [float(v) for v in prof.values],
        "residual_history": list(prof.residual_history),
    }


def load_profile(path: str) -> tuple[LatticeProfile, ModelParams]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("schema") != SCHEMA or data.get("kind") != "profile":
        raise UsageError(f"{path} is not an {SCHEMA} profile file")
    prm = data["params"]
    params = ModelParams(prm["p"], prm["q"], prm["gamma"], prm["eps"])
    prof = LatticeProfile(data["offset"], np.array(data["values"], dtype=float), data["n_code"])
    return prof, params


# ---------------------------------------------------------------- arguments


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _model_args(p: argparse.ArgumentParser, eps: bool = False) -> None:
    p.add_argument("--p", type=int, default=3, help="focusing power")
    p.add_argument("--q", type=int, default=4, help="defocusing power")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=float, default=None, help="defocusing strength")
    g.add_argument("--delta", type=float, default=None, help="gamma as a fraction of gamma_crit")
    if eps:
        p.add_argument("--eps", type=float, default=0.01, help="coupling")


def _params(args, eps: float | None = None) -> ModelParams:
    eps = getattr(args, "eps", 0.0) if eps is None else eps
    if args.gamma is None and args.delta is None:
        raise UsageError("one of --gamma or --delta is required")
    if args.gamma is not None:
        return ModelParams(args.p, args.q, args.gamma, eps)
    return ModelParams.from_delta(args.p, args.q, args.delta, eps)


def _code(args) -> Code:
    if not args.code:
        raise UsageError("--code is required")
    return Code.parse(args.code)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ilmlab", description="Intrinsic localized modes of lattices with competing nonlinearities.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--format", choices=("json", "csv", "table"), default="json")
    parser.add_argument("--config", help="key=value file with defaults for the command's options")
    parser.add_argument("--dump-config", action="store_true", help="print the command's effective options and exit")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized routines")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for scans")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("roots", help="roots a < A of f and slopes there")
    _model_args(p)

    p = sub.add_parser("codes", help="enumerate irreducible codes of length n")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--count-only", action="store_true")

    p = sub.add_parser("solve", help="continue a code from the anticontinuum limit to eps")
    _model_args(p, eps=True)
    p.add_argument("--code", default=None)
    p.add_argument("--buffer", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out", default=None, help="also write the profile JSON here")

    p = sub.add_parser("spectrum", help="stability spectrum of a code or a saved profile")
    _model_args(p, eps=True)
    p.add_argument("--code", default=None)
    p.add_argument("--truncated", action="store_true", help="use the truncated N x N problem")
    p.add_argument("--profile-file", default=None)

    p = sub.add_parser("branch", help="pseudo-arclength continuation in eps")
    _model_args(p)
    p.add_argument("--code", default=None)
    p.add_argument("--eps-max", type=float, default=0.3)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--csv", default=None, help="write the branch table here")

    p = sub.add_parser("scan", help="classify all irreducible codes over (N, delta)")
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--q", type=int, default=4)
    p.add_argument("--delta", default="0.5", help="comma-separated delta values")
    p.add_argument("--n", default="1-4", help="N or lo-hi")
    p.add_argument("--mode", choices=[m.value for m in ScanMode], default=ScanMode.TRUNCATED_ONLY.value)
    p.add_argument("--eps", type=float, default=None)

    p = sub.add_parser("sweep", help="truncated eigenvalues of a code along a gamma grid")
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--q", type=int, default=4)
    p.add_argument("--code", default=None)
    p.add_argument("--points", type=int, default=40)
    p.add_argument("--lo", type=float, default=0.002, help="first grid point as a fraction of gamma_crit")
    p.add_argument("--hi", type=float, default=0.998, help="last grid point as a fraction of gamma_crit")

    p = sub.add_parser("evolve", help="integrate a (perturbed) ILM in time")
    _model_args(p, eps=True)
    p.add_argument("--code", default=None)
    p.add_argument("--t-max", type=float, default=50.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--perturb", type=float, default=1e-3, help="relative size of the random perturbation")
    p.add_argument("--record-every", type=int, default=100)
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _option_dests(sub: argparse.ArgumentParser) -> dict[str, argparse.Action]:
    return {a.dest: a for a in sub._actions if a.option_strings and a.dest != "help"}


def read_config(path: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(parser, command: str, argv: list[str], config: dict[str, str]) -> argparse.Namespace:
    sub = _subparser(parser, command)
    dests = _option_dests(sub)
    unknown = sorted(set(config) - set(dests))
    if unknown:
        raise UsageError(f"unknown config key(s) for '{command}': {', '.join(unknown)}")
    defaults = {}
    for key, value in config.items():
        action = dests[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = action.type(value) if action.type else value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


# ---------------------------------------------------------------- commands


def cmd_roots(args) -> None:
    params = _params(args)
    r = find_roots(params)
    _emit({"params": _params_dict(params), "a": r.a, "A": r.A, "fprime_a": r.dfa, "fprime_A": r.dfA,
           "gamma_crit": r.gamma_crit, "u_pq": r.u_pq})


def cmd_codes(args) -> None:
    codes = enumerate_irreducible(args.n)
    if args.count_only:
        sys.stdout.write(f"{len(codes)}\n")
        return
    if args.format == "csv":
        sys.stdout.write("code,name\n" + "".join(f"\"{c}\",{describe(c)}\n" for c in codes))
        return
    _emit({"n": args.n, "count": len(codes), "closed_form_count": count_irreducible(args.n),
           "codes": [str(c) for c in codes]})


def cmd_solve(args) -> None:
    params = _params(args)
    code = _code(args)
    prof = solve_code(code, params, NewtonSettings(tol=args.tol, buffer=args.buffer))
    payload = profile_dict(prof, params, code)
    if args.out:
        Path(args.out).write_text(dumps({"schema": SCHEMA, **payload}) + "\n", encoding="utf-8")
    if args.format == "csv":
        sys.stdout.write("n,u_n\n" + "".join(f"{n},{_num(float(v))}\n" for n, v in zip(prof.sites, prof.values)))
        return
    _emit(payload)


def cmd_spectrum(args) -> None:
    if args.profile_file:
        prof, params = load_profile(args.profile_file)
        rep = analyze_profile(prof, params)
        code = None
    else:
        code = _code(args)
        if args.truncated:
            params = _params(args, eps=0.0)
            rep = analyze_truncated(code, find_roots(params))
        else:
            params = _params(args)
            rep = analyze_profile(solve_code(code, params), params)
    if args.format == "csv":
        sys.stdout.write("re,im,class,krein\n")
        for v, c, k in zip(rep.eigenvalues, rep.classes, rep.krein):
            sys.stdout.write(f"{_num(v.real)},{_num(v.imag)},{c.value},{int(k)}\n")
        return
    _emit({"params": _params_dict(params), "code": str(code) if code else None, **report_dict(rep)})


def cmd_branch(args) -> None:
    params = _params(args, eps=0.0)
    points, events = continue_branch(_code(args), params, eps_max=args.eps_max, step=args.step)
    lines = ["eps,Q,H,verdict,jac_min_sv"]
    lines += [f"{_num(p.eps)},{_num(p.Q)},{_num(p.H)},{p.verdict.value},{_num(p.jac_min_sv)}" for p in points]
    table = "\n".join(lines) + "\n"
    if args.csv:
        Path(args.csv).write_text(table, encoding="utf-8")
    if args.format == "csv":
        sys.stdout.write(table)
        return
    _emit({"params": _params_dict(params), "code": args.code, "n_points": len(points),
           "eps_max_reached": max(p.eps for p in points),
           "events": [{"kind": e.kind.value, "eps_at": e.eps_at, "detail": e.detail} for e in events]})


def _n_range(text: str) -> tuple[int, int]:
    try:
        if "-" in text:
            lo, hi = text.split("-", 1)
            return int(lo), int(hi)
        return int(text), int(text)
    except ValueError as exc:
        raise UsageError(f"bad --n value {text!r}") from exc


def cmd_scan(args) -> None:
    try:
        deltas = tuple(float(d) for d in args.delta.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --delta value {args.delta!r}") from exc
    req = ScanRequest(args.p, args.q, deltas, _n_range(args.n), ScanMode(args.mode), args.eps)
    rows = run_scan(req, threads=args.threads)
    if args.format == "csv":
        sys.stdout.write(rows_to_csv(rows))
    elif args.format == "table":
        sys.stdout.write(rows_to_table(rows))
    else:
        _emit({"p": args.p, "q": args.q, "mode": req.mode.value, "rows": [
            {"N": r.N, "delta": r.delta, "stable": [str(c) for c in r.stable],
             "inconclusive": [str(c) for c in r.inconclusive], "total_checked": r.total_checked}
            for r in rows]})


def cmd_sweep(args) -> None:
    grid = default_gamma_grid(args.p, args.q, args.points, args.lo, args.hi)
    pts = sweep_gamma(_code(args), args.p, args.q, grid)
    if args.format == "csv":
        sys.stdout.write(sweep_to_csv(pts))
        return
    _emit({"p": args.p, "q": args.q, "code": args.code, "points": [
        {"gamma": pt.gamma, "eigenvalues": [[float(v.real), float(v.imag)] for v in pt.eigenvalues],
         "classes": [c.value for c in pt.classes]} for pt in pts]})


def cmd_evolve(args) -> None:
    params = _params(args)
    prof = solve_code(_code(args), params)
    init = perturb(prof, args.perturb, args.seed) if args.perturb > 0 else prof.values
    res = evolve(init, params, args.t_max, args.dt, args.record_every, reference=prof.values)
    if args.format == "csv":
        sys.stdout.write(res.to_csv())
        return
    try:
        rate = growth_rate(res.t, res.deviation)
    except NotGrowing:
        rate = None
    norm = float(np.linalg.norm(prof.values))
    _emit({"params": _params_dict(params), "code": args.code, "seed": args.seed, "t_max": args.t_max, "dt": args.dt,
           "diverged": res.diverged, "window_warning": res.window_warning,
           "max_relative_deviation": float(res.deviation.max() / norm),
           "relative_Q_drift": float(abs(res.Q[-1] - res.Q[0]) / res.Q[0]),
           "growth_rate": rate})


COMMANDS = {
    "roots": cmd_roots,
    "codes": cmd_codes,
    "solve": cmd_solve,
    "spectrum": cmd_spectrum,
    "branch": cmd_branch,
    "scan": cmd_scan,
    "sweep": cmd_sweep,
    "evolve": cmd_evolve,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        if args.config:
            args = _apply_config(parser, args.command, argv, read_config(args.config))
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING))
        if args.dump_config:
            dests = _option_dests(_subparser(parser, args.command))
            for key in sorted(dests):
                sys.stdout.write(f"{key} = {getattr(args, key)}\n")
            return 0
        COMMANDS[args.command](args)
    except (UsageError, PreconditionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (DomainError, NotApplicable) as exc:
        sys.stderr.write(f"domain error: {exc}\n")
        return 2
    except (NumericalError, ILMError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
