"""Command line front end: ``surfent <command> [flags]``.

Every run writes CSV series and a JSON summary (into ``--out`` when given;
the summary is also printed).  Floats are written with 17 significant
digits.  Exit codes: 0 ok, 1 usage, 2 numerical failure, 3 selftest failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import parallel
from .dynamics import DomainEscapeError, TangentPoint, grid_points, lambda_plus_series
from .zoo import REGISTRY, make_system

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_SELFTEST = 0, 1, 2, 3

COMMANDS = ("estimate", "diagnose-times", "verify-example", "decompose-curve", "selftest")
METHODS = ("cocycle", "curve", "katok")
DEFAULT_N = {"cocycle": "1..30", "curve": "1..14", "katok": "1..5"}


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------------
# formatting

def fmt(x: float) -> str:
    return f"{x:.17g}"


def to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON with 17-digit floats; non-finite floats become strings."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt(x) if math.isfinite(x) else f'"{x}"'
    if isinstance(obj, str):
        import json
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{to_json(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + 1) for v in seq) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def csv_text(header: List[str], rows: List[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# ----------------------------------------------------------------------------
# configuration

def parse_range(spec: str) -> List[int]:
    """``start..end[:step]``, a comma list, or a single integer."""
    spec = str(spec).strip()
    try:
        if ".." in spec:
            body, _, step = spec.partition(":")
            a, b = body.split("..")
            out = list(range(int(a), int(b) + 1, int(step) if step else 1))
        else:
            out = [int(v) for v in spec.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"invalid n range {spec!r}") from exc
    if not out or any(b <= a for a, b in zip(out, out[1:])) or out[0] < 1:
        raise UsageError(f"n range {spec!r} must be non-empty, increasing and >= 1")
    return out


def parse_floats(spec: str) -> List[float]:
    try:
        return [float(v) for v in str(spec).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"invalid number list {spec!r}") from exc


def parse_params(items) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for item in items or []:
        for part in str(item).split(","):
            if not part.strip():
                continue
            k, sep, v = part.partition("=")
            if not sep:
                raise UsageError(f"--params expects k=v, got {part!r}")
            try:
                out[k.strip()] = float(v)
            except ValueError as exc:
                raise UsageError(f"parameter {k!r} is not a number") from exc
    return out


def read_config(path: str) -> Dict[str, str]:
    """Flat ``key = value`` text; ``#`` starts a comment."""
    out: Dict[str, str] = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        k, sep, v = line.partition("=")
        if not sep:
            raise UsageError(f"config line {raw.strip()!r} is not key = value")
        out[k.strip().replace("-", "_")] = v.strip()
    return out


@dataclass
class RunConfig:
    command: str
    system: str = "cat"
    params: Dict[str, float] = field(default_factory=dict)
    method: str = "cocycle"
    n: List[int] = field(default_factory=list)
    eps: List[float] = field(default_factory=list)
    grid: int = 200
    seed: int = 0
    tol: float = 1e-6
    out: Optional[str] = None
    threads: int = 1
    cloud: int = 1 << 19
    curve: str = "hloop:0.3"
    a: List[float] = field(default_factory=list)
    L: int = 2
    tau: float = 1.0
    point: List[float] = field(default_factory=lambda: [0.2, 0.3])
    angle: float = 0.0
    samples: int = 16

    def echo(self) -> dict:
        # output location and thread count do not change results
        d = asdict(self)
        d.pop("out")
        d.pop("threads")
        return d


def resolve(args: argparse.Namespace) -> RunConfig:
    """Flags override the config file, which overrides command defaults."""
    file_cfg = read_config(args.config) if args.config else {}
    unknown = set(file_cfg) - set(RunConfig.__dataclass_fields__)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")

    def pick(name, default):
        v = getattr(args, name, None)
        if v is not None:
            return v
        return file_cfg.get(name, default)

    cmd = args.command
    method = pick("method", "cocycle")
    if cmd == "estimate" and method not in METHODS:
        raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    n_default = {"estimate": DEFAULT_N.get(method, "1..30"), "diagnose-times": "50",
                 "verify-example": "2..80:2", "decompose-curve": "1", "selftest": "1"}[cmd]
    eps_default = {"decompose-curve": "0.01"}.get(cmd, "0.05")
    params = parse_params([file_cfg["params"]] if "params" in file_cfg else [])
    params.update(parse_params(args.params))
    curve_default = "random" if cmd == "decompose-curve" else "hloop:0.3"
    try:
        cfg = RunConfig(
            command=cmd,
            system=str(pick("system", "cat")),
            params=params,
            method=str(method),
            n=parse_range(pick("n", n_default)),
            eps=parse_floats(pick("eps", eps_default)),
            grid=int(pick("grid", 200)),
            seed=int(pick("seed", 0)),
            tol=float(pick("tol", 0.03 if cmd == "verify-example" else 1e-6)),
            out=pick("out", None),
            threads=int(pick("threads", 1)),
            cloud=int(pick("cloud", 1 << 19)),
            curve=str(pick("curve", curve_default)),
            a=parse_floats(pick("a", repr(params["a"]) if "a" in params else "1.1,1.28,1.5")),
            L=int(pick("L", 2)),
            tau=float(pick("tau", 1.0)),
            point=parse_floats(pick("point", "0.2,0.3")),
            angle=float(pick("angle", 0.0)),
            samples=int(pick("samples", 16)),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    if cfg.system not in REGISTRY:
        raise UsageError(f"unknown system {cfg.system!r}; known: {', '.join(sorted(REGISTRY))}")
    if cfg.threads < 1 or cfg.grid < 1 or cfg.cloud < 1:
        raise UsageError("threads, grid and cloud must be positive")
    if any(e <= 0 for e in cfg.eps) or not cfg.eps:
        raise UsageError("eps values must be positive")
    if len(cfg.point) != 2:
        raise UsageError("--point expects u,v")
    return cfg


def build_curve(spec: str, seed: int = 0):
    from . import curves as C
    from .oscillator import sigma_osc_curve
    kind, _, rest = spec.partition(":")
    vals = parse_floats(rest) if rest else []
    try:
        if kind == "hloop":
            return C.horizontal_loop(vals[0] if vals else 0.3)
        if kind == "vloop":
            return C.vertical_loop(vals[0] if vals else 0.3)
        if kind == "segment":
            return C.segment(vals[:2], vals[2:4])
        if kind == "sine":
            return C.sine_graph(vals[0], vals[1])
        if kind == "random":
            return C.random_admissible_curve(np.random.default_rng(seed))
        if kind == "osc":
            return sigma_osc_curve()
    except IndexError as exc:
        raise UsageError(f"curve spec {spec!r} is missing numbers") from exc
    raise UsageError(f"unknown curve kind {kind!r}")


# ----------------------------------------------------------------------------
# commands; each returns (files: {suffix: text}, summary, exit code)

def _system(cfg: RunConfig):
    try:
        return make_system(cfg.system, **cfg.params)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad parameters for {cfg.system!r}: {exc}") from exc


def _reference(system, cfg: RunConfig, h_est: float) -> dict:
    nmax = min(max(cfg.n), 20)
    lam = lambda_plus_series(system, grid_points(system.domain, 64), nmax).rate
    r = system.r
    lam_r = 0.0 if math.isinf(r) else lam / r
    return {
        "known_entropy": system.known_entropy,
        "lambda_plus_estimate": lam,
        "r": r,
        "lambda_plus_over_r": lam_r,
        "hypothesis_h_ge_lambda_over_r": bool(h_est >= lam_r),
    }


def cmd_estimate(cfg: RunConfig):
    system = _system(cfg)
    files: Dict[str, str] = {}
    summary: dict = {"command": "estimate", "config": cfg.echo(), "system": system.name,
                     "method": cfg.method}
    if cfg.method == "cocycle":
        from .cocycle import CSV_HEADER, SamplePlan, _series, integral_reports
        reps = integral_reports(system, SamplePlan("grid", density=cfg.grid, seed=cfg.seed), cfg.n)
        series = _series(reps, "log_of_mean", "fit")
        logs = _series(reps, "mean_of_log", "fit")
        files["csv"] = csv_text(CSV_HEADER, [r.row() for r in reps])
        summary["log_norm_rate"] = logs.rate
    elif cfg.method == "curve":
        from .curves import curve_growth_series
        series = curve_growth_series(system, build_curve(cfg.curve, cfg.seed), cfg.n, cfg.tol)
        files["csv"] = csv_text(["n", "log_length_over_n"], series.as_rows())
    else:
        from .bounds import katok_estimate, katok_rows, random_cloud
        cloud = random_cloud(system.domain, cfg.cloud, cfg.seed)
        eps = sorted(cfg.eps, reverse=True)
        per_eps = katok_estimate(system, cloud, cfg.n, eps)
        series = per_eps[eps[-1]]
        rows = katok_rows(per_eps)
        files["csv"] = csv_text(["eps", "n", "separated_count", "spanning_count", "katok_slope"],
                                [[r.eps, r.n, r.separated_count, "", r.katok_slope] for r in rows])
        summary["per_eps_rate"] = {fmt(e): s.rate for e, s in per_eps.items()}
    summary.update({"n": series.n, "values": series.values, "rate": series.rate,
                    "diagnostics": {k: v for k, v in series.diagnostics.items()},
                    "flags": series.flags})
    summary.update(_reference(system, cfg, series.rate))
    return files, summary, EXIT_OK


def cmd_diagnose_times(cfg: RunConfig):
    from .times import alpha_fraction, convex_split_report, geometric_gap_audit, orbit_profile
    system = _system(cfg)
    n = cfg.n[-1]
    xh = TangentPoint(cfg.point[0], cfg.point[1], cfg.angle)
    prof = orbit_profile(system, xh, n, cfg.L, cfg.tau)
    buf = io.StringIO()
    prof.to_csv_handle(buf)
    alpha = alpha_fraction(prof.E_L, min(prof.trapping, n), n)
    split_n = min(n, 12)
    h_ref = system.known_entropy if system.known_entropy is not None else 0.0
    lam_ref = system.known_lambda if system.known_lambda is not None else 0.0
    rep = convex_split_report(system, build_curve(cfg.curve, cfg.seed), split_n, cfg.L,
                              h_ref, lam_ref, samples=cfg.samples, tau=cfg.tau)
    summary = {
        "command": "diagnose-times", "config": cfg.echo(), "system": system.name,
        "horizon": n, "geometric_times": len(prof.E), "expanded_times": len(prof.E_L),
        "trapping_time": prof.trapping, "alpha": alpha,
        "gap_audit": geometric_gap_audit(prof),
        "convex_split": {"n": rep.n, "measured": rep.measured, "alpha": rep.alpha,
                         "reference_h": rep.reference_h, "reference_lambda": rep.reference_lambda,
                         "bound": rep.bound, "residual": rep.residual},
    }
    return {"csv": buf.getvalue()}, summary, EXIT_OK


def cmd_verify_example(cfg: RunConfig):
    from .oscillator import (AUDIT_GRID, A_LOW, cos_integral_audit, example_rows,
                             monotonicity_count_audit, restricted_growth, theoretical_rate)
    rows, per_a = [], {}
    ok = True
    for a in cfg.a:
        s = restricted_growth(a, cfg.n)
        th = theoretical_rate(a)
        for r in example_rows(a, s):
            rows.append([r.a, r.n, r.length, r.rate, r.theoretical, r.residual])
        res = s.rate - th
        per_a[fmt(a)] = {"rate": s.rate, "theoretical": th, "residual": res,
                         "n_max": int(s.n[-1]), "flags": s.flags,
                         "pass": bool(abs(res) <= cfg.tol)}
        ok &= abs(res) <= cfg.tol
    cos = [cos_integral_audit(a, b, n) for a, b, n in AUDIT_GRID]
    mono = [monotonicity_count_audit(a, n) for a in (1.05, 1.1, 1.2) for n in (5, 10, 15)
            if a <= A_LOW]
    summary = {
        "command": "verify-example", "config": cfg.echo(), "rates": per_a,
        "cos_integral": {"cases": len(cos), "failures": sum(not c.passed for c in cos),
                         "min_ratio_numeric_over_bound": min(c.numeric / c.bound for c in cos)},
        "monotonicity": {"cases": len(mono), "failures": sum(not m.passed for m in mono)},
    }
    ok &= summary["cos_integral"]["failures"] == 0 and summary["monotonicity"]["failures"] == 0
    summary["pass"] = bool(ok)
    files = {"csv": csv_text(["a", "n", "L_n", "rate", "theoretical", "residual"], rows)}
    return files, summary, EXIT_OK if ok else EXIT_NUMERIC


def cmd_decompose_curve(cfg: RunConfig):
    from .curves import decompose_eps_bounded, is_eps_bounded, piece_count, piece_offsets
    curve = build_curve(cfg.curve, cfg.seed)
    eps = cfg.eps[0]
    try:
        pieces = decompose_eps_bounded(curve, eps)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    N = piece_count(eps)
    offs = piece_offsets(N)
    rows = []
    for j, (b, pc) in enumerate(zip(offs, pieces), start=1):
        p0, p1 = pc.position(np.array([0.0, 1.0]))
        rows.append([j, float(b), 1.0 / N, float(b), float(b + 1.0 / N),
                     float(p0[0]), float(p0[1]), float(p1[0]), float(p1[1]),
                     float(pc.speed_sup if pc.speed_sup is not None else np.max(pc.speeds())),
                     int(is_eps_bounded(pc, eps))])
    header = ["j", "b", "delta", "t_start", "t_end", "u_start", "v_start", "u_end", "v_end",
              "speed_sup", "eps_bounded"]
    summary = {"command": "decompose-curve", "config": cfg.echo(), "curve": curve.name,
               "eps": eps, "pieces": len(pieces),
               "all_eps_bounded": bool(all(r[-1] for r in rows))}
    return {"csv": csv_text(header, rows)}, summary, EXIT_OK


def cmd_selftest(cfg: RunConfig):
    from .selftest import run_selftest
    results = run_selftest(seed=cfg.seed)
    rows = [[name, int(ok), detail] for name, ok, detail in results]
    failures = sum(1 for _, ok, _ in results if not ok)
    summary = {"command": "selftest", "config": cfg.echo(), "checks": len(results),
               "failures": failures}
    files = {"csv": csv_text(["check", "passed", "detail"], rows)}
    return files, summary, EXIT_OK if failures == 0 else EXIT_SELFTEST


HANDLERS = {
    "estimate": cmd_estimate,
    "diagnose-times": cmd_diagnose_times,
    "verify-example": cmd_verify_example,
    "decompose-curve": cmd_decompose_curve,
    "selftest": cmd_selftest,
}


# ----------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument
    g("--system")
    g("--params", action="append", help="k=v[,k=v...]; repeatable")
    g("--method", help="estimate: cocycle | curve | katok")
    g("--n", help="start..end[:step], comma list, or one integer")
    g("--eps", help="comma list")
    g("--grid", type=int, help="sample points per axis")
    g("--seed", type=int)
    g("--tol", type=float)
    g("--out", help="output directory")
    g("--config", help="flat key = value file; flags override it")
    g("--threads", type=int)
    g("--cloud", type=int, help="candidate cloud size (katok)")
    g("--curve", help="hloop:h | vloop:u | segment:u0,v0,u1,v1 | sine:f,a | random | osc")
    g("--a", help="comma list of a values (verify-example)")
    g("--L", type=int)
    g("--tau", type=float)
    g("--point", help="u,v (diagnose-times)")
    g("--angle", type=float)
    g("--samples", type=int)
    parser = _Parser(prog="surfent", description="Entropy estimators for surface maps.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _write_outputs(cfg: RunConfig, files: Dict[str, str], summary: dict) -> None:
    stem = cfg.command if cfg.command != "estimate" else f"estimate_{cfg.method}"
    text = to_json(summary) + "\n"
    if cfg.out:
        try:
            os.makedirs(cfg.out, exist_ok=True)
            for suffix, body in files.items():
                with open(os.path.join(cfg.out, f"{stem}.{suffix}"), "w", newline="") as fh:
                    fh.write(body)
            with open(os.path.join(cfg.out, f"{stem}.json"), "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise UsageError(f"cannot write to {cfg.out!r}: {exc}") from exc
    sys.stdout.write(text)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError(f"a command is required: {', '.join(COMMANDS)}")
        cfg = resolve(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    previous = parallel.get_threads()
    parallel.set_threads(cfg.threads)
    try:
        files, summary, code = HANDLERS[cfg.command](cfg)
        _write_outputs(cfg, files, summary)
        return code
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (DomainEscapeError, ArithmeticError, RuntimeError, ValueError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    finally:
        parallel.set_threads(previous)


if __name__ == "__main__":
    sys.exit(main())
