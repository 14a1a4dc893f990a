"""Command-line front end.

    nilfield classify      --field '{"family": "y2", "params": {"lambda": "-1"}}'
    nilfield simulate      --config run.json --tmax 50 --format csv --out trace.csv
    nilfield iterate       --config run.json --nmax 500 --mode exact
    nilfield find-periodic --config run.json --k 3 --nseeds 200 --seed 7
    nilfield transform     --config run.json --chart liorsc
    nilfield verify        --scope liorsc-trap,period3-exact

A config file is a JSON object with a ``field`` entry (see
:mod:`nilfield.fieldspec`) and any of the option names below; command-line
flags override it.  Exit codes: 0 success, 1 claim failure, 2 usage
error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import traceback
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .classify import classify_field
from .fieldspec import FieldSpec, SpecError, field_spec_from_obj, parse_field_spec, rational
from .flow import (
    OrbitTrace,
    SimConfig,
    chart_transform,
    identity_chart,
    integrate,
    liorsc_chart,
    teo1li_blowup_chart,
    teo1li_projective_chart,
)
from .iterate import DiscreteTrace, IterConfig, find_periodic, iterate_map, random_seeds
from .polycore import PolyMap
from .verify import CLAIM_IDS, DEFAULT_SEED, run_verify_suite

__all__ = [
    "FieldSpec",
    "SpecError",
    "parse_field_spec",
    "run_verify_suite",
    "emit_trace",
    "load_trace",
    "main",
]

EXIT_OK, EXIT_CLAIM, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
U64 = 2 ** 64

CHARTS = {
    "identity": lambda n: identity_chart(n),
    "liorsc": lambda n: liorsc_chart(),
    "teo1li-projective": lambda n: teo1li_projective_chart(),
    "teo1li-blowup": lambda n: teo1li_blowup_chart(),
}


class UsageError(ValueError):
    pass


# -- trace serialization -----------------------------------------------------------------

def _g17(v) -> str:
    return format(float(v), ".17g")


def _exact_or_float(v):
    return str(v) if isinstance(v, Fraction) else float(v)


def trace_to_dict(trace: OrbitTrace | DiscreteTrace, seed: int | None = None) -> dict:
    if isinstance(trace, OrbitTrace):
        out = {
            "kind": "continuous",
            "verdict": trace.verdict,
            "times": [float(t) for t in trace.times],
            "states": [[float(v) for v in s] for s in trace.states],
            "steps_accepted": trace.steps_accepted,
            "steps_rejected": trace.steps_rejected,
            "blowup": trace.blowup,
            "stopped": trace.stopped,
            "config": trace.config.to_dict(),
        }
    elif isinstance(trace, DiscreteTrace):
        out = {
            "kind": "discrete",
            "verdict": trace.verdict,
            "mode": trace.mode,
            "states": [[_exact_or_float(v) for v in s] for s in trace.states],
            "degraded_to_float": trace.degraded_to_float,
            "degraded_at": trace.degraded_at,
            "config": trace.config.to_dict(),
        }
    else:
        raise TypeError(f"not a trace: {type(trace).__name__}")
    if seed is not None:
        out["seed"] = seed
    return out


def trace_from_dict(obj: dict) -> OrbitTrace | DiscreteTrace:
    kind = obj.get("kind")
    if kind == "continuous":
        return OrbitTrace(
            [float(t) for t in obj["times"]],
            [np.array(s, dtype=float) for s in obj["states"]],
            obj["verdict"],
            obj["steps_accepted"],
            obj["steps_rejected"],
            SimConfig(**obj["config"]),
            obj.get("blowup", False),
            obj.get("stopped", False),
        )
    if kind == "discrete":
        exact = obj["mode"] == "exact"

        def value(v):
            return Fraction(v) if isinstance(v, str) else (float(v) if not exact else Fraction(v))

        return DiscreteTrace(
            [[value(v) for v in s] for s in obj["states"]],
            obj["verdict"],
            obj["mode"],
            IterConfig(**obj["config"]),
            obj.get("degraded_to_float", False),
            obj.get("degraded_at"),
        )
    raise ValueError(f"unknown trace kind {kind!r}")


def trace_csv(trace: OrbitTrace | DiscreteTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = len(trace.states[0])
    if isinstance(trace, OrbitTrace):
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)])
        for t, s in zip(trace.times, trace.states):
            w.writerow([_g17(t)] + [_g17(v) for v in s])
    else:
        w.writerow(["n"] + [f"x{i + 1}" for i in range(n)])
        for k, s in enumerate(trace.states):
            w.writerow([k] + [_g17(v) for v in s])
    return buf.getvalue()


def emit_trace(trace: OrbitTrace | DiscreteTrace, fmt: str = "csv", path: str | Path | None = None, seed: int | None = None) -> None:
    """Write ``trace`` as CSV (17 significant digits) or JSON to ``path`` or stdout."""
    if fmt == "csv":
        text = trace_csv(trace)
    elif fmt == "json":
        text = json.dumps(trace_to_dict(trace, seed), indent=1) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    _write(text, path)


def load_trace(source: str | Path) -> OrbitTrace | DiscreteTrace:
    """Inverse of the JSON form of :func:`emit_trace`; accepts a path or the JSON text."""
    text = source
    if isinstance(source, Path) or not str(source).lstrip().startswith("{"):
        text = Path(source).read_text(encoding="utf-8")
    return trace_from_dict(json.loads(text))


def _write(text: str, path: str | Path | None) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# -- configuration ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (flags override its entries)")
    p.add_argument("--field", help="inline JSON field specification")
    p.add_argument("--seed", type=int, help="RNG seed, 0 <= seed < 2^64")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="output format")
    p.add_argument("--tmax", type=float, help="integration horizon")
    p.add_argument("--escape-radius", type=float, dest="escape_radius", help="escape threshold (sup norm)")
    p.add_argument("--tol", type=float, help="relative tolerance (integrator or Newton)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nilfield", description="Polynomial fields lambda*I + H with nilpotent JH.")
    parser.add_argument("--version", action="version", version=f"nilfield {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="nilpotency and dependent/independent verdict")
    _add_common(p)

    p = sub.add_parser("simulate", help="integrate x' = F(x) and classify the orbit")
    _add_common(p)
    p.add_argument("--x0", help="initial point, comma separated rationals")

    p = sub.add_parser("iterate", help="iterate x -> F(x) and classify the orbit")
    _add_common(p)
    p.add_argument("--x0", help="initial point, comma separated rationals")
    p.add_argument("--nmax", type=int, help="number of iterations (default 10000)")
    p.add_argument("--mode", choices=("float", "exact"), help="arithmetic (default float)")

    p = sub.add_parser("find-periodic", help="Newton search for period-k cycles")
    _add_common(p)
    p.add_argument("--k", type=int, help="period (default 3)")
    p.add_argument("--nseeds", type=int, help="number of random seeds (default 100)")
    p.add_argument("--radius", type=float, help="seeds are uniform in the sup-norm ball (default 10)")
    p.add_argument("--x0", help="one extra seed, comma separated rationals")

    p = sub.add_parser("transform", help="push the field through a chart")
    _add_common(p)
    p.add_argument("--chart", choices=sorted(CHARTS), help="chart name")

    p = sub.add_parser("verify", help="run the reproduction battery")
    _add_common(p)
    p.add_argument("--scope", help=f"comma separated claim ids (default all): {', '.join(CLAIM_IDS)}")
    p.add_argument("--tamper", action="append", default=None, metavar="KEY=VALUE", help=argparse.SUPPRESS)
    return parser


_OPTION_KEYS = (
    "field", "seed", "out", "format", "tmax", "escape_radius", "tol",
    "x0", "nmax", "mode", "k", "nseeds", "radius", "chart", "scope", "tamper",
)


def resolve_options(args: argparse.Namespace) -> dict:
    """Config file entries overlaid by explicit flags."""
    opts: dict[str, Any] = {}
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"malformed config JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
        if not isinstance(cfg, dict):
            raise SpecError("config must be a JSON object")
        unknown = set(cfg) - set(_OPTION_KEYS)
        if unknown:
            raise SpecError(f"unknown config keys {sorted(unknown)}")
        opts.update(cfg)
    for key in _OPTION_KEYS:
        v = getattr(args, key, None)
        if v is None:
            continue
        if key == "field":
            try:
                v = json.loads(v)
            except json.JSONDecodeError as exc:
                raise SpecError(f"malformed --field JSON: {exc.msg}", "field", exc.lineno, exc.colno) from exc
        opts[key] = v
    seed = opts.get("seed", DEFAULT_SEED)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < U64:
        raise UsageError("seed must be an integer in [0, 2^64)")
    opts["seed"] = seed
    return opts


def _field(opts: dict) -> tuple[FieldSpec, PolyMap, Fraction]:
    if "field" not in opts:
        raise UsageError("no field given (use --field or a config with a 'field' entry)")
    spec = field_spec_from_obj(opts["field"])
    F, lam = spec.build()
    return spec, F, lam


def _point(opts: dict, n: int, key: str = "x0") -> list[Fraction]:
    raw = opts.get(key)
    if raw is None:
        raise UsageError(f"no initial point given (--{key})")
    items = raw.split(",") if isinstance(raw, str) else raw
    if not isinstance(items, list) or len(items) != n:
        raise UsageError(f"{key} must have {n} entries")
    return [rational(v.strip() if isinstance(v, str) else v, f"{key}[{i}]") for i, v in enumerate(items)]


def _positive(opts: dict, key: str, default, kind=float):
    v = opts.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
        raise UsageError(f"{key} must be a positive number")
    if kind is int and int(v) != v:
        raise UsageError(f"{key} must be an integer")
    return kind(v)


def _json_only(opts: dict, command: str) -> None:
    if opts.get("format", "json") != "json":
        raise UsageError(f"{command} only writes JSON")


def _dump(obj: dict, opts: dict) -> None:
    _write(json.dumps(obj, indent=2, default=str) + "\n", opts.get("out"))


# -- subcommands -------------------------------------------------------------------------------

def cmd_classify(opts: dict) -> int:
    _json_only(opts, "classify")
    spec, F, lam = _field(opts)
    report = classify_field(F, lam)
    _dump({"field": spec.to_dict(), "seed": opts["seed"], "report": report.to_dict()}, opts)
    return EXIT_OK


def cmd_simulate(opts: dict) -> int:
    spec, F, _ = _field(opts)
    x0 = _point(opts, F.nvars)
    kw = {"t_max": _positive(opts, "tmax", 200.0), "escape_radius": _positive(opts, "escape_radius", 1e6)}
    if "tol" in opts:
        kw["rel_tol"] = _positive(opts, "tol", None)
    try:
        cfg = SimConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    trace = integrate(F, [float(v) for v in x0], cfg)
    emit_trace(trace, opts.get("format", "csv"), opts.get("out"), opts["seed"])
    print(f"verdict: {trace.verdict} at t={trace.times[-1]:.6g}", file=sys.stderr)
    return EXIT_OK


def cmd_iterate(opts: dict) -> int:
    spec, F, _ = _field(opts)
    x0 = _point(opts, F.nvars)
    nmax = _positive(opts, "nmax", 10_000, int)
    mode = opts.get("mode", "float")
    if mode not in ("float", "exact"):
        raise UsageError("mode must be float or exact")
    try:
        cfg = IterConfig(escape_radius=_positive(opts, "escape_radius", 1e12))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    start = x0 if mode == "exact" else [float(v) for v in x0]
    trace = iterate_map(F, start, nmax, mode=mode, cfg=cfg)
    emit_trace(trace, opts.get("format", "csv"), opts.get("out"), opts["seed"])
    print(f"verdict: {trace.verdict} after {len(trace.states) - 1} steps", file=sys.stderr)
    return EXIT_OK


def cmd_find_periodic(opts: dict) -> int:
    _json_only(opts, "find-periodic")
    spec, F, _ = _field(opts)
    k = _positive(opts, "k", 3, int)
    nseeds = _positive(opts, "nseeds", 100, int)
    radius = _positive(opts, "radius", 10.0)
    tol = _positive(opts, "tol", 1e-10)
    seeds = random_seeds(nseeds, F.nvars, radius, opts["seed"])
    if "x0" in opts:
        seeds.insert(0, np.array([float(v) for v in _point(opts, F.nvars)]))
    orbits = find_periodic(F, k, seeds, tol=tol)
    _dump(
        {
            "field": spec.to_dict(),
            "k": k,
            "seed": opts["seed"],
            "nseeds": len(seeds),
            "radius": radius,
            "tol": tol,
            "orbits": [o.to_dict() for o in orbits],
        },
        opts,
    )
    return EXIT_OK


def cmd_transform(opts: dict) -> int:
    _json_only(opts, "transform")
    spec, F, _ = _field(opts)
    name = opts.get("chart")
    if name not in CHARTS:
        raise UsageError(f"chart must be one of {', '.join(sorted(CHARTS))}")
    chart = CHARTS[name](F.nvars)
    try:
        G = chart_transform(F, chart)
    except ValueError as exc:
        raise UsageError(f"chart {name!r} does not apply: {exc}") from exc
    out_spec = FieldSpec(nvars=G.nvars, components=list(G.components), lam=Fraction(0))
    _dump(
        {
            "input": spec.to_dict(),
            "chart": name,
            "orientation": chart.orientation,
            "field": out_spec.to_dict(),
            "display": G.to_strings(),
        },
        opts,
    )
    return EXIT_OK


def cmd_verify(opts: dict) -> int:
    _json_only(opts, "verify")
    scope = opts.get("scope", "all")
    if isinstance(scope, str) and scope != "all":
        scope = [s.strip() for s in scope.split(",") if s.strip()]
    tamper = {}
    raw = opts.get("tamper") or []
    for item in [raw] if isinstance(raw, str) else raw:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError("tamper entries are KEY=VALUE")
        tamper[key] = value
    try:
        report = run_verify_suite(scope, seed=opts["seed"], tamper=tamper)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _write(report.to_json() + "\n", opts.get("out"))
    for c in report.claims:
        print(f"{c.status.upper():8s} {c.claim_id} ({c.seconds:.2f}s)", file=sys.stderr)
    return EXIT_OK if report.overall == "pass" else EXIT_CLAIM


COMMANDS = {
    "classify": cmd_classify,
    "simulate": cmd_simulate,
    "iterate": cmd_iterate,
    "find-periodic": cmd_find_periodic,
    "transform": cmd_transform,
    "verify": cmd_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    try:
        opts = resolve_options(args)
        return COMMANDS[args.command](opts)
    except (SpecError, UsageError) as exc:
        print(f"nilfield: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"nilfield: I/O error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
