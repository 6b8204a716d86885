"""Command-line front end: ``secantlab <subcommand> [flags]``.

Every subcommand accepts ``--config FILE`` with ``key = value`` lines whose keys are the
flag names (dashes or underscores).  Precedence is flags > config file > defaults.
Exit status: 0 success, 1 failing certificate, 2 usage or parameter error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import basin, cycles, globalizer, regions, series
from .model_map import DomainError, ModelParams
from .policy import SECANT_POLICY, IterationPolicy
from .secant_map import Polynomial, critical_points, model_coefficient, normalize_at_critical

__all__ = ["CommandConfig", "main", "run"]


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CommandConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    out: str | None = None
    positional: tuple = ()


def _number(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _tag(v) -> str:
    v = Fraction(v)
    s = str(v.numerator) if v.denominator == 1 else f"{v.numerator}over{v.denominator}"
    return s.replace("-", "m")


def _model(a: Fraction, d: int) -> ModelParams:
    a = int(a) if a.denominator == 1 else a
    return ModelParams(a, d)


_HELP = {
    "a": "coefficient a of the model map",
    "d": "degree d",
    "window": "phase-plane window",
    "eps": "convergence radius",
    "window-len": "consecutive steps (or periods) required inside the convergence radius",
    "escape": "escape radius",
    "max-iter": "iteration cap",
    "kind": "what to compute",
    "order": "truncation order N",
    "method": "solver",
    "x0": "abscissa of the vertical segment (bracket)",
    "max-step": "largest polyline segment",
    "angle-bound": "largest turning angle between segments (radians)",
    "max-arclength": "give up beyond this curve length",
    "bisection-tol": "tolerance of crossing bisections",
    "region": "named region",
    "b": "hexagon parameter b in (0, 1/2]",
    "samples": "number of quasi-random samples",
    "margin": "required signed distance inside the region",
}


class _Formatter(argparse.ArgumentDefaultsHelpFormatter):
    def _get_help_string(self, action):
        text = action.help or ""
        if action.default is not argparse.SUPPRESS and action.option_strings and "%(default)" not in text:
            text += " (default: %(default)s)"
        return text


class _Parser(argparse.ArgumentParser):
    def add_argument(self, *args, **kwargs):
        # argparse prints defaults only for options that carry help text
        name = args[0].lstrip("-") if args else ""
        kwargs.setdefault("help", _HELP.get(name, name))
        return super().add_argument(*args, **kwargs)

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", default=None, help="file of key = value lines")
    p.add_argument("--out", default=None, help="output path or stem; '-' writes text to stdout")
    p.add_argument("--workers", type=int, default=1, help="thread count; results do not depend on it")


def _window(p, default):
    p.add_argument("--window", nargs=4, type=float, default=default, metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("--px", type=int, default=512, help="pixels per side")
    p.add_argument("--ppm", action="store_true", help="also write a colour PPM")


def _policy_flags(p, pol: IterationPolicy):
    p.add_argument("--eps", type=float, default=pol.eps_converge)
    p.add_argument("--window-len", type=int, default=pol.window)
    p.add_argument("--escape", type=float, default=pol.escape_radius)
    p.add_argument("--max-iter", type=int, default=pol.max_iter)


def _trace_flags(p):
    tp = globalizer.TracePolicy()
    p.add_argument("--seed-radius", type=float, default=None, help="rho (stable) or delta (unstable); default per kind")
    p.add_argument("--max-step", type=float, default=tp.max_step)
    p.add_argument("--angle-bound", type=float, default=tp.angle_bound)
    p.add_argument("--max-arclength", type=float, default=tp.max_arclength)
    p.add_argument("--bisection-tol", type=float, default=tp.bisection_tol)


def build_parser() -> argparse.ArgumentParser:
    fmt = _Formatter
    top = _Parser(prog="secantlab", description=__doc__.splitlines()[0], formatter_class=fmt)
    sub = top.add_subparsers(dest="subcommand", parser_class=_Parser)

    p = sub.add_parser("basin", help="render the basin of the origin of the model map", formatter_class=fmt)
    p.add_argument("--a", type=_number, default=Fraction(1))
    p.add_argument("--d", type=int, default=2)
    _window(p, [-1.5, 1.5, -1.5, 1.5])
    _policy_flags(p, IterationPolicy())
    _common(p)

    p = sub.add_parser("series", help="stable or center manifold series at the origin", formatter_class=fmt)
    p.add_argument("--a", type=int, default=1, choices=[1, -1])
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--kind", choices=["stable", "center"], default="stable")
    p.add_argument("--order", type=int, default=60)
    p.add_argument("--method", choices=["recurrence", "ring"], default="recurrence")
    _common(p)

    p = sub.add_parser("cycle", help="eigendata of the two-cycle (odd d, a = 1)", formatter_class=fmt)
    p.add_argument("--d", type=int, default=3)
    _common(p)

    p = sub.add_parser("trace", help="grow an invariant curve or bracket a stable-manifold point", formatter_class=fmt)
    p.add_argument("--kind", choices=["stable", "boundary", "unstable", "bracket"], default="stable")
    p.add_argument("--a", type=int, default=1, choices=[1, -1])
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--x0", type=float, default=10.0, help="abscissa of the vertical segment (bracket)")
    _trace_flags(p)
    _common(p)

    p = sub.add_parser("verify", help="emit a sampled certificate", formatter_class=fmt)
    p.add_argument(
        "claim",
        choices=["invariance", "contraction", "raster-bound", *regions.INEQUALITY_CLAIMS],
        help="which claim to check",
    )
    p.add_argument("--a", type=int, default=1, choices=[1, -1])
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--region", default="Qstar", choices=list(regions.REGION_NAMES))
    p.add_argument("--b", type=_number, default=Fraction(1, 2))
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--raster", default=None, help="stem of a saved raster (raster-bound)")
    p.add_argument("--mapped", action="store_true", help="test first images of pixel centres (raster-bound)")
    _common(p)

    p = sub.add_parser("secant-basin", help="render the basin of a critical three-cycle of the secant map", formatter_class=fmt)
    p.add_argument("--poly", default="1-2x^2+x^3", help="polynomial, e.g. '1 - 2x^2 + x^3'")
    p.add_argument("--critical", type=_number, default=None, help="critical point (default: the first nondegenerate one)")
    _window(p, [-0.05, 0.05, -0.05, 0.05])
    _policy_flags(p, SECANT_POLICY)
    _common(p)
    return top


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    ns = parser.parse_args(argv)
    if ns.subcommand is None:
        raise UsageError("secantlab: a subcommand is required")
    if not getattr(ns, "config", None):
        return ns
    subparser = parser._subparsers._group_actions[0].choices[ns.subcommand]
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    try:
        text = Path(ns.config).read_text()
    except OSError as e:
        raise UsageError(f"cannot read config: {e}") from None
    defaults = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{ns.config}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        dest = key.replace("-", "_")
        if dest not in actions or not actions[dest].option_strings:
            raise UsageError(f"{ns.config}:{lineno}: unknown key {key!r}")
        act = actions[dest]
        conv = act.type or str
        try:
            if isinstance(act, argparse._StoreTrueAction):
                val = value.lower() in ("1", "true", "yes", "on")
            elif act.nargs not in (None, "?"):
                val = [conv(v) for v in value.split()]
            else:
                val = conv(value)
        except (ValueError, argparse.ArgumentTypeError) as e:
            raise UsageError(f"{ns.config}:{lineno}: bad value for {key}: {e}") from None
        if act.choices is not None and val not in act.choices:
            raise UsageError(f"{ns.config}:{lineno}: {key} must be one of {list(act.choices)}")
        defaults[dest] = val
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _write(out: str | None, default: str, data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode()
    if out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return "-"
    path = Path(out or default)
    path.write_bytes(data)
    return str(path)


def _policy(ns) -> IterationPolicy:
    return IterationPolicy(ns.eps, ns.window_len, ns.escape, ns.max_iter)


def _grid(ns) -> basin.GridSpec:
    x0, x1, y0, y1 = ns.window
    return basin.GridSpec(x0, x1, y0, y1, ns.px, ns.px)


def _save(raster, ns, default_stem) -> int:
    stem = ns.out or default_stem
    for path in basin.save_raster(raster, stem, ppm=ns.ppm):
        print(path)
    print(f"converged fraction: {raster.fraction(basin.Label.CONVERGED)!r}")
    return 0


def _cmd_basin(ns) -> int:
    params = _model(ns.a, ns.d)
    raster = basin.render_basin(params, _grid(ns), _policy(ns), ns.workers)
    return _save(raster, ns, f"basin_{_tag(ns.a)}_{ns.d}")


def _cmd_series(ns) -> int:
    kind = series.ManifoldKind(ns.kind)
    s = series.solve_invariant(ModelParams(ns.a, ns.d), kind, ns.order, ns.method)
    where = _write(ns.out, f"series_{_tag(ns.a)}_{ns.d}.csv", s.to_csv())
    if where != "-":
        print(where)
    return 0


def _cmd_cycle(ns) -> int:
    data = cycles.two_cycle_data(ns.d)
    where = _write(ns.out, f"cycle_1_{ns.d}.csv", cycles.CSV_HEADER + "\n" + data.csv_row() + "\n")
    if where != "-":
        print(where)
    return 0


def _trace_policy(ns, default_seed: float) -> globalizer.TracePolicy:
    return globalizer.TracePolicy(
        seed_radius=ns.seed_radius if ns.seed_radius is not None else default_seed,
        max_step=ns.max_step,
        angle_bound=ns.angle_bound,
        max_arclength=ns.max_arclength,
        bisection_tol=ns.bisection_tol,
    )


def _cmd_trace(ns) -> int:
    default = f"trace_{_tag(ns.a)}_{ns.d}.csv"
    if ns.kind in ("stable", "boundary"):
        if ns.a != 1:
            raise DomainError("stable-manifold tracing needs a = 1")
        pol = _trace_policy(ns, globalizer.TracePolicy().seed_radius)
        if ns.kind == "stable":
            res = globalizer.trace_stable_origin_even(ns.d, pol)
            curve, info = res.curve, [("p", res.p)]
        else:
            res = globalizer.assemble_basin_boundary_even(ns.d, pol)
            curve = res.curve
            info = [("p", res.p), ("q", res.slope_two_point), ("q_plus", res.q_plus), ("q_minus", res.q_minus),
                    ("end_tangent_angle", res.end_tangent_angle)]
    elif ns.kind == "unstable":
        if ns.a != 1:
            raise DomainError("the two-cycle exists for a = 1")
        res = globalizer.trace_unstable_two_cycle(ns.d, _trace_policy(ns, 1e-6))
        curve = res.curve
        info = [("p_hat", res.p_hat), ("x0_crossing", res.x0_crossing), ("tangent_slope", res.tangent_slope)]
    else:
        res = globalizer.bracket_stable_point(ns.d, ns.a, ns.x0, _trace_policy(ns, globalizer.TracePolicy().seed_radius))
        text = "k,x,y\n" + "".join(f"{k},{x!r},{y!r}\n" for k, (x, y) in enumerate(zip(res.orbit_x, res.orbit_y)))
        where = _write(ns.out, default, text)
        for k, v in [("point", res.point), ("y", res.y_exact), ("steps_in_region", res.steps_in_region),
                     ("contraction", res.contraction), ("converged", res.converged), ("file", where)]:
            print(f"{k}: {v}")
        return 0
    where = _write(ns.out, default, curve.to_csv())
    for k, v in info + [("vertices", len(curve)), ("file", where)]:
        print(f"{k}: {v}")
    return 0


def _cmd_verify(ns) -> int:
    if ns.claim == "invariance":
        reg = regions.build_region(regions.RegionSpec(ns.region, ns.d, ns.b))
        cert = regions.check_forward_invariance(ModelParams(ns.a, ns.d), reg, ns.samples, ns.margin, ns.workers)
    elif ns.claim == "contraction":
        cert = regions.check_contraction(ns.d, ns.a, ns.samples, ns.workers)
    elif ns.claim == "raster-bound":
        if not ns.raster:
            raise UsageError("raster-bound needs --raster STEM")
        stem = Path(ns.raster)
        raster = basin.load_raster(stem.with_name(stem.name + ".pgm"), stem.with_name(stem.name + "_counts.pgm"))
        reg = regions.build_region(regions.RegionSpec(ns.region, ns.d, ns.b))
        cert = regions.check_raster_bound(raster, reg, ModelParams(ns.a, ns.d) if ns.mapped else None, ns.margin)
    else:
        cert = regions.check_pointwise_inequality(ns.d, ns.claim, ns.samples, ns.workers)
    text = cert.report()
    if ns.out != "-":
        sys.stdout.write(text)
    _write(ns.out, f"verify_{ns.claim}_{_tag(ns.a)}_{ns.d}.txt", text)
    return 0 if cert.passed else 1


def _cmd_secant(ns) -> int:
    p = Polynomial.parse(ns.poly)
    if ns.critical is None:
        good = [c for c in critical_points(p) if c.nondegenerate]
        if not good:
            raise DomainError("no nondegenerate critical point")
        c = min(good, key=lambda c: abs(c.value)).value
        c = Fraction(round(c)) if abs(c - round(c)) < 1e-12 else Fraction(c)
    else:
        c = ns.critical
    q = normalize_at_critical(p, c)
    a = model_coefficient(q)
    raster = basin.render_basin(q, _grid(ns), _policy(ns), ns.workers)
    return _save(raster, ns, f"secant-basin_{_tag(a)}_{q.d}")


COMMANDS = {
    "basin": _cmd_basin,
    "series": _cmd_series,
    "cycle": _cmd_cycle,
    "trace": _cmd_trace,
    "verify": _cmd_verify,
    "secant-basin": _cmd_secant,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    ns = argparse.Namespace(subcommand=argv[0] if argv else "")
    try:
        ns = _apply_config(parser, argv)
        return COMMANDS[ns.subcommand](ns)
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 2
    except (DomainError, ValueError, ZeroDivisionError) as e:
        print(f"secantlab {ns.subcommand}: {e}", file=sys.stderr)
        return 2


def run(config: CommandConfig) -> int:
    """Run a subcommand from a CommandConfig (parameter values are strings, as on the command line)."""
    argv = [config.subcommand, *config.positional]
    for key, value in config.params.items():
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        else:
            argv += [flag, *str(value).split()]
    if config.out is not None:
        argv += ["--out", config.out]
    return main(argv)
