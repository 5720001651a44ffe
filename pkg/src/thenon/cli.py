"""Command-line surface: wv | periodic | escape | stable | render | orbit.

One JSON config drives every subcommand; flags override config values.
Primary artifacts (JSON/CSV/PPM) are byte-reproducible for identical
configs; matplotlib figures are written alongside them unless plotting
is disabled.  Exit codes: 0 success, 2 validation error, 3 numerical
failure, each with a single machine-parsable line on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import __version__, entire, eremenko, henon, periodic4, render, stable, wiman
from .errors import NumericalError, ThenonError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

TOP_KEYS = {"function", "delta", "wv", "periodic", "escape", "stable",
            "render", "orbit", "out", "threads", "plot"}
BLOCK_KEYS = {
    "wv": {"r", "alpha", "grid", "samples"},
    "periodic": {"g", "branch_k", "tol"},
    "escape": {"seed_radius", "depth", "margin", "offsets", "grid"},
    "stable": {"seed_radius", "depth", "j0", "t_probe", "tol", "back_steps"},
    "render": {"width", "height", "window", "base", "u", "v", "max_iter",
               "log_escape_radius"},
    "orbit": {"z", "w", "n_max", "log_escape_radius"},
}


def _parse_complex(v, where: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if (isinstance(v, (list, tuple)) and len(v) == 2
            and all(isinstance(x, (int, float)) for x in v)):
        return complex(v[0], v[1])
    raise ValidationError(f"{where}: expected number or [re, im], got {v!r}")


def _cpair(z: complex) -> list:
    return [z.real, z.imag]


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as handle:
            cfg = json.load(handle)
    except OSError as err:
        raise ValidationError(f"cannot read config: {err}") from None
    except json.JSONDecodeError as err:
        raise ValidationError(f"config is not valid JSON: {err}") from None
    if not isinstance(cfg, dict):
        raise ValidationError("config root must be an object")
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    for block, allowed in BLOCK_KEYS.items():
        if block in cfg:
            if not isinstance(cfg[block], dict):
                raise ValidationError(f"config.{block} must be an object")
            extra = set(cfg[block]) - allowed
            if extra:
                raise ValidationError(
                    f"unknown keys in config.{block}: {sorted(extra)}")
    return cfg


def _function(cfg: dict):
    return entire.from_spec(cfg.get("function", {"kind": "exp"}))


def _delta(cfg: dict) -> complex:
    return _parse_complex(cfg.get("delta", 1.0), "delta")


def _threads(cfg: dict, args) -> int:
    if args.threads is not None:
        return args.threads
    if "threads" in cfg:
        n = cfg["threads"]
        if not isinstance(n, int) or n < 1:
            raise ValidationError("threads must be a positive integer")
        return n
    env = os.environ.get("THENON_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValidationError(
                f"THENON_THREADS is not an integer: {env!r}") from None
        if n < 1:
            raise ValidationError("THENON_THREADS must be positive")
        return n
    return os.cpu_count() or 1


def _plotting(cfg: dict, args) -> bool:
    if args.no_plot:
        return False
    return bool(cfg.get("plot", True))


def _emit_json(payload: dict, out) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as handle:
            handle.write(text)


def _sibling(out, suffix: str) -> str:
    stem, _ = os.path.splitext(out)
    return f"{stem}{suffix}"


def _fig_path(out) -> str:
    return _sibling(out, ".png")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_wv(cfg: dict, args) -> int:
    f = _function(cfg)
    block = cfg.get("wv", {})
    r = args.seed_radius if args.seed_radius is not None \
        else block.get("r", 4000.0)
    alpha = block.get("alpha", wiman.DEFAULT_ALPHA)
    grid = block.get("grid", 16)
    samples = block.get("samples", entire.DEFAULT_SAMPLES)
    frame = wiman.build_frame(f, float(r), float(alpha), int(samples))
    report = wiman.residual_report(f, frame, int(grid))
    payload = json.loads(wiman.report_to_json(report))
    _emit_json(payload, args.out)
    if args.out and _plotting(cfg, args):
        from . import plots
        plots.save_residual_figure(payload, _fig_path(args.out))
    return EXIT_OK


def cmd_periodic(cfg: dict, args) -> int:
    block = cfg.get("periodic", {})
    if args.g is not None:
        shorthand = {"id": [0, 1], "z2": [0, 0, 1], "z3": [0, 0, 0, 1]}
        if args.g in shorthand:
            g = entire.poly_function(shorthand[args.g], name=args.g)
        else:
            try:
                g = entire.from_spec(json.loads(args.g))
            except json.JSONDecodeError:
                raise ValidationError(
                    f"--g must be id|z2|z3 or a JSON function spec, "
                    f"got {args.g!r}") from None
    else:
        g = entire.from_spec(block.get("g", {"kind": "poly",
                                             "coeffs": [0, 1]}))
    tol = args.tol if args.tol is not None else block.get("tol", 1e-11)
    sol = periodic4.solve_first_order(g, branch_k=block.get("branch_k"))
    point = periodic4.refine_period4(g, sol, tol=float(tol))
    z, w = point.to_complex()
    g1, g2 = periodic4.G_map(g, z, w)
    report = periodic4.verify_period4(g, point)
    orbit = [[_cpair(a), _cpair(b)] for a, b in
             periodic4.orbit_points(g, point)]
    payload = {
        "z0": _cpair(sol.z0),
        "k": sol.k,
        "period_point": {"z": _cpair(z), "w": _cpair(w)},
        "G_residual": math.hypot(abs(g1 - periodic4.PI_I),
                                 abs(g2 + periodic4.PI_I)),
        "residual": report.residual,
        "primitive": report.primitive,
        "orbit": orbit,
    }
    _emit_json(payload, args.out)
    if args.out and _plotting(cfg, args):
        from . import plots
        plots.save_periodic_figure(orbit, _fig_path(args.out))
    return EXIT_OK


def _build_cascade(cfg: dict, args):
    block = cfg.get("escape", {})
    f = _function(cfg)
    m = henon.HenonMap(f, _delta(cfg))
    seed = args.seed_radius if args.seed_radius is not None \
        else block.get("seed_radius", 3200.0)
    depth = args.depth if args.depth is not None else block.get("depth", 3)
    return eremenko.build_cascade(
        m, float(seed), int(depth),
        d_offsets=block.get("offsets"),
        margin=float(block.get("margin", eremenko.DEFAULT_MARGIN)),
        grid=int(block.get("grid", 12)))


def cmd_escape(cfg: dict, args) -> int:
    cascade = _build_cascade(cfg, args)
    record = eremenko.escaping_point(cascade)
    summary = eremenko.cascade_summary(cascade)
    payload = {
        "summary": summary,
        "annulus_checks": eremenko.annulus_memberships(cascade),
        "bounds": eremenko.bound_report(cascade),
        "escaped_at": record.escaped_at,
        "orbit_points_recorded": len(record.points),
    }
    _emit_json(payload, args.out)
    if args.out:
        henon.write_orbit_csv(record, _sibling(args.out, ".orbit.csv"))
        if _plotting(cfg, args):
            from . import plots
            plots.save_cascade_figure(summary, _fig_path(args.out))
    return EXIT_OK


def cmd_stable(cfg: dict, args) -> int:
    block = cfg.get("stable", {})
    escape_cfg = dict(cfg)
    escape_cfg.setdefault("escape", {})
    if "seed_radius" in block:
        escape_cfg["escape"] = dict(escape_cfg["escape"],
                                    seed_radius=block["seed_radius"])
    if "depth" in block:
        escape_cfg["escape"] = dict(escape_cfg["escape"],
                                    depth=block["depth"])
    cascade = _build_cascade(escape_cfg, args)
    j0 = int(block.get("j0", 0))
    tol = args.tol if args.tol is not None else block.get("tol", 1e-9)
    curve = stable.local_stable_curve(cascade, j0, tol=float(tol))
    audit = stable.contraction_audit(cascade, j0, tol=float(tol))
    t_probe = _parse_complex(block.get("t_probe", 0.3), "stable.t_probe")
    steps = min(3, cascade.depth - curve.level)
    rate = stable.convergence_rate(cascade, curve, t_probe, steps)
    payload = {
        "level": curve.level,
        "contraction": {
            "distances": audit["distances"],
            "ratios": audit["ratios"],
            "line_ratio": audit["line_ratio"],
            "alpha_log_per_level": audit["alpha_log_per_level"],
        },
        "convergence": rate,
    }
    if args.out is None:
        raise ValidationError("the stable subcommand needs --out for its CSV")
    stable.write_curve_csv(curve, args.out)
    _emit_json(payload, _sibling(args.out, ".json"))
    back = int(block.get("back_steps", 0))
    if back > 0:
        pts = stable.globalize(cascade, curve, back)
        with open(_sibling(args.out, ".polyline.json"), "w") as fh:
            fh.write(stable.polyline_json(pts) + "\n")
    if _plotting(cfg, args):
        from . import plots
        ts = [t.real for t in curve.t_grid[:stable.DIAMETER_NODES]]
        offs = curve.offsets()[:stable.DIAMETER_NODES]
        plots.save_curve_figure(ts, offs, rate["per_step"],
                                _fig_path(args.out))
    return EXIT_OK


def cmd_render(cfg: dict, args) -> int:
    block = cfg.get("render", {})
    f = _function(cfg)
    m = henon.HenonMap(f, _delta(cfg))
    std = render.STANDARD_SLICE
    window = block.get("window", list(std.window))
    if not (isinstance(window, (list, tuple)) and len(window) == 4):
        raise ValidationError("render.window must be [s0, s1, t0, t1]")
    spec = render.SliceSpec(
        base=tuple(_parse_complex(c, "render.base")
                   for c in block.get("base", [[0, 0], [0, 0]])),
        u=tuple(_parse_complex(c, "render.u")
                for c in block.get("u", [[1, 0], [0, 0]])),
        v=tuple(_parse_complex(c, "render.v")
                for c in block.get("v", [[0, 1], [0, 0]])),
        width=int(block.get("width", std.width)),
        height=int(block.get("height", std.height)),
        window=tuple(float(x) for x in window),
        max_iter=int(block.get("max_iter", std.max_iter)),
        log_escape_radius=float(block.get("log_escape_radius",
                                          std.log_escape_radius)),
    )
    grid = render.render_slice(m, spec, threads=_threads(cfg, args))
    if args.out is None:
        raise ValidationError("the render subcommand needs --out for its PPM")
    render.write_ppm(grid, args.out)
    if _plotting(cfg, args):
        from . import plots
        plots.save_escape_figure(grid.counts, spec.max_iter,
                                 _fig_path(args.out))
    return EXIT_OK


def cmd_orbit(cfg: dict, args) -> int:
    block = cfg.get("orbit", {})
    f = _function(cfg)
    m = henon.HenonMap(f, _delta(cfg))
    p0 = henon.Point2.from_complex(
        _parse_complex(block.get("z", 0.0), "orbit.z"),
        _parse_complex(block.get("w", 0.0), "orbit.w"))
    n_max = int(block.get("n_max", 50))
    radius = float(block.get("log_escape_radius", math.log(1e6)))
    record = henon.iterate_orbit(m, p0, n_max, radius)
    if args.out is None:
        raise ValidationError("the orbit subcommand needs --out for its CSV")
    henon.write_orbit_csv(record, args.out)
    if _plotting(cfg, args):
        from . import plots
        rows = [{"n": n, "log_abs_z": p.z.log_abs}
                for n, p in enumerate(record.points)]
        plots.save_orbit_figure(rows, _fig_path(args.out))
    return EXIT_OK


COMMANDS = {
    "wv": cmd_wv,
    "periodic": cmd_periodic,
    "escape": cmd_escape,
    "stable": cmd_stable,
    "render": cmd_render,
    "orbit": cmd_orbit,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thenon",
        description="Numerical dynamics of transcendental Henon maps")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("wv", "build a frame and report its residual screen"),
        ("periodic", "construct and certify a period-4 orbit"),
        ("escape", "build the escaping cascade and extract an orbit"),
        ("stable", "compute the local stable curve and its contraction"),
        ("render", "render an escape-time slice to PPM"),
        ("orbit", "iterate one orbit to CSV"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="JSON config path")
        p.add_argument("--out", default=None, help="primary artifact path")
        p.add_argument("--threads", type=int, default=None,
                       help="worker count (default: hardware count, or "
                            "THENON_THREADS)")
        p.add_argument("--seed-radius", type=float, default=None,
                       dest="seed_radius")
        p.add_argument("--depth", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--no-plot", action="store_true",
                       help="skip the companion figure")
        if name == "periodic":
            p.add_argument("--g", default=None,
                           help="id | z2 | z3 | JSON function spec")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except ValidationError as err:
        sys.stderr.write(f"thenon: error: {type(err).__name__}: {err}\n")
        return EXIT_VALIDATION
    except OSError as err:
        sys.stderr.write(f"thenon: error: IoError: {err}\n")
        return EXIT_VALIDATION
    except NumericalError as err:
        sys.stderr.write(f"thenon: error: {type(err).__name__}: {err}\n")
        return EXIT_NUMERICAL
    except ThenonError as err:
        sys.stderr.write(f"thenon: error: {type(err).__name__}: {err}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
