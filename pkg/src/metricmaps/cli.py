"""``mc``: command-line front end.

Exit codes: 0 success, 2 malformed input (schema, JSON, arguments),
3 mathematical failure (invalid metric, violated precondition, domain).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .errors import MetricError, StructuralError
from .parallel import set_default_jobs

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib


# ---------------------------------------------------------------- helpers


def _parse_schedule(text):
    text = str(text)
    if ":" in text:
        lo, hi = (int(v) for v in text.split(":"))
        if lo < 1 or hi <= lo:
            raise argparse.ArgumentTypeError("schedule range must be K:L with 1 <= K < L")
        return tuple(2.0 ** -k for k in range(lo, hi + 1))
    return tuple(float(v) for v in text.split(","))


def _parse_point(text):
    return np.array([float(v) for v in str(text).split(",")])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def _csv_text(rows):
    if not rows:
        return ""
    buf = io.StringIO()
    keys = list(rows[0].keys())
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


# ---------------------------------------------------------------- commands
# each returns (exit_code, report_dict, csv_rows)


def cmd_validate(args):
    from .metric_core import read_space, validate_metric

    space = read_space(args.space)
    rep = validate_metric(space)
    rows = [{"kind": v.kind, "i": v.points[0], "j": v.points[1], "k": v.points[2], "slack": v.slack}
            for v in rep.violations]
    return (0 if rep.ok else 3), {"space": str(args.space), "n": space.n, **rep.to_dict()}, rows


def _validated_relation(path):
    from .metric_core import validate_metric
    from .relations import read_relation

    rho = read_relation(path)
    for side, sp in (("src", rho.src), ("dst", rho.dst)):
        rep = validate_metric(sp)
        if not rep.ok:
            v = rep.violations[0]
            raise MetricError(f"{side} space is not a metric: {v.kind} violation at {list(v.points)} (slack {v.slack:.3g})")
    return rho


def cmd_quality(args):
    from .relations import map_quality

    q = map_quality(_validated_relation(args.relation), args.jobs)
    rows = [{"measure": k, "value": getattr(q, k)} for k in ("accuracy", "resolution", "precision")]
    return 0, q.to_dict(), rows


def cmd_generalize(args):
    from .relations import check_generalization_bounds, generalize

    rho = _validated_relation(args.relation)
    bar = generalize(rho, args.eps, args.mu)
    checks = check_generalization_bounds(rho, bar, args.eps, args.mu, args.jobs)
    report = {"eps": args.eps, "mu": args.mu, "pairs": bar.pairs.tolist(), "bounds": [c.to_dict() for c in checks]}
    return 0, report, [c.to_dict() for c in checks]


def cmd_gh(args):
    from .gromov_hausdorff import gh_exact
    from .metric_core import read_space

    X, Y = read_space(args.x), read_space(args.y)
    res = gh_exact(X, Y, args.budget)
    d = res.to_dict(classical=args.classical)
    rows = [{k: d[k] for k in ("value", "exact", "lowerBound", "upperBound", "nodesExplored", "classical")}]
    return 0, d, rows


def _structure(args):
    from .dilations import make_structure

    return make_structure(args.structure, alpha=args.alpha)


def cmd_axioms(args):
    from .axioms import conical_checks, dyadic_factors, linearity_residual, run_axioms
    from .dilations import Heisenberg

    s = _structure(args)
    rng = np.random.default_rng(args.seed)
    rep = run_axioms(s, rng, args.samples, args.schedule, jobs=args.jobs)
    x = np.zeros(s.dim)
    u = s.sample(rng, x, args.samples, s.domain_radius)
    v = s.sample(rng, x, args.samples, s.domain_radius)
    lin = linearity_residual(s, x, 0.5, u, v, dyadic_factors(rng, args.samples), args.jobs)
    out = rep.to_dict()
    out["linearity"] = {"morphism": lin.morphism, "homothety": lin.homothety, "value": lin.value}
    if isinstance(s, Heisenberg):
        out["conical"] = conical_checks(s, rng, n_exact=args.samples, jobs=args.jobs).to_dict()
    rows = [{"eps": e, "a3": r3, "a4": r4} for e, r3, r4 in zip(rep.a3.schedule, rep.a3.residuals, rep.a4.residuals)]
    return 0, out, rows


def _zoom(args):
    from .axioms import check_A3
    from .zoom import build_zoom

    s = _structure(args)
    x = np.zeros(s.dim) if args.x is None else _parse_point(args.x)
    if len(x) != s.dim:
        raise StructuralError(f"--x needs {s.dim} coordinates for structure {s.name}", field="x")
    rng = np.random.default_rng(args.seed)
    u = s.sample(rng, x, 500, 1.0)
    v = s.sample(rng, x, 500, 1.0)
    a3 = check_A3(s, x, u, v, args.schedule, tangent=s.tangent_distance(x), jobs=args.jobs)
    return s, x, build_zoom(s, x, args.schedule, a3, step=args.step, jobs=args.jobs)


def cmd_zoom(args):
    from .zoom import cascade_check, scale_stability, viewpoint_stability

    s, x, z = _zoom(args)
    cas = cascade_check(z, z.schedule, args.mu)
    st = scale_stability(z, args.mu, jobs=args.jobs)
    vp = viewpoint_stability(z, args.viewpoint, jobs=args.jobs)
    mod = z.modulus_table()
    out = {
        "structure": s.to_dict(),
        "x": x,
        "mu": args.mu,
        "templateSize": len(z.template),
        "a3": z.a3.estimate,
        "modulus": z.modulus_estimate(),
        "cascade": {"holds": cas["holds"], "rows": cas["rows"], "boundVsMu": cas["bound_vs_mu"]},
        "scaleStability": st,
        "viewpointStability": vp,
    }
    rows = [
        {"eps": e, "modulus": m, "cascade_measured": r.measured, "cascade_bound": r.bound,
         "stability_modulus": sm, "self_similarity": ss}
        for e, m, r, sm, ss in zip(z.schedule, mod, cas["rows"], st.modulus, st.self_similarity.residuals)
    ]
    code = 0 if cas["holds"] and st.holds else 3
    return code, out, rows


def cmd_foveal(args):
    from .zoom import foveal, foveal_bounds, foveal_fixedpoint_check, scale_stability

    s, x, z = _zoom(args)
    st = scale_stability(z, args.mu, jobs=args.jobs)
    fz = foveal(z, args.mu, st.limit_relation)
    fb = foveal_bounds(fz, st)
    fp = foveal_fixedpoint_check(fz, args.jobs)
    identical = all(np.array_equal(fz.relation(e).pairs, z.relation(e).pairs) for e in z.schedule)
    out = {
        "structure": s.to_dict(),
        "x": x,
        "mu": args.mu,
        "identicalToSource": identical,
        "multivaluedPixels": fz.multivalued,
        "bounds": {"slack": fb["slack"], "holds": fb["holds"], "rows": fb["rows"]},
        "fixedPoint": fp,
    }
    rows = [dict(r.to_dict(), fixed_point=f["distance"]) for r, f in zip(fb["rows"], fp["rows"])]
    return (0 if fb["holds"] else 3), out, rows


PANSU_MAPS = ("linear", "smooth", "shear")


def pansu_case(structure, name):
    """(f, L, x) for the shipped derivative examples."""
    from .dilations import Euclidean, Heisenberg

    if isinstance(structure, Heisenberg):
        if name == "shear":
            return (lambda p: p + np.stack([0 * p[..., 0], 0 * p[..., 0], p[..., 0]], axis=-1)), (lambda p: p), np.zeros(3)
        if name == "linear":
            scale = np.array([2.0, 1.0, 2.0])
            return (lambda p: p * scale), (lambda p: p * scale), np.zeros(3)
    elif type(structure) is Euclidean:
        if name == "linear":
            M = np.array([[2.0, 0.5], [-0.25, 1.0]])
            return (lambda p: p @ M.T), (lambda p: p @ M.T), np.zeros(2)
        if name == "smooth":
            f = lambda p: np.stack([np.sin(p[..., 0]), p[..., 1] + p[..., 0] ** 2], axis=-1)  # noqa: E731
            return f, (lambda p: p), np.zeros(2)
    raise StructuralError(f"map {name!r} is not available for structure {structure.name}", field="map")


def cmd_pansu(args):
    from .axioms import pansu_residual

    s = _structure(args)
    f, L, x = pansu_case(s, args.map)
    rng = np.random.default_rng(args.seed)
    u = s.sample(rng, x, args.samples, 1.0)
    est = pansu_residual(s, s, f, L, x, u, args.schedule, jobs=args.jobs)
    rows = [{"eps": e, "residual": r} for e, r in zip(est.schedule, est.residuals)]
    return 0, {"structure": s.to_dict(), "map": args.map, **est.to_dict()}, rows


# ---------------------------------------------------------------- parser


def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--jobs", type=int, default=None, help="worker threads for max-reductions")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", "--report", dest="out", default=None, help="write the JSON report here")
    g.add_argument("--csv", action="store_true", help="emit a flat CSV table instead of JSON")
    g.add_argument("--config", default=None, help="TOML or JSON file supplying option defaults")
    return p


def _structure_opts(p, zoom=False):
    p.add_argument("--structure", choices=["euclid", "snowflake", "logpe", "heis"], required=True)
    p.add_argument("--alpha", type=float, default=0.5, help="snowflake exponent")
    p.add_argument("--schedule", type=_parse_schedule, default=_parse_schedule("3:10"),
                   help="K:L for eps = 2^-K..2^-L, or a comma list")
    if zoom:
        p.add_argument("--x", default=None, help="base point, comma separated")
        p.add_argument("--mu", type=float, default=0.5)
        p.add_argument("--step", type=float, default=None, help="template lattice step")


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="mc", description="Maps between metric spaces, GH distance and dilation structures.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("validate", parents=[common], help="check the metric axioms of a space")
    p.add_argument("space")
    p.set_defaults(func=cmd_validate)
    subs["validate"] = p

    p = sub.add_parser("quality", parents=[common], help="accuracy, resolution and precision of a relation")
    p.add_argument("relation")
    p.set_defaults(func=cmd_quality)
    subs["quality"] = p

    p = sub.add_parser("generalize", parents=[common], help="thicken a relation and check the bounds")
    p.add_argument("relation")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.set_defaults(func=cmd_generalize)
    subs["generalize"] = p

    p = sub.add_parser("gh", parents=[common], help="Gromov-Hausdorff distance by branch and bound")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--budget", type=int, default=2_000_000)
    p.add_argument("--classical", action="store_true", help="report half the correspondence distortion")
    p.set_defaults(func=cmd_gh)
    subs["gh"] = p

    p = sub.add_parser("axioms", parents=[common], help="dilation-structure axiom suite")
    _structure_opts(p)
    p.add_argument("--samples", type=int, default=10_000)
    p.set_defaults(func=cmd_axioms)
    subs["axioms"] = p

    p = sub.add_parser("zoom", parents=[common], help="zoom sequence, cascade and stability tables")
    _structure_opts(p, zoom=True)
    p.add_argument("--viewpoint", type=int, default=1, help="pixel index seen as the new viewpoint")
    p.set_defaults(func=cmd_zoom)
    subs["zoom"] = p

    p = sub.add_parser("foveal", parents=[common], help="foveal maps and their bounds")
    _structure_opts(p, zoom=True)
    p.set_defaults(func=cmd_foveal)
    subs["foveal"] = p

    p = sub.add_parser("pansu", parents=[common], help="derivative residual of a shipped map")
    _structure_opts(p)
    p.add_argument("--map", choices=PANSU_MAPS, required=True)
    p.add_argument("--samples", type=int, default=2000)
    p.set_defaults(func=cmd_pansu)
    subs["pansu"] = p
    return parser, subs


def load_config(path):
    path = Path(path)
    raw = path.read_bytes()
    try:
        if path.suffix.lower() == ".json":
            cfg = json.loads(raw)
        else:
            cfg = tomllib.loads(raw.decode())
    except (json.JSONDecodeError, tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise StructuralError(f"{path}: cannot parse config ({exc})", field="<config>") from None
    if not isinstance(cfg, dict):
        raise StructuralError(f"{path}: config must be a table/object", field="<config>")
    return cfg, hashlib.sha256(raw).hexdigest()


def _apply_config(cfg, command, sub):
    merged = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    merged.update(cfg.get(command, {}) if isinstance(cfg.get(command), dict) else {})
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, val in merged.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("help", "config"):
            raise StructuralError(f"config: unknown option {key!r} for '{command}'", field=key)
        action = known[dest]
        if action.type is not None and not isinstance(val, bool):
            try:
                val = action.type(val if not isinstance(val, list) else ",".join(map(str, val)))
            except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
                raise StructuralError(f"config: bad value for {key!r}: {exc}", field=key) from None
        defaults[dest] = val
    for a in sub._actions:
        if a.dest in defaults:
            a.required = False
    sub.set_defaults(**defaults)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    start = time.perf_counter()
    config_digest = None
    try:
        pre, _ = argparse.ArgumentParser(add_help=False, parents=[_common()]).parse_known_args(argv)
        if pre.config:
            cfg, config_digest = load_config(pre.config)
            command = next((a for a in argv if a in subs), None)
            if command is not None:
                _apply_config(cfg, command, subs[command])
        args = parser.parse_args(argv)
        set_default_jobs(args.jobs)
        code, report, rows = args.func(args)
    except SystemExit:
        raise
    except StructuralError as exc:
        field = f" [field: {exc.field}]" if exc.field else ""
        print(f"mc: input error{field}: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"mc: cannot read input: {exc}", file=sys.stderr)
        return 2
    except MetricError as exc:
        print(f"mc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3

    text = _csv_text(_jsonable(rows)) if args.csv else json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    outputs = []
    if args.out:
        out = Path(args.out)
        if args.csv:
            out = out.with_suffix(".csv")
        out.write_text(text)
        outputs.append(str(out))
    else:
        sys.stdout.write(text)
    manifest = {
        "argv": ["mc", *argv],
        "configSha256": config_digest,
        "seed": args.seed,
        "version": __version__,
        "backend": kernels.BACKEND,
        "jobs": args.jobs,
        "wallTime": round(time.perf_counter() - start, 6),
        "outputs": outputs,
        "exitCode": code,
    }
    mtext = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(str(args.out) + ".manifest.json").write_text(mtext)
    else:
        sys.stderr.write(mtext)
    return code


if __name__ == "__main__":
    sys.exit(main())
