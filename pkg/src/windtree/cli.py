"""Command line front end.

Every subcommand writes JSON (or SVG for ``render``) to ``--out`` or stdout.
Exit codes: 0 certified success, 2 certified failure, 3 inconclusive, 1 error.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field

import click

from .billiard import Billiard, Direction, PhasePoint, TrajectoryEvent, events_to_jsonl, parse_direction
from .config import (Cell, ConfigError, build_nested_rings, build_ringed, config_from_json,
                     config_to_json, load_config)
from .escape import RingLayout, escape_search
from .exactnum import parse_scalar
from .extract import ChartComponent, ChartDictionary, build_table, extract_iet
from .iet import (EligibleIET, certificate_from_json, certificate_to_json, find_connections,
                  verify_certificate)
from .minimality import cover_coverage, star_connection_scan
from .periodic import continue_periodic, cylinder_decomposition
from .render import cylinder_bands, orbit_points, render_svg

OK, ERROR, FAILED, INCONCLUSIVE = 0, 1, 2, 3


@dataclass
class ExperimentSpec:
    command: str
    config: str = None
    slope: str = None
    radicand: int = None
    N: int = 2
    rings: str = None
    bound: int = None
    depth: int = 3
    seed: int = 0
    out: str = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.bound is not None and self.bound <= 0:
            raise ValueError("bound must be positive")
        if self.depth is not None and self.depth <= 0:
            raise ValueError("depth must be positive")


def _s(x):
    return str(x)


def _direction(spec):
    if spec.slope is None:
        raise ValueError("--slope is required")
    d, cls = parse_direction(spec.slope)
    if spec.radicand is not None and d.radicand not in (0, spec.radicand):
        raise ValueError(f"slope uses sqrt({d.radicand}) but --radicand is {spec.radicand}")
    return d, cls


def _config(spec, key="config"):
    path = spec.config if key == "config" else spec.options.get(key)
    if path is None:
        raise ValueError(f"--{key} is required")
    g = load_config(path)
    if spec.radicand is not None and g.radicand not in (0, spec.radicand):
        raise ConfigError(f"configuration uses sqrt({g.radicand}) but --radicand is {spec.radicand}")
    return g


def _point(text):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError("point must be 'i,j,class,s'")
    return PhasePoint(Cell(int(parts[0]), int(parts[1])), int(parts[2]), parse_scalar(parts[3]))


def _point_json(pp):
    return {"cell": [pp.cell.i, pp.cell.j], "class": pp.cls, "s": _s(pp.s)}


def _point_from_json(d):
    return PhasePoint(Cell(*d["cell"]), int(d["class"]), parse_scalar(d["s"]))


def _emit(spec, text):
    if spec.out:
        with open(spec.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(spec, obj):
    _emit(spec, json.dumps(obj, indent=2) + "\n")


def _iet_json(ex):
    T = ex.iet
    return {
        "components": [[_s(a), _s(b)] for a, b in T.components],
        "pieces": [[_s(p.lo), _s(p.hi), _s(p.shift)] for p in T.pieces],
        "charts": ex.charts.to_json(),
    }


def _header(kind, g, d, N):
    return {"kind": kind, "config": json.loads(config_to_json(g)), "direction": [_s(d.dx), _s(d.dy)], "N": N}


# -- handlers ---------------------------------------------------------------------

def _ring_build(spec):
    r = spec.options.get("r", "1/4")
    if spec.rings:
        sizes = [int(x) for x in spec.rings.split(",")]
        outer = spec.options.get("outer")
        g = build_nested_rings(sizes, r, spec.options.get("shrink", "0"), outer=outer)
    else:
        g = build_ringed(spec.N, r)
    _emit(spec, config_to_json(g))
    return OK


def _simulate(spec):
    g = _config(spec)
    d, _ = _direction(spec)
    b = Billiard(g, d)
    pp = _point(spec.options["point"])
    _emit(spec, events_to_jsonl(b.orbit(pp, spec.bound or 100)))
    return OK


def _render(spec):
    g = _config(spec)
    orbit, bands = (), ()
    if spec.options.get("point"):
        d, _ = _direction(spec)
        orbit = orbit_points(g, d, _point(spec.options["point"]), spec.options.get("steps", 50))
    if spec.options.get("cylinders"):
        d, _ = _direction(spec)
        bands = cylinder_bands(cylinder_decomposition(build_table(g, spec.N), d))
    _emit(spec, render_svg(g, spec.N, orbit, bands))
    return OK


def _extract(spec):
    g = _config(spec)
    d, _ = _direction(spec)
    ex = extract_iet(build_table(g, spec.N), d)
    out = _header("iet", g, d, spec.N)
    out.update(_iet_json(ex))
    _dump(spec, out)
    return OK


def _scan(spec):
    g = _config(spec)
    d, _ = _direction(spec)
    table = build_table(g, spec.N)
    ex = extract_iet(table, d)
    conns = find_connections(ex.iet, spec.bound or 10 ** 4)
    out = _header("connections", g, d, spec.N)
    out["connections"] = [{"orbit": [_s(x) for x in c.orbit], "length": c.length, "kind": c.kind}
                          for c in conns]
    level = spec.options.get("cover_level")
    if level:
        star = star_connection_scan(table, d, level, spec.bound or 10 ** 4)
        out["star_connections"] = [{"orbit": [_s(x) for x in c.orbit], "length": c.length, "kind": c.kind}
                                   for c in star]
    _dump(spec, out)
    return FAILED if conns else OK


def _coverage(spec):
    g = _config(spec)
    d, _ = _direction(spec)
    level = spec.options.get("cover_level", 1)
    table = build_table(g, spec.N)
    res = cover_coverage(table, d, level, spec.bound or 10 ** 5)
    ex = res.extracted
    out = _header("coverage", g, d, spec.N)
    out.update(_iet_json(ex))
    out.update({
        "cover_level": level,
        "ok": res.ok,
        "K": res.K,
        "L": res.L,
        "seeds": [{"chart": [c[0].i, c[0].j, c[1]], "interval": [_s(a), _s(b)]} for c, (a, b) in res.seeds],
        "certificates": [json.loads(certificate_to_json(ex.iet, c, full_tree=spec.options.get("tree", False)))
                         for c in res.certificates],
    })
    if res.failure:
        (cell, cls), (lo, hi), gaps, exhausted = res.failure
        out["failure"] = {
            "chart": [cell.i, cell.j, cls],
            "interval": [_s(lo), _s(hi)],
            "gaps": [[_s(a), _s(b)] for a, b in gaps],
            "exhausted": exhausted,
        }
    _dump(spec, out)
    if res.ok:
        return OK
    return INCONCLUSIVE if res.failure[3] else FAILED


def _cylinders(spec):
    g = _config(spec)
    d, _ = _direction(spec)
    dec = cylinder_decomposition(build_table(g, spec.N), d)
    out = _header("cylinders", g, d, spec.N)
    out["cylinders"] = [{"period": c.period, "intervals": [[_s(a), _s(b)] for a, b in c.intervals]}
                        for c in dec.cylinders]
    out["intervals"] = [
        {"chart": [ch[0].i, ch[0].j, ch[1]], "s": [_s(lo), _s(hi)], "period": p, "cylinder": k}
        for ch, (lo, hi), p, k, _ in dec.intervals
    ]
    out["saddle_set"] = [_s(x) for x in dec.saddle_set]
    out["marked_measure"] = _s(dec.marked_measure())
    _dump(spec, out)
    return OK


def _continue(spec):
    f = _config(spec, "from")
    g = _config(spec, "to")
    d, _ = _direction(spec)
    pp = _point(spec.options["point"])
    try:
        res = continue_periodic(f, g, d, pp, bound=spec.bound or 10 ** 4)
    except ValueError as e:
        if str(e) == "window exceeded":
            _dump(spec, {"kind": "continuation", "error": "window exceeded"})
            return FAILED
        raise
    out = {
        "kind": "continuation",
        "config": json.loads(config_to_json(g)),
        "point": _point_json(PhasePoint(pp.cell, res.cls, pp.s)),
        "direction": [_s(res.direction.dx), _s(res.direction.dy)],
        "slope_parameter": _s(res.slope),
        "period": res.period,
        "original_period": res.original_period,
    }
    _dump(spec, out)
    return OK


def _escape(spec):
    sizes = [int(x) for x in (spec.rings or "2,4,6").split(",")]
    r = spec.options.get("r", "3/8")
    shrink = spec.options.get("shrink", "1/20")
    outer = spec.options.get("outer") or max(sizes) + 2
    d, _ = _direction(spec)
    g = build_nested_rings(sizes, r, shrink, outer=outer)
    ginf = build_nested_rings(sizes, r, shrink)
    verify = spec.options.get("verify_steps", 10 ** 4)
    rec = escape_search(g, d, sizes, outer, 0, spec.depth, spec.bound or 3000, verify_config=ginf,
                        verify_steps=verify)
    out = _header("escape", ginf, d, outer)
    out.update({
        "rings": sizes,
        "depth": rec.depth,
        "levels": [[[_s(a), _s(b)] for a, b in lv] for lv in rec.levels],
        "candidate": _point_json(rec.candidate) if rec.candidate else None,
        "verified_no_return_steps": rec.verified_no_return_steps,
        "verify_steps": verify,
    })
    _dump(spec, out)
    return OK if rec.depth >= spec.depth and rec.verified_no_return_steps >= verify else INCONCLUSIVE


# -- recheck ------------------------------------------------------------------------

def _charts_from_json(b, items):
    comps = [ChartComponent(Cell(*c["cell"]), int(c["class"]), parse_scalar(c["s_lo"]), parse_scalar(c["s_hi"]),
                            parse_scalar(c["offset"]), parse_scalar(c["length"]), bool(c["marked"]))
             for c in items]
    return ChartDictionary(b, comps)


def _replay_pieces(b, T, charts):
    """Every piece's midpoint, moved by one billiard step, lands where the piece says."""
    for p in T.pieces:
        m = (p.lo + p.hi) / 2
        nxt = b.step(charts.to_phase(m))
        if isinstance(nxt, TrajectoryEvent) or charts.to_u(nxt) != m + p.shift:
            return False
    return True


def recheck_artifact(data):
    """Replay a JSON artifact against the billiard kernel; returns ``(ok, message)``."""
    kind = data.get("kind")
    g = config_from_json(json.dumps(data["config"]))
    d = Direction(parse_scalar(data["direction"][0]), parse_scalar(data["direction"][1]))
    if kind in ("iet", "coverage"):
        b = Billiard(g, d, window=data["N"])
        charts = _charts_from_json(b, data["charts"])
        T = EligibleIET([tuple(c) for c in data["components"]], [tuple(p) for p in data["pieces"]])
        if not _replay_pieces(b, T, charts):
            return False, "IET disagrees with the billiard"
        if kind == "iet":
            return True, f"{len(T.pieces)} pieces replayed"
        if not data["ok"]:
            return True, "failure record; nothing to certify"
        target = charts.marked_intervals()
        for k, c in enumerate(data["certificates"]):
            cert = certificate_from_json(c)
            if cert.target != target:
                return False, f"certificate {k}: target is not the marked region"
            if not verify_certificate(T, cert) or cert.K < data["K"] or cert.L > data["L"]:
                return False, f"certificate {k} does not replay"
        return True, f"{len(data['certificates'])} certificates replayed"
    if kind == "cylinders":
        b = Billiard(g, d)
        for k, iv in enumerate(data["intervals"]):
            lo, hi = (parse_scalar(x) for x in iv["s"])
            pp = PhasePoint(Cell(*iv["chart"][:2]), iv["chart"][2], (lo + hi) / 2)
            cur = pp
            for step in range(1, iv["period"] + 1):
                cur = b.step(cur)
                if isinstance(cur, TrajectoryEvent) or (cur == pp) != (step == iv["period"]):
                    return False, f"interval {k} does not close with period {iv['period']}"
        return True, f"{len(data['intervals'])} intervals replayed"
    if kind == "continuation":
        b = Billiard(g, d)
        pp = _point_from_json(data["point"])
        cur = pp
        for step in range(1, data["period"] + 1):
            cur = b.step(cur)
            if isinstance(cur, TrajectoryEvent) or (cur == pp) != (step == data["period"]):
                return False, "orbit does not close"
        if data["original_period"] % data["period"]:
            return False, "period does not divide the original period"
        return True, "orbit closes"
    if kind == "escape":
        if data["candidate"] is None:
            return False, "no candidate"
        from .escape import _no_return_steps

        b = Billiard(g, d)
        steps = _no_return_steps(b, RingLayout(tuple(data["rings"])), _point_from_json(data["candidate"]), 0,
                                 data["verify_steps"])
        if steps != data["verified_no_return_steps"]:
            return False, f"candidate survives {steps} steps, artifact claims {data['verified_no_return_steps']}"
        return True, f"candidate stays out for {steps} steps"
    raise ValueError(f"unknown artifact kind {kind!r}")


def _recheck(spec):
    with open(spec.options["artifact"], encoding="utf-8") as fh:
        data = json.load(fh)
    ok, msg = recheck_artifact(data)
    _dump(spec, {"ok": ok, "message": msg})
    return OK if ok else FAILED


HANDLERS = {
    "ring-build": _ring_build,
    "simulate": _simulate,
    "render": _render,
    "extract-iet": _extract,
    "scan-connections": _scan,
    "verify-coverage": _coverage,
    "cylinders": _cylinders,
    "continue-periodic": _continue,
    "escape-search": _escape,
    "recheck": _recheck,
}


def run(spec):
    """Dispatch ``spec``; returns the exit code."""
    try:
        return HANDLERS[spec.command](spec)
    except (ValueError, KeyError, OSError, RuntimeError) as e:
        click.echo(f"error: {e}", err=True)
        return ERROR


# -- click wiring ------------------------------------------------------------------

def _options(f):
    for opt in reversed([
        click.option("--config", type=click.Path(), default=None),
        click.option("--slope", default=None, help='"dx,dy" or a single slope'),
        click.option("--radicand", type=int, default=None),
        click.option("--N", "N", type=int, default=2, help="window (rhombus size)"),
        click.option("--bound", type=int, default=None),
        click.option("--seed", type=int, default=0),
        click.option("--out", type=click.Path(), default=None),
    ]):
        f = opt(f)
    return f


def _spec(name, kw, **extra):
    base = {k: kw.pop(k) for k in ("config", "slope", "radicand", "N", "bound", "seed", "out") if k in kw}
    base = {k: v for k, v in base.items() if v is not None}
    rings = kw.pop("rings", None)
    depth = kw.pop("depth", 3)
    extra.update({k: v for k, v in kw.items() if v is not None})
    return ExperimentSpec(name, rings=rings, depth=depth, options=extra, **base)


def _finish(name, kw, **extra):
    try:
        spec = _spec(name, kw, **extra)
    except ValueError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(ERROR)
    sys.exit(run(spec))


@click.group()
def main():
    """Exact wind-tree billiard experiments."""


@main.command("ring-build")
@_options
@click.option("--r", "r", default="1/4")
@click.option("--rings", default=None, help="comma separated ring sizes")
@click.option("--shrink", default=None)
@click.option("--outer", type=int, default=None)
def ring_build(**kw):
    _finish("ring-build", kw)


@main.command()
@_options
@click.option("--point", required=True, help="i,j,class,s")
def simulate(**kw):
    _finish("simulate", kw)


@main.command()
@_options
@click.option("--point", default=None)
@click.option("--steps", type=int, default=50)
@click.option("--cylinders", is_flag=True, default=False)
def render(**kw):
    _finish("render", kw)


@main.command("extract-iet")
@_options
def extract_cmd(**kw):
    _finish("extract-iet", kw)


@main.command("scan-connections")
@_options
@click.option("--cover-level", type=int, default=None)
def scan_cmd(**kw):
    _finish("scan-connections", kw)


@main.command("verify-coverage")
@_options
@click.option("--cover-level", type=int, default=1)
@click.option("--tree", is_flag=True, default=False, help="include full image trees")
def coverage_cmd(**kw):
    _finish("verify-coverage", kw)


@main.command()
@_options
def cylinders(**kw):
    _finish("cylinders", kw)


@main.command("continue-periodic")
@_options
@click.option("--from", "from_", required=True, type=click.Path())
@click.option("--to", "to", required=True, type=click.Path())
@click.option("--point", required=True)
def continue_cmd(**kw):
    extra = {"from": kw.pop("from_")}
    _finish("continue-periodic", kw, **extra)


@main.command("escape-search")
@_options
@click.option("--rings", default="2,4,6")
@click.option("--depth", type=int, default=3)
@click.option("--r", "r", default="3/8")
@click.option("--shrink", default="1/20")
@click.option("--outer", type=int, default=None)
@click.option("--verify-steps", type=int, default=10 ** 4)
def escape_cmd(**kw):
    _finish("escape-search", kw)


@main.command()
@click.argument("artifact", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
def recheck(**kw):
    _finish("recheck", kw)


if __name__ == "__main__":
    main()
