"""Command-line entry point: ``isingdroplet <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import harness
from .dynamics import run_graphical, run_kmc
from .geometry import (
    PlanarShape,
    read_polygon_csv,
    support_function_of,
    write_polygon_csv,
)
from .lattice import (
    FieldParameter,
    config_from_rle,
    droplet_of,
    droplet_pbm,
    droplet_rle,
    init_from_shape,
    parse_real,
)
from .limits import (
    evolve_flow,
    flow_shape,
    square_limit_shape,
    support_of_disk,
    weak_solution_shape,
)
from .particles import (
    OccupationField,
    ZeroRangeState,
    simulate_exclusion,
    simulate_zero_range,
)
from .rng import ClockField


def _floats(text: str) -> list[float]:
    return [parse_real(v) for v in text.split(",") if v.strip()] if text else []


def _write(path: Path, text: str) -> None:
    harness.atomic_write(path, text)


# --- simulate ----------------------------------------------------------------------

def cmd_simulate(args) -> int:
    shape = harness.initial_shape(args.shape, args.radius)
    config = init_from_shape(shape, args.L, args.boundary)
    params = FieldParameter(args.h, args.beta)
    times = _floats(args.sample_times)
    horizon = parse_real(args.horizon) if args.horizon is not None else (max(times) if times else math.inf)
    if args.engine == "kmc":
        traj = run_kmc(config, params, horizon, args.seed, times)
    else:
        traj = run_graphical(config, ClockField(args.seed), params, horizon, times)
    out = Path(args.out)
    snaps = []
    for k, (t, snap) in enumerate(zip(traj.sampled_times, traj.snapshots)):
        stem = f"snapshot_{k:03d}"
        _write(out / f"{stem}.json", json.dumps(droplet_rle(snap), separators=(",", ":")))
        _write(out / f"{stem}.pbm", droplet_pbm(snap))
        _write(out / f"{stem}.csv", write_polygon_csv(droplet_of(snap).rescaled_shape(args.L)))
        snaps.append({"t": t, "stem": stem, "minus_sites": len(droplet_of(snap))})
    meta = {
        "L": args.L, "h": harness.fmt(params.h), "beta": harness.fmt(params.beta),
        "seed": args.seed, "engine": traj.engine, "horizon": harness.fmt(horizon),
        "event_count": traj.event_count, "flips_to_plus": traj.flips_to_plus,
        "flips_to_minus": traj.flips_to_minus,
        "extinction_time": traj.extinction_time, "overflow_time": traj.overflow_time,
        "snapshots": snaps,
    }
    _write(out / "trajectory.json", json.dumps(harness._clean(meta), indent=2) + "\n")
    print(f"{traj.event_count} events, extinction time {traj.extinction_time}")
    return 0


# --- particles ---------------------------------------------------------------------

SYSTEM_FIELD = {"ssep": 0.0, "tasep": math.inf}


def _load_profile(args) -> np.ndarray:
    if args.profile == "step":
        n = args.size
        return np.r_[np.ones(n // 2, dtype=np.int64), np.zeros(n - n // 2, dtype=np.int64)]
    return np.array([int(v) for v in Path(args.profile).read_text().split()], dtype=np.int64)


def cmd_particles(args) -> int:
    out = Path(args.out)
    times = _floats(args.sample_times) or [args.horizon]
    clocks = ClockField(args.seed)
    values = _load_profile(args)
    start = -(len(values) // 2)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "site", "value"])
    if args.system == "zrp":
        z = ZeroRangeState(start, values)
        traj = simulate_zero_range(z, clocks, args.horizon, times, pile_rate=args.pile_rate)
        for t, s in zip(traj.sampled_times, traj.snapshots):
            for k, v in enumerate(s.signed.tolist()):
                w.writerow([harness.fmt(t), s.start + k, v])
        summary = {"system": "zrp", "events": traj.event_count, "annihilations": traj.annihilations,
                   "signed_mass": traj.final.signed_mass, "pile_rate": args.pile_rate}
    else:
        h = SYSTEM_FIELD.get(args.system, parse_real(args.h))
        boundary = "pad" if args.profile == "step" else "closed"
        occ = OccupationField(start, values, anchor=0 if start % 2 == 0 else 1, boundary=boundary)
        traj = simulate_exclusion(occ, FieldParameter(h), clocks, args.horizon, times)
        for t, s in zip(traj.sampled_times, traj.snapshots):
            for k, v in enumerate(s.values.tolist()):
                w.writerow([harness.fmt(t), s.start + k, v])
        summary = {"system": args.system, "h": harness.fmt(h), "events": traj.event_count,
                   "jumps_right": traj.jumps_right, "jumps_left": traj.jumps_left,
                   "particles": traj.final.particle_count}
    _write(out / "occupation.csv", buf.getvalue())
    _write(out / "summary.json", json.dumps(harness._clean(summary), indent=2) + "\n")
    print(json.dumps(harness._clean(summary)))
    return 0


# --- limit-shape -------------------------------------------------------------------

def _support_csv(theta, h) -> str:
    return "theta,h\n" + "".join(f"{harness.fmt(a)},{harness.fmt(b)}\n" for a, b in zip(theta, h))


def cmd_limit_shape(args) -> int:
    out = Path(args.out)
    times = _floats(args.t)
    shape0 = harness.initial_shape(args.shape, args.radius)
    N = args.angles
    h0 = support_function_of(shape0, N) if args.shape != "disk" else support_of_disk(args.radius, N)
    for k, t in enumerate(times):
        support = None
        if args.model == "square-explicit":
            shape = square_limit_shape(t)
        elif args.model == "drift":
            shape = weak_solution_shape(h0, t)
        else:
            alpha = 0.0 if args.model == "curve-shortening" else args.alpha
            res = evolve_flow(h0, alpha, t)
            if res.stop_time is not None:
                print(f"t={t}: flow stopped at {res.stop_time:.6g}", file=sys.stderr)
                shape = PlanarShape()
            else:
                shape = flow_shape(res)
            support = res.support
        _write(out / f"shape_{k:03d}.csv", write_polygon_csv(shape))
        if support is None and not shape.is_empty:
            support = support_function_of(shape, N)
        if support is not None:
            _write(out / f"support_{k:03d}.csv", _support_csv(support.angles, support.values))
        print(f"t={harness.fmt(t)} area={harness.fmt(shape.area)}")
    return 0


# --- compare / sweep ---------------------------------------------------------------

def _config(args) -> harness.ExperimentConfig:
    d = json.loads(Path(args.config).read_text())
    if args.seed is not None:
        d["seeds"] = [args.seed]
    if args.out is not None:
        d["out_dir"] = args.out
    return harness.ExperimentConfig.from_dict(d)


def cmd_compare(args) -> int:
    cfg = _config(args)
    res = harness.run_experiment(cfg)
    print(json.dumps(res["aggregates"], indent=2))
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    table = harness.convergence_sweep(cfg)
    text = table.to_csv()
    if cfg.out_dir:
        _write(Path(cfg.out_dir) / "sweep.csv", text)
    print(text, end="")
    print(f"hausdorff non-increasing: {table.hausdorff_nonincreasing}; "
          f"tau error non-increasing: {table.tau_nonincreasing}")
    return 0


# --- render ------------------------------------------------------------------------

def _load_shape(path: str) -> PlanarShape:
    if path.endswith(".json"):
        cfg = config_from_rle(json.loads(Path(path).read_text()))
        return droplet_of(cfg).rescaled_shape(cfg.half_width)
    return read_polygon_csv(path)


def cmd_render(args) -> int:
    layers = [_load_shape(args.input)]
    if args.limit_t is not None:
        limit = square_limit_shape(args.limit_t)
        if args.delta:
            layers = harness.overlay_layers(layers[0], limit, args.delta)
        else:
            layers.append(limit)
    harness.render_snapshot(layers, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isingdroplet", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the spin dynamics and write snapshots")
    s.add_argument("--shape", default="square", help="square, disk or a polygon CSV file")
    s.add_argument("--radius", type=float, default=0.5, help="disk radius")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--h", type=parse_real, default=math.inf)
    s.add_argument("--beta", type=parse_real, default=math.inf)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--sample-times", default="", help="comma-separated natural times")
    s.add_argument("--horizon", default=None)
    s.add_argument("--engine", choices=["graphical", "kmc"], default="kmc")
    s.add_argument("--boundary", choices=["all-plus", "mixed-corner"], default="all-plus")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("particles", help="exclusion or zero-range simulation")
    s.add_argument("--system", choices=["ssep", "asep", "tasep", "zrp"], required=True)
    s.add_argument("--profile", default="step", help="step or a file of whitespace-separated values")
    s.add_argument("--size", type=int, default=64)
    s.add_argument("--h", default="1")
    s.add_argument("--horizon", type=float, required=True)
    s.add_argument("--sample-times", default="")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--pile-rate", choices=["unit", "inverse"], default="unit")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_particles)

    s = sub.add_parser("limit-shape", help="deterministic limit shapes")
    s.add_argument("--model", choices=["curve-shortening", "drift", "square-explicit", "crossover"],
                   required=True)
    s.add_argument("--t", required=True, help="comma-separated rescaled times")
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--angles", type=int, default=4096)
    s.add_argument("--shape", default="square")
    s.add_argument("--radius", type=float, default=0.5)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_limit_shape)

    for name, func, text in (("compare", cmd_compare, "simulate and compare with the limit"),
                             ("sweep", cmd_sweep, "convergence sweep over L")):
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, help="JSON experiment config")
        s.add_argument("--seed", type=int, default=None, help="override the seed list")
        s.add_argument("--out", default=None)
        s.set_defaults(func=func)

    s = sub.add_parser("render", help="SVG of a droplet snapshot or polygon")
    s.add_argument("--input", required=True, help="RLE JSON snapshot or polygon CSV")
    s.add_argument("--limit-t", type=float, default=None, help="overlay the square limit shape")
    s.add_argument("--delta", type=float, default=0.0, help="draw +-delta bands around the limit")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
