"""Experiment orchestration: replicas, aggregation, sweeps and SVG rendering."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import run_graphical, run_kmc
from .geometry import (
    PlanarShape,
    area_of,
    disk_shape,
    hausdorff_distance,
    offset_shape,
    read_polygon_csv,
    support_function_of,
)
from .lattice import DropletSet, FieldParameter, droplet_of, init_from_shape, parse_real, square_shape
from .limits import (
    evolve_flow,
    extinction_scale,
    flow_shape,
    square_limit_shape,
    support_of_disk,
    weak_solution_shape,
)
from .rng import ClockField

SCHEMA_VERSION = 1
FLOAT_FMT = ".10g"


def fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, FLOAT_FMT)


def _clean(obj):
    """Pin float formatting so JSON output is byte-stable."""
    if isinstance(obj, float):
        s = fmt(obj)
        return s if s in ("nan", "inf", "-inf") else float(s)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- configuration ------------------------------------------------------------

@dataclass
class ExperimentConfig:
    shape: str = "square"
    L: list[int] = field(default_factory=lambda: [64])
    h: float = math.inf
    beta: float = math.inf
    seeds: list[int] = field(default_factory=lambda: [1])
    sample_times: list[float] = field(default_factory=list)
    engine: str = "kmc"
    targets: list[str] = field(default_factory=lambda: ["hausdorff", "tau_plus"])
    out_dir: str | None = None
    horizon: float = math.inf
    workers: int = 1
    disk_radius: float = 0.5

    def __post_init__(self):
        self.h = parse_real(self.h)
        self.beta = parse_real(self.beta)
        self.horizon = parse_real(self.horizon)
        self.L = [int(v) for v in self.L]
        self.seeds = [int(s) for s in self.seeds]
        self.sample_times = [float(t) for t in self.sample_times]
        if not self.L or any(v < 1 for v in self.L):
            raise ValueError("L list must be nonempty and positive")
        if not self.seeds:
            raise ValueError("seed list must be nonempty")
        if any(t < 0 for t in self.sample_times) or self.sample_times != sorted(self.sample_times):
            raise ValueError("sample times must be nonnegative and increasing")
        if self.engine not in ("kmc", "graphical"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.engine == "kmc" and not math.isinf(self.beta):
            raise ValueError("the kmc engine requires beta = inf")
        FieldParameter(self.h, self.beta)
        unknown = set(self.targets) - {"hausdorff", "tau_plus"}
        if unknown:
            raise ValueError(f"unknown targets {sorted(unknown)}")
        if self.sample_times and self.horizon < max(self.sample_times):
            raise ValueError("horizon must cover the sample times")

    @property
    def diffusive(self) -> bool:
        """h = 0 runs on time scale L^2, h > 0 on time scale L."""
        return self.h == 0.0

    def time_scale(self, L: int) -> float:
        return float(L) ** 2 if self.diffusive else float(L)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("h", "beta", "horizon"):
            d[k] = fmt(d[k]) if math.isinf(d[k]) else d[k]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config fields {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def initial_shape(spec: str, disk_radius: float = 0.5) -> PlanarShape:
    if spec == "square":
        return square_shape()
    if spec == "disk":
        return disk_shape(disk_radius)
    return read_polygon_csv(spec)


def limit_shape_at(cfg: ExperimentConfig, t: float, n_angles: int = 1024) -> PlanarShape | None:
    """Deterministic limit of the rescaled droplet at rescaled time t, when known."""
    if cfg.h > 0:
        t_eff = t * extinction_scale(cfg.h)
        if cfg.shape == "square":
            return square_limit_shape(t_eff)
        h0 = support_function_of(initial_shape(cfg.shape, cfg.disk_radius), 4096)
        return weak_solution_shape(h0, t_eff)
    if cfg.shape == "disk":
        res = evolve_flow(support_of_disk(cfg.disk_radius, n_angles // 4), 0.0, t)
        return PlanarShape() if res.stop_time is not None else flow_shape(res)
    return None


def tau_limit(cfg: ExperimentConfig) -> float | None:
    """Limit of tau / scale: Area / 2 at h = 0, the emptying time of the drift flow at h > 0."""
    shape = initial_shape(cfg.shape, cfg.disk_radius)
    if cfg.h == 0:
        return area_of(shape) / 2.0
    if cfg.shape == "square":
        return 4.0 / extinction_scale(cfg.h)
    return None


# --- replicas -----------------------------------------------------------------

def run_replica(cfg: ExperimentConfig, L: int, seed: int) -> dict:
    scale = cfg.time_scale(L)
    config = init_from_shape(initial_shape(cfg.shape, cfg.disk_radius), L, "all-plus")
    params = FieldParameter(cfg.h, cfg.beta)
    want_tau = "tau_plus" in cfg.targets
    times = [t * scale for t in cfg.sample_times]
    horizon = cfg.horizon * scale if want_tau else (times[-1] if times else 0.0)
    start = time.perf_counter()
    if cfg.engine == "kmc":
        traj = run_kmc(config, params, horizon, seed, times)
    else:
        traj = run_graphical(config, ClockField(seed), params, horizon, times)
    wall = time.perf_counter() - start
    rows = []
    for t, snap in zip(cfg.sample_times, traj.snapshots):
        hd = math.nan
        if "hausdorff" in cfg.targets:
            target = limit_shape_at(cfg, t)
            if target is not None:
                hd = hausdorff_distance(droplet_of(snap).rescaled_shape(L), target)
        rows.append({"t": t, "hausdorff": hd})
    tau = traj.extinction_time / scale if traj.extinction_time is not None else math.nan
    return {
        "L": L,
        "seed": seed,
        "engine": cfg.engine,
        "events": traj.event_count,
        "wall_time": wall,
        "tau_plus": tau if want_tau else math.nan,
        "censored": bool(want_tau and traj.extinction_time is None),
        "overflow": traj.overflow_time is not None,
        "rows": rows,
    }


def _replica_job(args):
    cfg_dict, L, seed = args
    return run_replica(ExperimentConfig.from_dict(cfg_dict), L, seed)


def _mean_se(values) -> tuple[float, float, int]:
    v = np.asarray([x for x in values if np.isfinite(x)], dtype=float)
    if v.size == 0:
        return math.nan, math.nan, 0
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return float(v.mean()), se, int(v.size)


def aggregate(cfg: ExperimentConfig, replicas: list[dict]) -> dict:
    limit = tau_limit(cfg)
    per_L = {}
    for L in cfg.L:
        reps = [r for r in replicas if r["L"] == L]
        tau_vals = [r["tau_plus"] for r in reps if not r["censored"]]
        if cfg.diffusive:
            area = area_of(initial_shape(cfg.shape, cfg.disk_radius))
            ratio_vals = [v / area for v in tau_vals]
            ratio_limit = 0.5
        else:
            ratio_vals = tau_vals
            ratio_limit = limit
        m, se, n = _mean_se(ratio_vals)
        entry = {
            "replicas": len(reps),
            "censored": sum(r["censored"] for r in reps),
            "overflow": sum(r["overflow"] for r in reps),
            "tau_ratio_mean": m,
            "tau_ratio_se": se,
            "tau_ratio_limit": ratio_limit,
            "tau_error": abs(m - ratio_limit) if ratio_limit is not None and n else math.nan,
            "hausdorff": {},
        }
        for t in cfg.sample_times:
            vals = [row["hausdorff"] for r in reps for row in r["rows"] if row["t"] == t]
            hm, hse, _ = _mean_se(vals)
            finite = [v for v in vals if not math.isnan(v)]
            entry["hausdorff"][fmt(t)] = {"mean": hm, "se": hse, "max": max(finite) if finite else math.nan}
        per_L[str(L)] = entry
    return per_L


def replicas_csv(replicas: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["L", "seed", "t", "hausdorff", "tau_plus", "censored"])
    for r in replicas:
        rows = r["rows"] or [{"t": math.nan, "hausdorff": math.nan}]
        for row in rows:
            w.writerow([r["L"], r["seed"], fmt(row["t"]), fmt(row["hausdorff"]),
                        fmt(r["tau_plus"]), int(r["censored"])])
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Simulate every (L, seed), compare with the limit, aggregate and persist.

    ``results.json`` and ``replicas.csv`` depend only on the configuration;
    wall times go to ``timings.csv`` so the first two are byte-reproducible.
    """
    jobs = [(cfg.to_dict(), L, s) for L in cfg.L for s in cfg.seeds]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            replicas = list(pool.map(_replica_job, jobs))
    else:
        replicas = [_replica_job(j) for j in jobs]
    result = {
        "schema_version": SCHEMA_VERSION,
        # where and how parallel the run went does not change the numbers
        "config": {k: v for k, v in cfg.to_dict().items() if k not in ("out_dir", "workers")},
        "aggregates": aggregate(cfg, replicas),
        "replicas": [
            {k: r[k] for k in ("L", "seed", "engine", "events", "tau_plus", "censored", "overflow")}
            for r in replicas
        ],
    }
    result = _clean(result)
    out_dir = out_dir or cfg.out_dir
    if out_dir:
        out = Path(out_dir)
        atomic_write(out / "results.json", json.dumps(result, indent=2, sort_keys=True) + "\n")
        atomic_write(out / "replicas.csv", replicas_csv(replicas))
        timing = "L,seed,engine,wall_time,event_count\n" + "".join(
            f"{r['L']},{r['seed']},{r['engine']},{r['wall_time']:.4f},{r['events']}\n" for r in replicas)
        atomic_write(out / "timings.csv", timing)
    result["_replicas_full"] = replicas
    return result


def load_results(path) -> dict:
    data = json.loads(Path(path).read_text())
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported results schema version {version!r}")
    return data


@dataclass
class SweepRow:
    L: int
    hausdorff_mean: float
    hausdorff_se: float
    tau_error: float
    tau_se: float


@dataclass
class SweepTable:
    rows: list[SweepRow]
    hausdorff_nonincreasing: bool
    tau_nonincreasing: bool

    def to_csv(self) -> str:
        lines = ["L,hausdorff_mean,hausdorff_se,tau_error,tau_se"]
        for r in self.rows:
            lines.append(",".join([str(r.L), fmt(r.hausdorff_mean), fmt(r.hausdorff_se),
                                   fmt(r.tau_error), fmt(r.tau_se)]))
        return "\n".join(lines) + "\n"


def _nonincreasing(vals, ses) -> bool:
    ok = True
    for (a, sa), (b, sb) in zip(zip(vals, ses), zip(vals[1:], ses[1:])):
        if math.isnan(a) or math.isnan(b):
            continue
        tol = math.hypot(sa if not math.isnan(sa) else 0.0, sb if not math.isnan(sb) else 0.0)
        ok &= b <= a + tol
    return bool(ok)


def convergence_sweep(cfg: ExperimentConfig, result: dict | None = None) -> SweepTable:
    """Per-L mean Hausdorff error (sup over sampled times) and tau error.

    Errors count as non-increasing when each one exceeds its predecessor by
    at most one combined standard error.
    """
    if len(set(cfg.L)) < 2:
        raise ValueError("a sweep needs at least two values of L")
    cfg.L = sorted(set(cfg.L))
    result = result or run_experiment(cfg)
    reps = result["_replicas_full"]
    # recompute from the raw replicas: the stored aggregates carry "nan" strings
    aggregates = aggregate(cfg, reps)
    rows = []
    for L in cfg.L:
        sup_h = [max((row["hausdorff"] for row in r["rows"]), default=math.nan)
                 for r in reps if r["L"] == L]
        hm, hse, _ = _mean_se(sup_h)
        agg = aggregates[str(L)]
        rows.append(SweepRow(L, hm, hse, agg["tau_error"], agg["tau_ratio_se"]))
    return SweepTable(
        rows,
        _nonincreasing([r.hausdorff_mean for r in rows], [r.hausdorff_se for r in rows]),
        _nonincreasing([r.tau_error for r in rows], [r.tau_se for r in rows]),
    )


# --- rendering ------------------------------------------------------------------

CANVAS = 600
VIEW = 1.2
DEFAULT_STYLES = [
    {"fill": "#4a6fa5", "stroke": "#1d3557", "opacity": 0.6},
    {"fill": "none", "stroke": "#d62828", "opacity": 1.0},
    {"fill": "none", "stroke": "#2a9d8f", "opacity": 1.0},
    {"fill": "none", "stroke": "#2a9d8f", "opacity": 1.0},
]


def _to_canvas(xy: np.ndarray) -> np.ndarray:
    s = CANVAS / (2 * VIEW)
    return np.c_[(xy[:, 0] + VIEW) * s, (VIEW - xy[:, 1]) * s]


def _canonical_ring(coords: np.ndarray, ccw: bool) -> np.ndarray:
    # fixed orientation, starting at the lowest-leftmost vertex
    pts = coords[:-1]
    area2 = np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
    if (area2 > 0) != ccw:
        pts = pts[::-1]
    k = np.lexsort((pts[:, 0], pts[:, 1]))[0]
    return np.roll(pts, -k, axis=0)


def _svg_path(shape: PlanarShape) -> str:
    cmds = []
    for part in shape.parts:
        rings = [(part.exterior, True)] + [(r, False) for r in part.interiors]
        for ring, ccw in rings:
            pts = _to_canvas(_canonical_ring(np.asarray(ring.coords), ccw))
            cmds.append("M" + " L".join(f"{x:.3f},{y:.3f}" for x, y in pts) + " Z")
    return " ".join(cmds)


def render_snapshot(layers, path=None, styles=None, title: str | None = None) -> str:
    """Deterministic SVG of shapes on the fixed window [-1.2, 1.2]^2.

    ``layers`` is a shape, a droplet, or a list of them drawn in order (for
    example droplet, limit shape, inner and outer offsets). A droplet is
    rescaled by its half-width. Empty input draws an empty-marker label.
    """
    if not isinstance(layers, (list, tuple)):
        layers = [layers]
    styles = styles or DEFAULT_STYLES
    shapes = []
    for item in layers:
        if isinstance(item, DropletSet):
            item = item.rescaled_shape()
        shapes.append(item if item is not None else PlanarShape())
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" '
        f'viewBox="0 0 {CANVAS} {CANVAS}">',
        f'<rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="white"/>',
    ]
    if title:
        out.append(f'<title>{title}</title>')
    for k, shape in enumerate(shapes):
        st = styles[k % len(styles)]
        if shape.is_empty:
            continue
        out.append(f'<path class="layer{k}" d="{_svg_path(shape)}" fill="{st["fill"]}" '
                   f'stroke="{st["stroke"]}" stroke-width="1" fill-opacity="{st["opacity"]}" '
                   f'fill-rule="evenodd"/>')
    if all(s.is_empty for s in shapes):
        out.append(f'<text class="empty-marker" x="{CANVAS // 2}" y="{CANVAS // 2}" '
                   f'text-anchor="middle">empty</text>')
    out.append("</svg>")
    svg = "\n".join(out) + "\n"
    if path is not None:
        atomic_write(path, svg)
    return svg


def overlay_layers(droplet_shape: PlanarShape, limit: PlanarShape, delta: float) -> list[PlanarShape]:
    """Droplet, limit shape and its inner/outer delta bands, in drawing order."""
    return [droplet_shape, limit, offset_shape(limit, -delta), offset_shape(limit, delta)]


# --- corner growth ----------------------------------------------------------------

@dataclass
class CornerGrowth:
    """Interface of the quadrant droplet relative to its initial corner.

    ``heights[k][m]`` is eta(xs[m], times[k]) - eta(xs[m], 0) + |xs[m]| in
    lattice units, so at time 0 it is |x|.
    """

    L: int
    h: float
    times: list[float]
    xs: np.ndarray
    heights: list[np.ndarray]
    overflow: bool
    events: int

    def rescaled(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return self.xs / self.L, self.heights[k] / self.L

    def corner_speed(self, k: int) -> float:
        """eta(0, t) / t in natural units."""
        mid = int(np.flatnonzero(self.xs == 0)[0])
        return float(self.heights[k][mid]) / (self.times[k] * self.L)


def corner_window(T: float) -> tuple[int, int]:
    """Half-width and corner position fitting a front of reach T plus a few sigma."""
    W = int(math.ceil(T / 2 + 3 * math.sqrt(T) + 40))
    return W, W - 20


def corner_growth_run(L: int, times, h: float = math.inf, seed: int = 1) -> CornerGrowth:
    """Quadrant initial condition, minus on {i < c, j < c}; rescaled times t * L."""
    from .lattice import quadrant_configuration
    from .particles import height_from_config

    times = [float(t) for t in times]
    T = max(times) * L
    W, c = corner_window(T)
    config = quadrant_configuration(W, corner=c)
    traj = run_kmc(config, FieldParameter(h), T, seed, [t * L for t in times])
    # columns x in frame coordinates relative to the corner (corner column is x = 0)
    reach = int(min(2 * T, 2 * W - 50))
    xs = np.arange(-reach, reach + 1)
    base = height_from_config(config, -reach, reach).values
    heights = [height_from_config(s, -reach, reach).values - base + np.abs(xs) for s in traj.snapshots]
    return CornerGrowth(L, h, times, xs, heights, traj.overflow_time is not None, traj.event_count)
