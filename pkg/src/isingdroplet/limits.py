"""Deterministic scaling limits: anisotropic curve shortening, drift flow,
explicit corner-growth shapes, viscosity solutions and auxiliary PDEs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
import shapely.affinity
from scipy.fft import dst, idst
from scipy.integrate import quad
from scipy.optimize import brentq
from shapely.geometry import Polygon

from .geometry import (
    PlanarShape,
    SupportFunction,
    halfplane_intersection,
    shape_from_support,
)

__all__ = [
    "SupportFunction", "Profile1D", "FlowResult",
    "anisotropy_a", "anisotropy_integral", "drift_b", "normal_drift",
    "evolve_flow", "rost_profile_g", "square_limit_shape", "weak_solution_shape",
    "viscosity_solution", "inf_convolution", "asep_time", "heat_dirichlet", "heat_explicit",
    "wasep_pde", "pole_pde", "clipped_shape", "extinction_scale", "d_of_t",
    "support_of_square", "support_of_disk", "flow_shape", "mean_interface_drift_check",
]


# --- anisotropy and drift ---------------------------------------------------

def anisotropy_a(theta):
    """a(theta) = 1 / (2 (|cos| + |sin|)^2)."""
    th = np.asarray(theta, dtype=float)
    out = 0.5 / (np.abs(np.cos(th)) + np.abs(np.sin(th))) ** 2
    return out if out.ndim else float(out)


def anisotropy_integral() -> float:
    """Integral of a over one period, by adaptive quadrature on the smooth quarters."""
    quarter, _ = quad(lambda th: float(anisotropy_a(th)), 0.0, 0.5 * math.pi, epsabs=1e-14, epsrel=1e-14)
    return 4.0 * quarter


def drift_b(theta):
    """b(theta) = |sin 2 theta| (|cos| + |sin|) / (1 + |sin 2 theta|)."""
    th = np.asarray(theta, dtype=float)
    s2 = np.abs(np.sin(2.0 * th))
    out = s2 * (np.abs(np.cos(th)) + np.abs(np.sin(th))) / (1.0 + s2)
    return out if out.ndim else float(out)


def normal_drift(theta):
    """Inward normal speed of a facet with normal angle theta at h = inf.

    Half of ``drift_b``: with this speed a square droplet disappears at
    rescaled time 4, matching the corner-growth shape and the simulations.
    """
    return 0.5 * drift_b(theta)


def extinction_scale(h: float) -> float:
    """Time factor of the corner dynamics at field h (tanh h; 1 at h = inf)."""
    return 1.0 if math.isinf(h) else math.tanh(h)


def asep_time(t, h: float):
    """Rescale time so the h < inf corner growth matches the h = inf profile."""
    return np.asarray(t) * extinction_scale(h)


# --- support-function flow --------------------------------------------------

@dataclass
class FlowResult:
    support: SupportFunction
    t_reached: float
    stop_time: float | None
    steps: int
    times: np.ndarray = field(repr=False)
    areas: np.ndarray = field(repr=False)

    @property
    def completed(self) -> bool:
        return self.stop_time is None


def evolve_flow(h0: SupportFunction, alpha: float, t: float, dt: float | None = None,
                cfl: float = 0.25, eps: float | None = None, record_every: int = 1) -> FlowResult:
    """Explicit Euler for dh/dt = -a(theta) / (h + h'') - alpha * normal_drift(theta).

    The step is min(dt, cfl * dtheta^2 * min(rho^2 / a)) with rho = h + h''
    (the linearised diffusion coefficient is a / rho^2). Integration stops
    early, with ``stop_time`` recorded, once min rho <= eps: the shape has
    shrunk to a point or lost strict convexity.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    h = np.array(h0.values, dtype=float)
    N = len(h)
    theta = 2.0 * np.pi * np.arange(N) / N
    dth = 2.0 * np.pi / N
    a = anisotropy_a(theta)
    drift = alpha * normal_drift(theta)
    rho = h + (np.roll(h, -1) - 2.0 * h + np.roll(h, 1)) / dth**2
    if eps is None:
        eps = 1e-3 * float(rho.max())
    if alpha == 0 and rho.min() <= eps:
        raise ValueError("initial support function is not strictly convex")
    now, steps, stop = 0.0, 0, None
    times, areas = [0.0], [0.5 * float(np.sum(h * rho)) * dth]
    while now < t:
        rmin = float(rho.min())
        if rmin <= eps:
            stop = now
            break
        step = cfl * dth**2 * float(np.min(rho**2 / a))
        if dt is not None:
            step = min(step, dt)
        step = min(step, t - now)
        h = h - step * (a / rho + drift)
        now += step
        steps += 1
        rho = h + (np.roll(h, -1) - 2.0 * h + np.roll(h, 1)) / dth**2
        if steps % record_every == 0 or now >= t:
            times.append(now)
            areas.append(0.5 * float(np.sum(h * rho)) * dth)
    return FlowResult(SupportFunction(h), now, stop, steps, np.array(times), np.array(areas))


# --- h = inf explicit shapes ------------------------------------------------

def rost_profile_g(x, t):
    """(x^2 + t^2) / (2t) for |x| <= t, |x| otherwise; g(x, 0) = |x|."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    ax = np.abs(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = (x * x + t * t) / (2.0 * t)
    out = np.where(ax < t, inner, ax)
    return out if out.ndim else float(out)


F1 = np.array([0.5, -0.5])
F2 = np.array([0.5, 0.5])
FAR = 20.0


def _epigraph(profile, x_lo: float, x_hi: float, n: int) -> Polygon:
    """Polygon of {x f1 + y f2 : y >= profile(x)} over a wide x-range, closed far away."""
    xs = np.unique(np.r_[np.linspace(x_lo, x_hi, n), -FAR, FAR, np.linspace(-FAR, FAR, 9)])
    ys = profile(xs)
    top = 4.0 * FAR
    pts = np.outer(xs, F1) + np.outer(ys, F2)
    cap = np.array([FAR * F1 + top * F2, -FAR * F1 + top * F2])
    return Polygon(np.vstack([pts, cap]))


def _four_corners(d1: Polygon) -> PlanarShape:
    parts = [shapely.affinity.rotate(d1, 90 * k, origin=(0, 0)) for k in range(4)]
    return PlanarShape(shapely.intersection_all(parts))


def square_limit_shape(t: float, n: int = 4001) -> PlanarShape:
    """Intersection of the four rotated epigraphs of g(., t) - 2 (empty for t >= 4)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t >= 4.0:
        return PlanarShape()
    if t == 0:
        return PlanarShape(shapely.box(-1, -1, 1, 1))
    d1 = _epigraph(lambda x: rost_profile_g(x, t) - 2.0, -t, t, n)
    return _four_corners(d1)


def weak_solution_shape(h0: SupportFunction, t: float, drift=normal_drift) -> PlanarShape:
    """Intersection over the angle grid of {x . v(theta) <= h0(theta) - drift(theta) t}."""
    th = h0.angles
    offsets = h0.values - np.asarray(drift(th), dtype=float) * t
    return halfplane_intersection(np.c_[np.cos(th), np.sin(th)], offsets)


def d_of_t(t: float) -> float:
    return 2.0 * math.sqrt(t) - t


def clipped_shape(t: float, delta: float, n: int = 4001) -> tuple[PlanarShape, float, float]:
    """Shape built from the flattened profile g-bar; returns (shape, d(t), r(t))."""
    if not (1.0 <= t <= 4.0 * (1.0 - delta)) or delta <= 0:
        raise ValueError("need 1 <= t <= 4 (1 - delta) and delta > 0")
    d = d_of_t(t)
    if d < delta:
        raise ValueError("delta too large: d(t) < delta")
    c = d - delta
    gc = rost_profile_g(c, t)

    def gbar(x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= c, rost_profile_g(x, t) - 2.0, np.abs(x) - c + gc - 2.0)

    r = brentq(lambda x: float(gbar(x)) + x, 0.0, 4.0, xtol=1e-14)
    d1 = _epigraph(gbar, -c, c, n)
    return _four_corners(d1), d, r


# --- one-dimensional profiles -----------------------------------------------

@dataclass
class Profile1D:
    x: np.ndarray
    u: np.ndarray
    lipschitz: float = 1.0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.x.shape != self.u.shape or self.x.ndim != 1 or len(self.x) < 2:
            raise ValueError("x and u must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("grid must be strictly increasing")

    @classmethod
    def from_function(cls, func, x, lipschitz: float = 1.0) -> "Profile1D":
        x = np.asarray(x, dtype=float)
        return cls(x, np.asarray(func(x), dtype=float), lipschitz)

    @property
    def dx(self) -> np.ndarray:
        return np.diff(self.x)

    def slopes(self) -> np.ndarray:
        return np.diff(self.u) / self.dx

    def is_lipschitz(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(np.diff(self.u)) <= (self.lipschitz + tol) * self.dx))

    def __call__(self, y):
        """Piecewise-linear interpolation, continued linearly past the ends."""
        y = np.asarray(y, dtype=float)
        s = self.slopes()
        out = np.interp(y, self.x, self.u)
        out = np.where(y < self.x[0], self.u[0] + s[0] * (y - self.x[0]), out)
        out = np.where(y > self.x[-1], self.u[-1] + s[-1] * (y - self.x[-1]), out)
        return out


def inf_convolution(u0: Profile1D, x, t: float, chunk: int = 2_000_000) -> np.ndarray:
    """min over y of u0(y) + g(x - y, t) for piecewise-linear u0.

    On each linear piece of slope s the objective is convex in y with its
    unconstrained minimiser at y = x - s t, so clamping that point to the
    piece gives the exact minimum over the piece.
    """
    xq = np.atleast_1d(np.asarray(x, dtype=float))
    if t == 0:
        return u0(xq)
    y0, u = u0.x, u0.u
    s = u0.slopes()
    lo = np.r_[-np.inf, y0]
    hi = np.r_[y0, np.inf]
    slope = np.r_[s[0], s, s[-1]]
    base_y = np.r_[y0[0], y0]
    base_u = np.r_[u[0], u]
    out = np.empty(len(xq))
    rows = max(1, chunk // len(slope))
    for k in range(0, len(xq), rows):
        xs = xq[k:k + rows, None]
        yc = np.clip(xs - slope * t, lo, hi)
        val = base_u + slope * (yc - base_y) + rost_profile_g(xs - yc, t)
        out[k:k + rows] = val.min(axis=1)
    return out


def viscosity_solution(u0: Profile1D, x, t: float):
    """u(x, t) = inf_y { u0(y) + g(x - y, t) }; scalar in, scalar out."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    res = inf_convolution(u0, x, t)
    return float(res[0]) if np.ndim(x) == 0 else res


# --- heat equation ----------------------------------------------------------

def _uniform_step(x: np.ndarray) -> float:
    d = np.diff(x)
    if not np.allclose(d, d[0], rtol=1e-9, atol=0):
        raise ValueError("a uniform grid is required")
    return float(d[0])


HEAT_BOX = 2.0


def heat_dirichlet(v0: Profile1D, t: float, bc_tol: float = 1e-12) -> Profile1D:
    """dv/dt = v''/2 on [-2, 2] with zero Dirichlet data, by sine series.

    The grid values are expanded in sin(k pi (x + 2) / 4) with a type-I DST;
    each mode decays as exp(-(k pi / 4)^2 t / 2).
    """
    x = v0.x
    if abs(x[0] + HEAT_BOX) > 1e-12 or abs(x[-1] - HEAT_BOX) > 1e-12:
        raise ValueError("heat_dirichlet works on [-2, 2]")
    if abs(v0.u[0]) > bc_tol or abs(v0.u[-1]) > bc_tol:
        raise ValueError("boundary values must be zero")
    _uniform_step(x)
    M = len(x) - 1
    k = np.arange(1, M)
    coef = dst(v0.u[1:-1], type=1)
    lam = 0.5 * (k * np.pi / (2 * HEAT_BOX)) ** 2
    inner = idst(coef * np.exp(-lam * t), type=1)
    return Profile1D(x, np.r_[0.0, inner, 0.0], lipschitz=np.inf)


def heat_explicit(v0: Profile1D, t: float, dt: float | None = None) -> Profile1D:
    """Forward-Euler finite differences for the same problem (cross-check solver)."""
    dx = _uniform_step(v0.x)
    limit = dx * dx
    dt = 0.5 * limit if dt is None else dt
    if dt > limit:
        raise ValueError(f"dt={dt} violates the stability bound dx^2={limit}")
    v = v0.u.copy()
    v[0] = v[-1] = 0.0
    now = 0.0
    while now < t:
        step = min(dt, t - now)
        v[1:-1] += 0.5 * step / (dx * dx) * (v[2:] - 2.0 * v[1:-1] + v[:-2])
        now += step
    return Profile1D(v0.x, v, lipschitz=np.inf)


def mean_interface_drift_check(mean_heights: np.ndarray, times: np.ndarray) -> float:
    """Max deviation between d/dt E[eta] and half the discrete Laplacian of E[eta].

    ``mean_heights[k]`` is the averaged interface at ``times[k]`` (interior
    points only are compared); the time derivative uses central differences.
    """
    m = np.asarray(mean_heights, dtype=float)
    tt = np.asarray(times, dtype=float)
    dm = (m[2:] - m[:-2]) / (tt[2:] - tt[:-2])[:, None]
    lap = 0.5 * (m[1:-1, 2:] + m[1:-1, :-2] - 2.0 * m[1:-1, 1:-1])
    return float(np.max(np.abs(dm[:, 1:-1] - lap)))


# --- experimental nonlinear PDEs ---------------------------------------------

def _ghosted(u: np.ndarray) -> np.ndarray:
    # linear extrapolation past both ends
    return np.r_[2.0 * u[0] - u[1], u, 2.0 * u[-1] - u[-2]]


def _explicit(u0: Profile1D, t: float, dt: float | None, rhs, diffusion_bound: float) -> Profile1D:
    dx = _uniform_step(u0.x)
    limit = dx * dx / (2.0 * diffusion_bound)
    dt = 0.5 * limit if dt is None else dt
    if dt > limit:
        raise ValueError(f"dt={dt} violates the stability bound {limit:.3g}")
    u = u0.u.copy()
    now = 0.0
    while now < t:
        step = min(dt, t - now)
        g = _ghosted(u)
        ux = (g[2:] - g[:-2]) / (2.0 * dx)
        uxx = (g[2:] - 2.0 * g[1:-1] + g[:-2]) / (dx * dx)
        u = u + step * rhs(ux, uxx)
        now += step
    return Profile1D(u0.x, u, lipschitz=u0.lipschitz)


def wasep_pde(u0: Profile1D, t: float, dt: float | None = None) -> Profile1D:
    """du/dt = u''/2 + (1 - u')^2 / 2, explicit central differences."""
    return _explicit(u0, t, dt, lambda ux, uxx: 0.5 * uxx + 0.5 * (1.0 - ux) ** 2, 0.5)


def pole_pde(w0: Profile1D, t: float, dt: float | None = None) -> Profile1D:
    """dw/dt = w'' / (1 + w'^2), explicit central differences."""
    return _explicit(w0, t, dt, lambda wx, wxx: wxx / (1.0 + wx * wx), 1.0)


def support_of_square(N: int) -> SupportFunction:
    th = 2.0 * np.pi * np.arange(N) / N
    return SupportFunction(np.abs(np.cos(th)) + np.abs(np.sin(th)))


def support_of_disk(radius: float, N: int, center=(0.0, 0.0)) -> SupportFunction:
    th = 2.0 * np.pi * np.arange(N) / N
    return SupportFunction(radius + center[0] * np.cos(th) + center[1] * np.sin(th))


def flow_shape(result: FlowResult) -> PlanarShape:
    return shape_from_support(result.support)
