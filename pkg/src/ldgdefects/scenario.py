"""Geometries, boundary data and predictions for the benchmark problems."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from . import qtensor as qt
from .errors import GeometryUnresolved, InvalidIndex, ResolutionTooCoarse
from .field import Domain, QField, StarRegion
from .potential import MaterialParams


@dataclass
class Scenario:
    name: str
    domain: Domain
    epsilon: float
    params: MaterialParams
    init: str = "radial"
    profile: Callable | None = None
    expected: dict = dc_field(default_factory=dict)
    geometry: dict = dc_field(default_factory=dict)

    def initial_field(self, seed: int = 0) -> QField:
        from .solver import initialize
        return initialize(self.domain, self.epsilon, self.init, params=self.params, seed=seed,
                          profile=self.profile)


def eta(rho, eps: float):
    """Linear cut-off: rho/eps below eps, 1 beyond."""
    return np.minimum(np.asarray(rho, dtype=float) / eps, 1.0)


def _check_eps(eps: float, h: float):
    if eps < 2.0 * h * (1 - 1e-12):
        raise ResolutionTooCoarse(f"eps={eps} needs h <= eps/2, got h={h}")


def _check_index(k: float):
    if k == 0 or abs(2 * k - round(2 * k)) > 1e-12:
        raise InvalidIndex(f"index must be a non-zero multiple of 1/2, got {k}")


def planar_director(angle):
    angle = np.asarray(angle, dtype=float)
    return np.stack([np.cos(angle), np.sin(angle), np.zeros_like(angle)], axis=-1)


def disclination_datum(k: float, eps: float, params: MaterialParams | None = None) -> Callable:
    """x -> eta_eps(rho) s*((e1 cos k theta + e2 sin k theta)^2 - Id/3).

    Uses the first two coordinates of x; rho and theta are their polar
    coordinates. The cut-off melts the datum inside rho < eps.
    """
    _check_index(k)
    s = (params or MaterialParams()).s_star

    def g(x):
        x = np.asarray(x, dtype=float)
        rho = np.hypot(x[..., 0], x[..., 1])
        th = np.arctan2(x[..., 1], x[..., 0])
        return eta(rho, eps)[..., None] * s * qt.outer_unit(planar_director(k * th))

    return g


def wobble_datum(amplitude: float, params: MaterialParams | None = None) -> Callable:
    """Topologically trivial planar datum: director angle amplitude * sin(theta)."""
    s = (params or MaterialParams()).s_star

    def g(x):
        th = np.arctan2(x[..., 1], x[..., 0])
        return s * qt.outer_unit(planar_director(amplitude * np.sin(th)))

    return g


def _disk(R):
    return lambda X: np.sum(X * X, axis=-1) < R * R


def disk_scenario(params: MaterialParams, eps: float, resolution: int, *, k: float = 0.5,
                  R: float = 1.0, trivial: bool = False) -> Scenario:
    """Disk of radius R with the planar index-k datum (or a trivial wobble)."""
    h = 2.0 * R / resolution
    _check_eps(eps, h)
    g = wobble_datum(0.5, params) if trivial else disclination_datum(k, eps, params)
    dom = Domain.from_indicator(_disk(R), (-R, -R), (R, R), h, g,
                                star_regions=[StarRegion((0.0, 0.0))],
                                name="disk_trivial" if trivial else "disk")
    exp = {} if trivial else {"kappa_slope": 4 * k * k * params.kappa_star, "defect_center": (0.0, 0.0)}
    return Scenario(dom.name, dom, eps, params, "radial", None, exp, {"R": R, "k": k})


def disclination_profile(params: MaterialParams, R: float, k: float, eps: float,
                         resolution: int) -> QField:
    """The cut-off profile eta_eps(|x|) g(x/|x|) sampled on a disk."""
    sc = disk_scenario(params, eps, resolution, k=k, R=R)
    g = disclination_datum(k, eps, params)
    return QField(sc.domain, np.where(sc.domain.interior[..., None], g(sc.domain.centers()), 0.0), eps)


def profile_energy_exact(params: MaterialParams, R: float, eps: float, nquad: int = 4000) -> float:
    """Energy of the index-1/2 cut-off profile by one-dimensional quadrature."""
    from .potential import bulk_f
    s = params.s_star
    far = params.kappa_star * np.log(R / eps)
    core_el = np.pi * (2.0 / 3.0 + 0.5) * s * s / 2.0
    t, w = np.polynomial.legendre.leggauss(nquad)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    P = qt.geodesic_P0(0.0, s)
    core_bulk = 2.0 * np.pi * np.sum(w * t * bulk_f(params, t[:, None] * P))
    return float(far + core_el + core_bulk)


def cylinder_scenario(params: MaterialParams, eps: float, resolution: int, *, k: float = 0.5,
                      R: float = 1.0, height: float = 1.2) -> Scenario:
    """Cylinder rho < R, |z| < height/2 with the cut-off index-k datum on all faces."""
    h = 2.0 * R / resolution
    _check_eps(eps, h)
    g = disclination_datum(k, eps, params)
    H2 = 0.5 * height

    def inside(X):
        return (X[..., 0] ** 2 + X[..., 1] ** 2 < R * R) & (np.abs(X[..., 2]) < H2)

    dom = Domain.from_indicator(inside, (-R, -R, -H2), (R, R, H2), h, g, name="cylinder")
    exp = {"line_axis": ((0.0, 0.0, -H2), (0.0, 0.0, H2)), "length": height, "loop_class": "NonTrivial"}
    return Scenario("cylinder", dom, eps, params, "profile", g, exp,
                    {"R": R, "height": height, "k": k})


def hedgehog_datum(params: MaterialParams, center=(0.0, 0.0, 0.0)) -> Callable:
    s = params.s_star
    c = np.asarray(center, dtype=float)

    def g(x):
        d = np.asarray(x, dtype=float) - c
        return s * qt.outer_unit(d / np.linalg.norm(d, axis=-1, keepdims=True))

    return g


def hedgehog_scenario(params: MaterialParams, eps: float, resolution: int) -> Scenario:
    """Unit ball with radial boundary director."""
    h = 2.0 / resolution
    _check_eps(eps, h)
    dom = Domain.from_indicator(_disk(1.0), (-1, -1, -1), (1, 1, 1), h, hedgehog_datum(params),
                                star_regions=[StarRegion((0.0, 0.0, 0.0))], name="hedgehog")
    exp = {"point": (0.0, 0.0, 0.0), "degree": 1}
    return Scenario("hedgehog", dom, eps, params, "radial", None, exp, {"R": 1.0})


# ------------------------------------------------------------------- torus

TORUS_MAJOR = 2.0


def torus_datum(params: MaterialParams) -> Callable:
    """(rho, z) -> s*((e1 cos(a/2) + e3 sin(a/2))^2 - Id/3), a the angle about (2, 0)."""
    s = params.s_star

    def g(x):
        x = np.asarray(x, dtype=float)
        a = np.arctan2(x[..., 1], x[..., 0] - TORUS_MAJOR)
        n = np.stack([np.cos(a / 2), np.zeros_like(a), np.sin(a / 2)], axis=-1)
        return s * qt.outer_unit(n)

    return g


def torus_scenario(params: MaterialParams, eps: float, resolution: int) -> Scenario:
    """Axisymmetric section of the solid torus (|x'| - 2)^2 + x3^2 < 1.

    The datum does not depend on the azimuth, so minimisers among
    azimuth-independent fields solve a weighted problem on the disk
    D = B_1((2, 0)) in the (rho, z) half-plane.
    """
    h = 2.0 / resolution
    _check_eps(eps, h)
    if resolution < 16:
        raise ResolutionTooCoarse("the torus section needs at least 16 cells across")
    g = torus_datum(params)

    def inside(X):
        return (X[..., 0] - TORUS_MAJOR) ** 2 + X[..., 1] ** 2 < 1.0

    dom = Domain.from_indicator(inside, (1.0, -1.0), (3.0, 1.0), h, g, axisymmetric=True,
                                star_regions=[StarRegion((TORUS_MAJOR, 0.0))], name="torus")
    exp = {"limit_point": (1.0, 0.0), "upper_slope": 2 * np.pi * params.kappa_star}
    return Scenario("torus", dom, eps, params, "radial", None, exp, {"R": TORUS_MAJOR, "a": 1.0})


def torus_full_domain(params: MaterialParams, resolution: int) -> Domain:
    """The three-dimensional torus voxelised at the same spacing as the section."""
    h = 2.0 / resolution
    g2 = torus_datum(params)

    def rz(X):
        return np.stack([np.hypot(X[..., 0], X[..., 1]), X[..., 2]], axis=-1)

    def inside(X):
        Y = rz(X)
        return (Y[..., 0] - TORUS_MAJOR) ** 2 + Y[..., 1] ** 2 < 1.0

    return Domain.from_indicator(inside, (-3, -3, -1), (3, 3, 1), h, lambda X: g2(rz(X)), name="torus3d")


def section_to_full(section: QField, full: Domain) -> QField:
    """Revolve an axisymmetric section about the z-axis (fixed frame)."""
    X = full.centers()
    pts = np.stack([np.hypot(X[..., 0], X[..., 1]), X[..., 2]], axis=-1)
    vals = np.zeros(full.shape + (5,))
    live = full.interior
    vals[live] = section.sample(pts[live])
    return QField(full, vals, section.epsilon)


# ---------------------------------------------------------------- dumbbell

def chi_right(theta):
    """Piecewise-linear director angle on the right sphere, flat near the neck."""
    th = np.mod(np.asarray(theta, dtype=float), 2 * np.pi)
    out = np.zeros_like(th)
    a = th <= 5 * np.pi / 6
    b = th >= 7 * np.pi / 6
    out[a] = np.pi / 2 - 0.6 * th[a]
    out[b] = 0.7 * np.pi - 0.6 * th[b]
    return out


def eta_poles(phi, eps: float):
    phi = np.asarray(phi, dtype=float)
    return np.clip(np.minimum(phi, np.pi - phi) / eps, 0.0, 1.0)


def xi_left(phit, r: float):
    """Polar profile on the left sphere: 0 near the neck, identity away from it."""
    phit = np.asarray(phit, dtype=float)
    a1, a2 = np.arcsin(r), np.arcsin(2 * r)
    mid = a2 * (phit - a1) / (a2 - a1)
    return np.where(phit <= a1, 0.0, np.where(phit < a2, mid, phit))


def dumbbell_datum(params: MaterialParams, L: float, r: float, eps: float) -> Callable:
    s = params.s_star
    pp = np.array([L + 1.0, 0.0, 0.0])
    pm = -pp

    def g(x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape[:-1] + (5,))
        rho = np.hypot(x[..., 1], x[..., 2])
        dp = np.linalg.norm(x - pp, axis=-1)
        dm = np.linalg.norm(x - pm, axis=-1)
        d_neck = np.where(np.abs(x[..., 0]) <= L + 1.0, np.abs(rho - r), np.inf)
        which = np.argmin(np.stack([np.abs(dm - 1.0), d_neck, np.abs(dp - 1.0)], axis=-1), axis=-1)
        # left sphere: polar angle from +e1, azimuth in the (x2, x3) plane
        m = which == 0
        if m.any():
            y = x[m] - pm
            ph = np.arccos(np.clip(y[:, 0] / np.linalg.norm(y, axis=1), -1, 1))
            th = np.arctan2(y[:, 2], y[:, 1])
            xi = xi_left(ph, r)
            n = np.stack([np.cos(xi), np.sin(xi) * np.cos(th), np.sin(xi) * np.sin(th)], axis=-1)
            out[m] = s * qt.outer_unit(n)
        m = which == 1
        out[m] = s * qt.outer_unit(np.array([1.0, 0.0, 0.0]))
        # right sphere: polar angle from +e3, azimuth in the (x1, x2) plane
        m = which == 2
        if m.any():
            y = x[m] - pp
            ph = np.arccos(np.clip(y[:, 2] / np.linalg.norm(y, axis=1), -1, 1))
            th = np.arctan2(y[:, 1], y[:, 0])
            n = planar_director(chi_right(th))
            out[m] = (eta_poles(ph, eps) * s)[:, None] * qt.outer_unit(n)
        return out

    return g


def dumbbell_scenario(params: MaterialParams, L: float = 6.0, r: float = 0.3, eps: float = 0.08,
                      resolution: int = 50) -> Scenario:
    """Two unit balls joined by a thin cylindrical neck.

    resolution counts cells across a ball diameter. The prediction: every
    line defect stays in the right half x1 >= 0 and a point defect of degree
    one sits in the left ball.
    """
    h = 2.0 / resolution
    _check_eps(eps, h)
    if r < 3 * h:
        raise GeometryUnresolved(f"neck radius {r} is resolved by fewer than 3 cells (h={h})")
    if not (0 < r < 0.5) or L <= 0:
        raise GeometryUnresolved("need 0 < r < 1/2 and L > 0")
    pp = np.array([L + 1.0, 0.0, 0.0])

    def inside(X):
        ball = (np.sum((X - pp) ** 2, axis=-1) < 1.0) | (np.sum((X + pp) ** 2, axis=-1) < 1.0)
        neck = (np.abs(X[..., 0]) <= L + 1.0) & (X[..., 1] ** 2 + X[..., 2] ** 2 < r * r)
        return ball | neck

    ext = L + 2.0
    regions = [(tuple(-pp), lambda X: np.sum((X + pp) ** 2, axis=-1) < 1.0),
               (tuple(pp), lambda X: np.sum((X - pp) ** 2, axis=-1) < 1.0)]
    dom = Domain.from_indicator(inside, (-ext, -1, -1), (ext, 1, 1), h, dumbbell_datum(params, L, r, eps),
                                star_regions=regions, name="dumbbell")
    exp = {"lines_in": "x1 >= 0", "point_in": f"x1 <= {-L / 2}", "point_degree": 1}
    return Scenario("dumbbell", dom, eps, params, "radial", None, exp, {"L": L, "r": r})
