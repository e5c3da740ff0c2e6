"""Numerical checks of identities and estimates satisfied by critical points.

Every check returns a CheckReport; tolerances live in TOLERANCES.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from . import io
from .errors import BallTooSmall, SweepTooShort
from .field import INTERIOR, QField, _check_ball, _evaluate, central_gradient, energy_in_ball
from .potential import MaterialParams, bulk_f

TOLERANCES = {
    "el_factor": 10.0,          # residual <= el_factor * grad_tol * (1 + eps^-2)
    "pohozaev_rel": 0.05,
    "pohozaev_min_cells": 6,
    "monotone_slack": 0.03,     # E(r')/r' >= (1 - slack) E(r)/r for r' > r
    "star_slack": 1.1,
    "stress_per_h_over_eps": 1.0,   # normalised residual <= this * h / eps
    "stress_refine_slack": 1.2,     # fine <= slack * (h_f / h_c) * coarse
    "stress_fields": 20,
    "kappa_rel": 0.10,
    "kappa_min_points": 3,
}

REPORT_COLUMNS = ("check", "residual", "tolerance", "pass", "eps", "h", "region")


@dataclass
class CheckReport:
    name: str
    residuals: list
    tolerance: float
    passed: bool
    metadata: dict = dc_field(default_factory=dict)

    @property
    def residual(self) -> float:
        return float(max(self.residuals)) if len(self.residuals) else 0.0

    def row(self):
        m = self.metadata
        return (self.name, self.residual, self.tolerance, self.passed, m.get("eps", ""),
                m.get("h", ""), m.get("region", ""))

    def summary(self) -> str:
        return f"{self.name}: residual={self.residual:.4g} tol={self.tolerance:.4g} {'PASS' if self.passed else 'FAIL'}"


def write_reports(path, reports: Sequence[CheckReport], meta=None):
    return io.write_csv(path, REPORT_COLUMNS, [r.row() for r in reports], meta)


def _meta(field: QField, **kw):
    return {"eps": field.epsilon, "h": field.domain.h, **kw}


# -------------------------------------------------------------- residual

def check_el_residual(field: QField, params: MaterialParams, grad_tol: float) -> CheckReport:
    """Sup-norm of -L_h Q + eps^-2 Df(Q) over interior cells."""
    r = _evaluate(field, params)[0]
    res = float(np.max(np.linalg.norm(r, axis=1)))
    tol = TOLERANCES["el_factor"] * grad_tol * (1 + field.epsilon ** -2)
    return CheckReport("el_residual", [res], tol, res <= tol, _meta(field, region="interior"))


# ------------------------------------------------------------ quadrature

def _sphere_quadrature(center, radius, dim, n=48):
    """Nodes, outward normals and weights for the circle or sphere."""
    c = np.asarray(center, float)
    if dim == 2:
        t = 2 * np.pi * (np.arange(4 * n) + 0.5) / (4 * n)
        nu = np.stack([np.cos(t), np.sin(t)], axis=1)
        w = np.full(len(t), 2 * np.pi * radius / len(t))
    else:
        x, wx = np.polynomial.legendre.leggauss(n)
        az = 2 * np.pi * np.arange(2 * n) / (2 * n)
        X, A = np.meshgrid(x, az, indexing="ij")
        s = np.sqrt(1 - X ** 2)
        nu = np.stack([s * np.cos(A), s * np.sin(A), X], axis=-1).reshape(-1, 3)
        w = (np.outer(wx, np.full(2 * n, 2 * np.pi / (2 * n))) * radius ** 2).reshape(-1)
    return c + radius * nu, nu, w


def _interp(field: QField, arr: np.ndarray, pts: np.ndarray) -> np.ndarray:
    from scipy import ndimage
    coords = ((pts - field.domain.origin) / field.domain.h).T
    flat = arr.reshape(field.domain.shape + (-1,))
    return np.stack([ndimage.map_coordinates(flat[..., j], coords, order=1, mode="nearest")
                     for j in range(flat.shape[-1])], axis=-1)


def _ball_fractions(field: QField, center, radius, sub=4) -> np.ndarray:
    """Volume fraction of every cell inside the ball (sub^d subsamples on cut cells)."""
    d = field.domain
    X = d.centers()
    dist = np.linalg.norm(X - np.asarray(center, float), axis=-1)
    frac = (dist <= radius).astype(float)
    half = 0.5 * d.h * math.sqrt(d.dim)
    cut = np.abs(dist - radius) < half
    offs = (np.arange(sub) + 0.5) / sub - 0.5
    grid = np.stack(np.meshgrid(*([offs] * d.dim), indexing="ij"), axis=-1).reshape(-1, d.dim) * d.h
    pts = X[cut][:, None, :] + grid[None]
    frac[cut] = np.mean(np.linalg.norm(pts - center, axis=-1) <= radius, axis=1)
    return frac


def surface_terms(field: QField, params: MaterialParams, center, radius, n=48):
    """Sphere integrals of e, |d_nu Q|^2 and the tangential energy density."""
    dim = field.domain.dim
    pts, nu, w = _sphere_quadrature(center, radius, dim, n)
    grad = central_gradient(field)
    G = _interp(field, grad, pts).reshape(len(pts), dim, 5)
    Q = field.sample(pts)
    f = bulk_f(params, Q) / field.epsilon ** 2
    dn = np.einsum("pk,pkl->pl", nu, G)
    g2 = np.sum(G * G, axis=(1, 2))
    dn2 = np.sum(dn * dn, axis=1)
    e = 0.5 * g2 + f
    e_tan = 0.5 * (g2 - dn2) + f
    return float(np.sum(w * e)), float(np.sum(w * dn2)), float(np.sum(w * e_tan))


# -------------------------------------------------------------- identities

def check_pohozaev(field: QField, params: MaterialParams, center, radius: float) -> CheckReport:
    """Energy identity on a ball B_r(x0) obtained from the stress tensor with X = x - x0:

        int_B ((d-2)/2 |grad Q|^2 + d eps^-2 f) + r int_S |d_nu Q|^2 = r int_S e.
    """
    d = field.domain
    if radius < TOLERANCES["pohozaev_min_cells"] * d.h:
        raise BallTooSmall(f"radius {radius} is below {TOLERANCES['pohozaev_min_cells']} cells")
    _check_ball(d, center, radius)
    _, el, bk = _evaluate(field, params)
    frac = _ball_fractions(field, center, radius).reshape(-1)[d.stencil.idx]
    vol = float(np.sum(frac * ((d.dim - 2) * el + d.dim * bk))) * d.cell_volume
    S_e, S_n, _ = surface_terms(field, params, center, radius)
    lhs = vol + radius * S_n
    rhs = radius * S_e
    res = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
    tol = TOLERANCES["pohozaev_rel"]
    return CheckReport("pohozaev", [res], tol, res <= tol,
                       _meta(field, region=f"ball{_tup(center)}r{io.fmt(float(radius))}", lhs=lhs, rhs=rhs))


def check_monotonicity(field: QField, params: MaterialParams, center, radii: Sequence[float]) -> CheckReport:
    """E(B_r)/r^(d-2) should not decrease in r (allowing a relative slack per step)."""
    radii = sorted(radii)
    p = field.domain.dim - 2
    vals = [energy_in_ball(field, params, center, r) / r ** p for r in radii]
    drops = [max(0.0, 1.0 - vals[i + 1] / vals[i]) for i in range(len(vals) - 1)]
    tol = TOLERANCES["monotone_slack"]
    return CheckReport("monotonicity", drops, tol, all(x <= tol for x in drops),
                       _meta(field, region=f"radii{_tup(radii)}", values=vals))


def check_star_bound(field: QField, params: MaterialParams, center, radius: float) -> CheckReport:
    """E(B) <= 3 diam(B) E(dB), E(dB) the energy of the restriction to the sphere."""
    E_in = energy_in_ball(field, params, center, radius)
    _, _, E_surf = surface_terms(field, params, center, radius)
    bound = 3.0 * (2.0 * radius) * E_surf
    ratio = E_in / bound if bound > 0 else math.inf
    tol = TOLERANCES["star_slack"]
    return CheckReport("star_bound", [ratio], tol, ratio <= tol,
                       _meta(field, region=f"ball{_tup(center)}r{io.fmt(float(radius))}", E=E_in, E_surface=E_surf))


def _test_fields(lo, hi, rng, count):
    """Random smooth vector fields vanishing to second order on the box boundary."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    L = hi - lo
    dim = len(lo)
    out = []
    for _ in range(count):
        a = rng.normal(size=dim)
        c = rng.normal(size=(dim, dim))
        ph = rng.uniform(0, 2 * np.pi, size=(dim, dim))
        out.append((a, c, ph))

    def make(a, c, ph):
        def X_and_grad(x):
            y = (x - lo) / L
            s = np.sin(np.pi * y)
            bump = np.prod(s ** 2, axis=-1)
            dbump = np.stack([2 * np.pi / L[k] * s[..., k] * np.cos(np.pi * y[..., k])
                              * np.prod(np.delete(s, k, axis=-1) ** 2, axis=-1) for k in range(dim)], axis=-1)
            arg = 2 * np.pi * y[..., None, :] + ph           # (..., i, k)
            amp = a + np.sum(c * np.sin(arg), axis=-1)      # (..., i)
            damp = c * np.cos(arg) * (2 * np.pi / L)         # (..., i, k)
            X = bump[..., None] * amp
            DX = dbump[..., None, :] * amp[..., :, None] + bump[..., None, None] * damp
            return X, DX                                     # DX[..., i, j] = d_j X_i
        return X_and_grad

    return [make(*p) for p in out]


def _tup(xs) -> str:
    return "(" + " ".join(io.fmt(float(x)) for x in np.ravel(xs)) + ")"


def stress_residual(field: QField, params: MaterialParams, lo, hi, count: int, seed: int = 0):
    """Normalised |int T : grad X| / (|grad X|_inf E(box)) for random test fields."""
    d = field.domain
    X = d.centers()
    inbox = np.all((X >= np.asarray(lo)) & (X <= np.asarray(hi)), axis=-1)
    if np.any(inbox & (d.cell_class != INTERIOR)):
        raise ValueError("the test box must consist of interior cells")
    grad = central_gradient(field)[inbox]                    # (m, dim, 5)
    Q = field.values[inbox]
    e = 0.5 * np.sum(grad * grad, axis=(1, 2)) + bulk_f(params, Q) / field.epsilon ** 2
    GG = np.einsum("mil,mjl->mij", grad, grad)
    E_box = float(np.sum(e)) * d.cell_volume
    rng = np.random.default_rng(seed)
    res = []
    for fX in _test_fields(lo, hi, rng, count):
        _, DX = fX(X[inbox])
        div = np.trace(DX, axis1=1, axis2=2)
        integrand = e * div - np.einsum("mij,mij->m", GG, DX)
        val = float(np.sum(integrand)) * d.cell_volume
        scale = float(np.max(np.linalg.norm(DX, axis=(1, 2), ord=2))) * E_box
        res.append(abs(val) / scale)
    return res


def check_stress_energy(field: QField, params: MaterialParams, lo, hi, seed: int = 0) -> CheckReport:
    res = stress_residual(field, params, lo, hi, TOLERANCES["stress_fields"], seed)
    tol = TOLERANCES["stress_per_h_over_eps"] * field.domain.h / field.epsilon
    return CheckReport("stress_energy", res, tol, max(res) <= tol,
                       _meta(field, region=f"box{_tup(lo)}-{_tup(hi)}"))


def check_stress_refinement(coarse: CheckReport, fine: CheckReport) -> CheckReport:
    """The stress residual should shrink at least linearly with h."""
    hc, hf = coarse.metadata["h"], fine.metadata["h"]
    ratio = fine.residual / coarse.residual
    tol = TOLERANCES["stress_refine_slack"] * hf / hc
    return CheckReport("stress_refinement", [ratio], tol, ratio <= tol,
                       {"eps": fine.metadata["eps"], "h": hf, "region": f"h_coarse={hc}"})


# ------------------------------------------------------------------ sweeps

def fit_log_slope(epsilons, energies) -> tuple[float, float]:
    """Least-squares fit E = slope * log(1/eps) + intercept."""
    x = np.log(1.0 / np.asarray(epsilons, float))
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, np.asarray(energies, float), rcond=None)
    return float(slope), float(icpt)


def kappa_sweep(solve: Callable[[float], float], epsilons: Sequence[float], target: float,
                rel_tol: float | None = None, abs_tol: float | None = None,
                name: str = "kappa_sweep") -> CheckReport:
    """Fit the energy slope against log(1/eps) over a sweep and compare to target.

    solve(eps) returns the converged energy. With abs_tol the slope is
    compared in absolute terms (used for controls whose target is zero).
    """
    eps = sorted(set(float(e) for e in epsilons), reverse=True)
    if len(eps) < TOLERANCES["kappa_min_points"]:
        raise SweepTooShort(f"need at least {TOLERANCES['kappa_min_points']} distinct eps values")
    energies = [float(solve(e)) for e in eps]
    slope, icpt = fit_log_slope(eps, energies)
    if abs_tol is not None:
        res, tol = abs(slope - target), abs_tol
    else:
        res, tol = abs(slope - target) / abs(target), rel_tol if rel_tol is not None else TOLERANCES["kappa_rel"]
    return CheckReport(name, [res], tol, res <= tol,
                       {"eps": ";".join(io.fmt(e) for e in eps), "h": "", "region": "sweep",
                        "energies": energies, "slope": slope, "intercept": icpt, "target": target})
