"""Energy-decreasing gradient flow for the discrete energy, and initial guesses."""
from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse.linalg import cg

from . import _kernels, io
from . import qtensor as qt
from .errors import NoCenter, NoDescent
from .field import DIRICHLET, INTERIOR, OUTSIDE, Domain, EnergyBreakdown, QField, energy_from_shares
from .potential import MaterialParams, hessian_bound, linfty_radius

TRACE_COLUMNS = ("iter", "elastic", "bulk", "total", "residual", "dt")


@dataclass
class SolveConfig:
    dt_safety: float = 0.9
    max_iters: int = 200_000
    grad_tol: float = 1e-4
    linfty_projection: bool = True
    seed: int = 0
    log_every: int = 100
    max_halvings: int = 30

    def __post_init__(self):
        if not 0 < self.dt_safety <= 1:
            raise ValueError("dt_safety must lie in (0, 1]")
        if self.max_iters < 1 or self.log_every < 1:
            raise ValueError("max_iters and log_every must be positive")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")


@dataclass
class SolveReport:
    iterations: int
    converged: bool
    energy: EnergyBreakdown
    residual: float
    tolerance: float
    dt: float
    halvings: int
    trace: list = dc_field(default_factory=list)
    seed: int = 0
    wall_time: float = 0.0

    def write_trace(self, path, meta=None):
        return io.write_csv(path, TRACE_COLUMNS, self.trace, meta)


def stable_dt(field: QField, params: MaterialParams, cfg: SolveConfig) -> tuple[float, float]:
    """Explicit step from the Laplacian and sampled bulk-Hessian bounds.

    Returns (dt, radius) where radius is the truncation radius used both for
    the Hessian bound and the optional projection.
    """
    d = field.domain
    st = d.stencil
    # Gershgorin bound of the (weighted) discrete Laplacian is 2 max_i sum_j w_ij / w_i / h^2
    lap = 2.0 * float(np.max(np.sum(st.wf, axis=1) / st.wc)) / d.h ** 2
    gsup = float(np.max(qt.norm(d.boundary[d.dirichlet]))) if d.dirichlet.any() else 0.0
    radius = linfty_radius(params, gsup)
    qsup = float(np.max(qt.norm(field.interior_values())))
    lam = hessian_bound(params, max(radius, qsup))
    return cfg.dt_safety * min(1.0 / lap, field.epsilon ** 2 / lam), radius


def relax(field: QField, params: MaterialParams, cfg: SolveConfig | None = None,
          callback: Callable | None = None) -> tuple[QField, SolveReport]:
    """Explicit gradient flow Q <- Q - dt(-L_h Q + eps^-2 Df(Q)) on interior cells.

    Steps that increase the energy are retried with half the step. The run
    stops once the sup-norm of the residual is at most grad_tol (1 + eps^-2);
    otherwise the last (lowest-energy) state is returned with converged=False.
    """
    cfg = cfg or SolveConfig()
    t0 = time.perf_counter()
    d = field.domain
    st = d.stencil
    n = st.idx.shape[0]
    dt, radius = stable_dt(field, params, cfg)
    proj = radius if cfg.linfty_projection else 0.0
    eps2inv = 1.0 / field.epsilon ** 2
    h2inv = 1.0 / d.h ** 2
    tol = cfg.grad_tol * (1.0 + eps2inv)
    Q = field.values.reshape(-1, 5).copy()
    scale = d.cell_volume * d.measure_factor

    r, r_prev = np.empty((n, 5)), np.empty((n, 5))
    el, bk, rn = np.empty(n), np.empty(n), np.empty(n)
    cur, base = np.empty((n, 5)), np.empty((n, 5))
    trace = []
    E_prev = None
    E0 = None
    halvings = 0
    it = 0
    converged = False
    while True:
        _kernels.residual_energy(Q, st.idx, st.nbr, st.wf, st.wc, st.split, h2inv, eps2inv,
                                 params.a, params.b, params.c, params.k, r, el, bk, rn, cur)
        E_el = float(np.sum(el)) * scale
        E_bk = float(np.sum(bk)) * scale
        E = E_el + E_bk
        if E0 is None:
            E0 = abs(E)
        if E_prev is not None and E > E_prev + 1e-12 * max(E0, 1e-300):
            halvings += 1
            if halvings > cfg.max_halvings:
                raise NoDescent(f"energy increased after {cfg.max_halvings} step halvings")
            dt *= 0.5
            _kernels.descend(Q, st.idx, base, r_prev, dt, proj)
            continue
        res = float(np.max(rn))
        done = res <= tol
        if done or it % cfg.log_every == 0 or it + 1 >= cfg.max_iters:
            trace.append((it, E_el, E_bk, E, res, dt))
        if callback is not None:
            callback(it, E, res)
        if done:
            converged = True
            break
        if it + 1 >= cfg.max_iters:
            break
        it += 1
        cur, base = base, cur
        r, r_prev = r_prev, r
        E_prev = E
        _kernels.descend(Q, st.idx, base, r_prev, dt, proj)

    out = field.with_values(Q.reshape(field.values.shape))
    report = SolveReport(iterations=it + 1, converged=converged,
                         energy=energy_from_shares(d, el, bk), residual=res, tolerance=tol,
                         dt=dt, halvings=halvings, trace=trace, seed=cfg.seed,
                         wall_time=time.perf_counter() - t0)
    return out, report


def relax_axisym(section: QField, params: MaterialParams, cfg: SolveConfig | None = None,
                 callback: Callable | None = None) -> tuple[QField, SolveReport]:
    """Flow for an axisymmetric section; the weight rho enters every term."""
    if not section.domain.axisymmetric:
        raise ValueError("relax_axisym needs an axisymmetric (rho, z) section")
    return relax(section, params, cfg, callback)


# -------------------------------------------------------------- initialisers

def _nearest_dirichlet(domain: Domain) -> np.ndarray:
    """For every cell, the flat index of the nearest Dirichlet cell."""
    _, inds = ndimage.distance_transform_edt(domain.cell_class != DIRICHLET, return_indices=True)
    return np.ravel_multi_index(tuple(inds), domain.shape).reshape(domain.shape)


def _radial_values(domain: Domain) -> np.ndarray:
    if not domain.star_regions:
        raise NoCenter("radial initialisation needs at least one star centre")
    X = domain.centers()
    h = domain.h
    interior = domain.interior
    near = _nearest_dirichlet(domain).reshape(-1)
    bflat = domain.boundary.reshape(-1, 5)
    cls_flat = domain.cell_class.reshape(-1)
    out = np.zeros(domain.shape + (5,))
    done = np.zeros(domain.shape, bool)
    shape = np.asarray(domain.shape)
    for reg in domain.star_regions:
        sel = interior & ~done
        if reg.mask is not None:
            sel &= reg.mask
        if not sel.any():
            continue
        c = np.asarray(reg.center, dtype=float)
        pts = X[sel]
        dvec = pts - c
        dist = np.linalg.norm(dvec, axis=1)
        unit = np.zeros_like(dvec)
        unit[:, 0] = 1.0
        nz = dist > 0
        unit[nz] = dvec[nz] / dist[nz, None]
        t = dist.copy()
        hit = np.full(len(pts), -1, dtype=np.int64)
        active = np.arange(len(pts))
        while active.size:
            p = c + t[active, None] * unit[active]
            ij = np.rint((p - domain.origin) / h).astype(np.int64)
            ij = np.clip(ij, 0, shape - 1)
            flat = np.ravel_multi_index(tuple(ij.T), domain.shape)
            stop = cls_flat[flat] != INTERIOR
            if reg.mask is not None:
                stop |= ~reg.mask.reshape(-1)[flat]
            hit[active[stop]] = flat[stop]
            active = active[~stop]
            t[active] += 0.5 * h
        out[sel] = bflat[near[hit]]
        done |= sel
    rest = interior & ~done
    if rest.any():
        out[rest] = bflat[near.reshape(domain.shape)[rest]]
    return out


def _harmonic_values(domain: Domain) -> np.ndarray:
    st = domain.stencil
    n = st.idx.size
    pos = np.full(int(np.prod(domain.shape)), -1, dtype=np.int64)
    pos[st.idx] = np.arange(n)
    rows, cols, vals = [np.arange(n)], [np.arange(n)], [np.sum(st.wf, axis=1)]
    rhs = np.zeros((n, 5))
    bflat = domain.boundary.reshape(-1, 5)
    for j in range(st.nbr.shape[1]):
        nb = st.nbr[:, j]
        inner = pos[nb] >= 0
        rows.append(np.flatnonzero(inner))
        cols.append(pos[nb[inner]])
        vals.append(-st.wf[inner, j])
        rhs[~inner] += st.wf[~inner, j, None] * bflat[nb[~inner]]
    A = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    out = np.zeros(domain.shape + (5,))
    sol = np.empty((n, 5))
    for l in range(5):
        x, _ = cg(A, rhs[:, l], rtol=1e-10, maxiter=20 * n)
        sol[:, l] = x
    out.reshape(-1, 5)[st.idx] = sol
    return out


def initialize(domain: Domain, epsilon: float, strategy: str = "radial", *,
               params: MaterialParams | None = None, seed: int = 0,
               profile: Callable[[np.ndarray], np.ndarray] | None = None) -> QField:
    """Initial field for the flow.

    strategy is one of
      "harmonic" - componentwise discrete harmonic extension of the boundary data,
      "radial"   - in each star region, the boundary value met by the ray from the
                   region's centre (cells outside every region take the nearest
                   boundary value),
      "random"   - seeded random tensors with |Q| <= sqrt(2/3) s*,
      "profile"  - profile(x) evaluated at interior cell centres.
    """
    if strategy == "radial":
        vals = _radial_values(domain)
    elif strategy == "harmonic":
        vals = _harmonic_values(domain)
    elif strategy == "random":
        params = params or MaterialParams()
        rng = np.random.default_rng(seed)
        m = int(domain.interior.sum())
        dirs = rng.normal(size=(m, 5))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        rad = params.uniaxial_norm * rng.uniform(0.0, 1.0, m) ** 0.2
        vals = np.zeros(domain.shape + (5,))
        vals[domain.interior] = dirs * rad[:, None]
    elif strategy == "profile":
        if profile is None:
            raise ValueError("profile strategy needs a profile callable")
        vals = np.zeros(domain.shape + (5,))
        vals[domain.interior] = profile(domain.centers()[domain.interior])
    else:
        raise ValueError(f"unknown initialisation strategy {strategy!r}")
    return QField(domain, vals, epsilon)
