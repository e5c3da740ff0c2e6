"""Voxel domains, discrete Q-fields and the discrete energy.

A domain is a regular grid of cells, each tagged Interior, Dirichlet or
Outside. Interior cells carry unknowns; Dirichlet cells carry fixed boundary
values; every Interior cell has only Interior or Dirichlet face neighbours.
Fields are arrays of shape grid + (5,). Two- and three-dimensional grids are
supported; a two-dimensional grid may be flagged axisymmetric, in which case
its first coordinate is the distance to the symmetry axis and all integrals
carry the weight 2 pi rho.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from . import _kernels, io
from . import qtensor as qt
from .errors import BallOutsideDomain, EpsilonTooLarge, ResolutionTooCoarse
from .potential import MaterialParams, bulk_f

OUTSIDE, INTERIOR, DIRICHLET = 0, 1, 2


@dataclass(frozen=True)
class StarRegion:
    """A region (cell mask, or whole domain if None) star-shaped about center."""

    center: tuple
    mask: np.ndarray | None = None


@dataclass(frozen=True)
class Stencil:
    idx: np.ndarray      # flat indices of interior cells
    nbr: np.ndarray      # (n, 2d) flat indices of face neighbours
    wf: np.ndarray       # (n, 2d) face weights
    wc: np.ndarray       # (n,) cell weights
    split: np.ndarray    # (n, 2d) share of each face energy given to the cell


@dataclass(eq=False)
class Domain:
    shape: tuple
    h: float
    origin: np.ndarray
    cell_class: np.ndarray
    boundary: np.ndarray
    axisymmetric: bool = False
    star_regions: list = dc_field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)
        self.origin = np.asarray(self.origin, dtype=float)
        self.cell_class = np.asarray(self.cell_class, dtype=np.int8)
        if self.cell_class.shape != self.shape or self.boundary.shape != self.shape + (5,):
            raise ValueError("cell_class and boundary must match the grid shape")
        if self.dim not in (2, 3):
            raise ValueError("only 2D and 3D grids are supported")
        if self.axisymmetric and self.dim != 2:
            raise ValueError("axisymmetric domains are two-dimensional sections")
        interior = self.cell_class == INTERIOR
        if not interior.any():
            raise ValueError("domain has no interior cells")
        edge = np.zeros(self.shape, bool)
        for ax in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[ax] = 0
            edge[tuple(sl)] = True
            sl[ax] = -1
            edge[tuple(sl)] = True
        if (interior & edge).any():
            raise ValueError("interior cells may not touch the grid edge")
        grown = ndimage.binary_dilation(interior, structure=ndimage.generate_binary_structure(self.dim, 1))
        if (grown & (self.cell_class == OUTSIDE)).any():
            raise ValueError("an interior cell has an outside face neighbour")
        if self.axisymmetric and self.centers()[..., 0][self.cell_class != OUTSIDE].min() <= 0:
            raise ValueError("axisymmetric sections must stay off the axis")

    # geometry -------------------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def interior(self) -> np.ndarray:
        return self.cell_class == INTERIOR

    @property
    def dirichlet(self) -> np.ndarray:
        return self.cell_class == DIRICHLET

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def centers(self) -> np.ndarray:
        axes = [self.origin[k] + self.h * np.arange(n) for k, n in enumerate(self.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def bounds(self):
        lo = self.origin - 0.5 * self.h
        return lo, lo + self.h * np.asarray(self.shape)

    def cell_weights(self) -> np.ndarray:
        if self.axisymmetric:
            return self.centers()[..., 0]
        return np.ones(self.shape)

    @property
    def measure_factor(self) -> float:
        return 2.0 * np.pi if self.axisymmetric else 1.0

    @cached_property
    def stencil(self) -> Stencil:
        flat_cls = self.cell_class.reshape(-1)
        idx = np.flatnonzero(flat_cls == INTERIOR)
        strides = np.array([int(np.prod(self.shape[k + 1:])) for k in range(self.dim)])
        offs = np.concatenate([[-s, s] for s in strides])
        nbr = idx[:, None] + offs[None, :]
        wcell = self.cell_weights().reshape(-1)
        wc = wcell[idx].copy()
        if self.axisymmetric:
            wf = np.empty(nbr.shape)
            # faces normal to rho sit half a cell away; faces normal to z share rho
            wf[:, 0] = wc - 0.5 * self.h
            wf[:, 1] = wc + 0.5 * self.h
            wf[:, 2:] = wc[:, None]
        else:
            wf = np.ones(nbr.shape)
        split = np.where(flat_cls[nbr] == INTERIOR, 0.5, 1.0)
        return Stencil(idx.astype(np.int64), nbr.astype(np.int64), wf, wc, split)

    @classmethod
    def from_indicator(cls, inside: Callable[[np.ndarray], np.ndarray], lo: Sequence[float],
                       hi: Sequence[float], h: float, datum: Callable[[np.ndarray], np.ndarray], *,
                       axisymmetric: bool = False, star_regions=None, name: str = "") -> "Domain":
        """Voxelise {inside(x)} within the box [lo, hi].

        Cells whose centres satisfy the indicator are Interior; non-interior
        cells sharing a face with them are Dirichlet and receive datum(x) at
        their centres. A one-cell margin surrounds the box.
        """
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        n = np.maximum(np.ceil((hi - lo) / h - 1e-9).astype(int), 1)
        shape = tuple(int(v) + 2 for v in n)
        origin = lo - 0.5 * h
        axes = [origin[k] + h * np.arange(s) for k, s in enumerate(shape)]
        X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        interior = np.asarray(inside(X), dtype=bool)
        for ax in range(len(shape)):
            sl = [slice(None)] * len(shape)
            sl[ax] = 0
            interior[tuple(sl)] = False
            sl[ax] = -1
            interior[tuple(sl)] = False
        struct = ndimage.generate_binary_structure(len(shape), 1)
        dirichlet = ndimage.binary_dilation(interior, structure=struct) & ~interior
        cell_class = np.zeros(shape, np.int8)
        cell_class[interior] = INTERIOR
        cell_class[dirichlet] = DIRICHLET
        boundary = np.zeros(shape + (5,))
        boundary[dirichlet] = datum(X[dirichlet])
        regions = []
        for reg in star_regions or []:
            if isinstance(reg, StarRegion):
                regions.append(reg)
            else:
                center, indicator = reg
                mask = None if indicator is None else np.asarray(indicator(X), bool)
                regions.append(StarRegion(tuple(center), mask))
        return cls(shape, h, origin, cell_class, boundary, axisymmetric, regions, name)


@dataclass(eq=False)
class QField:
    domain: Domain
    values: np.ndarray
    epsilon: float

    def __post_init__(self):
        d = self.domain
        if not self.epsilon >= 2.0 * d.h * (1.0 - 1e-12):
            raise ResolutionTooCoarse(f"epsilon={self.epsilon} must be at least 2h={2 * d.h}")
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != d.shape + (5,):
            raise ValueError(f"values must have shape {d.shape + (5,)}")
        v[d.dirichlet] = d.boundary[d.dirichlet]
        v[d.cell_class == OUTSIDE] = 0.0
        self.values = v

    def with_values(self, values) -> "QField":
        return QField(self.domain, values, self.epsilon)

    def interior_values(self) -> np.ndarray:
        return self.values[self.domain.interior]

    def phi(self, s_star: float) -> np.ndarray:
        """Eigenvalue-gap map on every non-outside cell (NaN outside)."""
        out = np.full(self.domain.shape, np.nan)
        live = self.domain.cell_class != OUTSIDE
        out[live] = qt.phi(self.values[live], s_star)
        return out

    def sample(self, points) -> np.ndarray:
        """Multilinear interpolation of the cell-centred values at points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        coords = ((pts - self.domain.origin) / self.domain.h).T
        out = np.empty((pts.shape[0], 5))
        for l in range(5):
            out[:, l] = ndimage.map_coordinates(self.values[..., l], coords, order=1, mode="nearest")
        return out


@dataclass(frozen=True)
class EnergyBreakdown:
    elastic: float
    bulk: float
    total: float
    per_cell_density: np.ndarray


def _evaluate(field: QField, params: MaterialParams):
    d = field.domain
    st = d.stencil
    Q = field.values.reshape(-1, 5)
    n = st.idx.shape[0]
    r = np.empty((n, 5))
    el = np.empty(n)
    bk = np.empty(n)
    _kernels.residual_energy(Q, st.idx, st.nbr, st.wf, st.wc, st.split, 1.0 / d.h ** 2,
                             1.0 / field.epsilon ** 2, params.a, params.b, params.c, params.k,
                             r, el, bk, np.empty(n), np.empty((n, 5)))
    return r, el, bk


def energy_from_shares(domain: Domain, el: np.ndarray, bk: np.ndarray) -> EnergyBreakdown:
    scale = domain.cell_volume * domain.measure_factor
    elastic = float(np.sum(el)) * scale
    bulk = float(np.sum(bk)) * scale
    dens = np.zeros(domain.shape)
    dens.reshape(-1)[domain.stencil.idx] = (el + bk) / domain.stencil.wc
    return EnergyBreakdown(elastic, bulk, elastic + bulk, dens)


def energy(field: QField, params: MaterialParams) -> EnergyBreakdown:
    """Discrete energy: forward differences on every face touching an interior
    cell plus the midpoint rule for the bulk term on interior cells."""
    _, el, bk = _evaluate(field, params)
    return energy_from_shares(field.domain, el, bk)


def el_residual(field: QField, params: MaterialParams) -> np.ndarray:
    """Per-cell residual -L_h Q + eps^-2 Df(Q) on interior cells, shape (n, 5)."""
    return _evaluate(field, params)[0]


def _check_ball(domain: Domain, center, radius):
    lo, hi = domain.bounds()
    c = np.asarray(center, dtype=float)
    if np.any(c - radius < lo - 1e-12) or np.any(c + radius > hi + 1e-12):
        raise BallOutsideDomain(f"ball at {tuple(c)} radius {radius} leaves the grid")
    return c


def ball_mask(domain: Domain, center, radius) -> np.ndarray:
    c = _check_ball(domain, center, radius)
    X = domain.centers()
    return (np.sum((X - c) ** 2, axis=-1) <= radius * radius) & domain.interior


def energy_in_ball(field: QField, params: MaterialParams, center, radius: float) -> float:
    """Energy of the interior cells whose centres lie in the closed ball."""
    mask = ball_mask(field.domain, center, radius)
    dens = energy(field, params).per_cell_density
    w = field.domain.cell_weights()
    return float(np.sum((dens * w)[mask])) * field.domain.cell_volume * field.domain.measure_factor


def mu_measure(field: QField, params: MaterialParams, center=None, radius: float | None = None) -> float:
    """Energy normalised by |log eps|, over a ball or the whole domain."""
    eps = field.epsilon
    if not (0 < eps < 1) or abs(math.log(eps)) < 1e-6:
        raise EpsilonTooLarge(f"normalisation needs eps < 1, got {eps}")
    E = energy(field, params).total if center is None else energy_in_ball(field, params, center, radius)
    return E / abs(math.log(eps))


def truncate(field: QField, radius: float) -> QField:
    """Radial truncation Q -> Q min(1, radius/|Q|) on interior cells."""
    v = field.values.copy()
    live = field.domain.interior
    nrm = qt.norm(v[live])
    scale = np.where(nrm > radius, radius / np.where(nrm > 0, nrm, 1.0), 1.0)
    v[live] = v[live] * scale[:, None]
    return field.with_values(v)


def rotated(field: QField, R) -> QField:
    """Apply Q -> R Q R^T to every cell, boundary data included."""
    d = field.domain
    live = d.cell_class != OUTSIDE
    v = np.zeros_like(field.values)
    v[live] = qt.rotate(field.values[live], R)
    b = np.zeros_like(d.boundary)
    b[d.dirichlet] = qt.rotate(d.boundary[d.dirichlet], R)
    nd = Domain(d.shape, d.h, d.origin, d.cell_class, b, d.axisymmetric, d.star_regions, d.name)
    return QField(nd, v, field.epsilon)


def central_gradient(field: QField) -> np.ndarray:
    """Central differences, shape grid + (dim, 5); meaningful on interior cells."""
    g = [np.gradient(field.values, field.domain.h, axis=k) for k in range(field.domain.dim)]
    return np.stack(g, axis=-2)


def pointwise_density(field: QField, params: MaterialParams, grad=None) -> np.ndarray:
    """e = |grad Q|^2/2 + eps^-2 f(Q) from central differences."""
    if grad is None:
        grad = central_gradient(field)
    return 0.5 * np.sum(grad * grad, axis=(-1, -2)) + bulk_f(params, field.values) / field.epsilon ** 2


# ------------------------------------------------------------------ output

def write_vtk(path, field: QField, params: MaterialParams, extra_title: str = ""):
    d = field.domain
    title = (f"ldgdefects h={io.fmt(d.h)} eps={io.fmt(field.epsilon)} a={io.fmt(params.a)} "
             f"b={io.fmt(params.b)} c={io.fmt(params.c)} axisym={int(d.axisymmetric)} {extra_title}").strip()
    ph = np.nan_to_num(field.phi(params.s_star), nan=0.0)
    dens = energy(field, params).per_cell_density
    return io.write_vtk(path, d.shape, d.origin, d.h,
                        {"Q": field.values, "boundary": d.boundary, "phi": ph,
                         "energy_density": dens, "cell_class": d.cell_class.astype(np.int64)},
                        title)


def read_vtk(path) -> tuple[QField, MaterialParams]:
    """Reload a field written by write_vtk."""
    title, dims, origin, spacing, arrays = io.read_vtk(path)
    meta = dict(tok.split("=", 1) for tok in title.split() if "=" in tok)
    dim = 2 if dims[2] == 1 else 3
    shape = tuple(dims[:dim])
    rev = tuple(reversed(shape))

    def grid(a):
        a = a.reshape(rev + a.shape[1:])
        return np.transpose(a, tuple(reversed(range(dim))) + tuple(range(dim, a.ndim)))

    cell_class = grid(arrays["cell_class"]).astype(np.int8)
    dom = Domain(shape, float(meta["h"]), origin[:dim], cell_class, grid(arrays["boundary"]),
                 axisymmetric=meta.get("axisym") == "1")
    params = MaterialParams(float(meta["a"]), float(meta["b"]), float(meta["c"]))
    return QField(dom, grid(arrays["Q"]), float(meta["eps"])), params
