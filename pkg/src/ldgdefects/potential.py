"""The quartic bulk potential and its structural properties."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qtensor as qt
from .errors import PropertyViolated


@dataclass(frozen=True)
class MaterialParams:
    """Coefficients of f(Q) = k - a/2 trQ^2 - b/3 trQ^3 + c/4 (trQ^2)^2.

    The constant k is chosen so that min f = 0, attained on the uniaxial
    manifold with scalar order parameter s_star.
    """

    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    delta0: float | None = None
    s_star: float = field(init=False)
    k: float = field(init=False)
    kappa_star: float = field(init=False)

    def __post_init__(self):
        for name in ("a", "b", "c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"material coefficient {name} must be positive")
        a, b, c = self.a, self.b, self.c
        s = (b + np.sqrt(b * b + 24.0 * a * c)) / (4.0 * c)
        object.__setattr__(self, "s_star", float(s))
        object.__setattr__(self, "k", float(a * s**2 / 3 + 2 * b * s**3 / 27 - c * s**4 / 9))
        object.__setattr__(self, "kappa_star", float(np.pi / 2 * s**2))
        if self.delta0 is None:
            object.__setattr__(self, "delta0", 0.1 * float(s))

    @property
    def uniaxial_norm(self) -> float:
        """|Q| on the uniaxial manifold, sqrt(2/3) s*."""
        return float(np.sqrt(2.0 / 3.0) * self.s_star)

    def as_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "s_star": self.s_star,
                "k": self.k, "kappa_star": self.kappa_star, "delta0": self.delta0}


def bulk_f(params: MaterialParams, q):
    q = np.asarray(q, dtype=float)
    n2 = np.sum(q * q, axis=-1)
    return params.k - 0.5 * params.a * n2 - params.b / 3.0 * qt.trace_cube(q) + 0.25 * params.c * n2 * n2


def bulk_grad(params: MaterialParams, q):
    """Gradient of f in S0: -aQ - b(Q^2 - |Q|^2/3 Id) + c|Q|^2 Q."""
    q = np.asarray(q, dtype=float)
    n2 = np.sum(q * q, axis=-1)[..., None]
    return -params.a * q - params.b * qt.square_proj(q) + params.c * n2 * q


def bulk_hessian(params: MaterialParams, q):
    """Hessian of f as a symmetric 5x5 matrix (stacked over leading axes)."""
    q = np.asarray(q, dtype=float)
    E = qt.basis()
    M = qt.to_matrix(q)
    # derivative of the traceless square along each basis direction
    D = np.stack([qt.from_matrix(M @ E[j] + E[j] @ M) for j in range(5)], axis=-1)
    n2 = np.sum(q * q, axis=-1)[..., None, None]
    eye = np.eye(5)
    return (-params.a * eye - params.b * D + params.c * (n2 * eye + 2.0 * q[..., :, None] * q[..., None, :]))


def linfty_radius(params: MaterialParams, boundary_sup: float = 0.0) -> float:
    """A priori bound max(sqrt(2/3) s*, ||g||_inf) for minimisers."""
    return float(max(params.uniaxial_norm, boundary_sup))


def hessian_bound(params: MaterialParams, radius: float, samples: int = 2000, seed: int = 0) -> float:
    """Sampled bound on the spectral norm of D^2 f over the ball |Q| <= radius."""
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(samples, 5))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    t = np.concatenate([np.ones(samples // 2), rng.uniform(0.0, 1.0, samples - samples // 2)])
    q = d * (radius * t)[:, None]
    ev = np.linalg.eigvalsh(bulk_hessian(params, q))
    return float(1.1 * np.max(np.abs(ev)))


# ------------------------------------------------------------- properties

@dataclass(frozen=True)
class FReport:
    gamma0: float   # inf f / (1 - phi)^2
    gamma1: float   # inf of normal second derivatives on the manifold
    gamma2: float   # inf f / dist^2 within delta0 of the manifold
    gamma3: float   # sup f(tQ + (1-t)rho Q) / (t^2 f(Q))
    samples: int


def _random_unit(rng, n, dim):
    v = rng.normal(size=(n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def check_F_properties(params: MaterialParams, samples: int = 1000, seed: int = 0) -> FReport:
    """Sample the four structural inequalities and estimate their constants.

    Raises PropertyViolated if any estimated constant is non-positive (or the
    F3 ratio is unbounded).
    """
    if samples < 1000:
        raise ValueError("at least 1000 samples are required")
    rng = np.random.default_rng(seed)
    s = params.s_star
    N = samples

    # F0: bulk sample in a ball, plus the cone and the neighbourhood of the manifold
    ball = _random_unit(rng, N, 5) * (10.0 * rng.uniform(0, 1, N) ** 0.2)[:, None]
    cone = qt.oblate(_random_unit(rng, N, 3), 1.0) * rng.uniform(0.0, 3.0, N)[:, None]
    near = qt.lift(_random_unit(rng, N, 3), s) + 0.3 * _random_unit(rng, N, 5) * rng.uniform(0, 1, N)[:, None]
    Q0 = np.concatenate([ball, cone, near])
    ph = qt.phi(Q0, s)
    keep = np.abs(1.0 - ph) > 1e-8
    f0 = bulk_f(params, Q0[keep])
    gamma0 = float(np.min(f0 / (1.0 - ph[keep]) ** 2))

    # F1: second derivatives along directions normal to the manifold
    n = _random_unit(rng, N, 3)
    base = qt.lift(n, s)
    P = rng.normal(size=(N, 5))
    # tangent space at psi(n) is spanned by n v + v n with v orthogonal to n
    tangent = []
    for e in np.eye(3):
        v = e - np.sum(n * e, axis=1)[:, None] * n
        tangent.append(qt.from_matrix(n[:, :, None] * v[:, None, :] + v[:, :, None] * n[:, None, :]))
    T = np.stack(tangent, axis=1)
    Tq = _orthonormal_columns(np.swapaxes(T, 1, 2))
    P = P - np.einsum("nij,nj->ni", Tq, np.einsum("nij,ni->nj", Tq, P))
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    H = bulk_hessian(params, base)
    gamma1 = float(np.min(np.einsum("ni,nij,nj->n", P, H, P)))

    # F2: quadratic growth away from the manifold inside delta0
    dirs = _random_unit(rng, N, 5)
    dist = params.delta0 * rng.uniform(1e-3, 1.0, N)
    Q2 = base + dirs * dist[:, None]
    d2 = np.linalg.norm(Q2 - qt.retract(Q2, s), axis=1)
    ok = (d2 > 1e-12) & (d2 <= params.delta0)
    gamma2 = float(np.min(bulk_f(params, Q2[ok]) / d2[ok] ** 2))

    # F3: radial interpolation towards the retraction on the same set
    rq = qt.retract(Q2[ok], s)
    fq = bulk_f(params, Q2[ok])
    pos = fq > 1e-14
    ts = np.linspace(0.05, 1.0, 20)
    ratios = []
    for t in ts:
        ft = bulk_f(params, t * Q2[ok][pos] + (1 - t) * rq[pos])
        ratios.append(ft / (t * t * fq[pos]))
    gamma3 = float(np.max(ratios))

    rep = FReport(gamma0, gamma1, gamma2, gamma3, N)
    bad = [name for name, v in (("F0", gamma0), ("F1", gamma1), ("F2", gamma2)) if not v > 0]
    if not np.isfinite(gamma3):
        bad.append("F3")
    if bad:
        raise PropertyViolated(f"sampled constants not positive for {', '.join(bad)}: {rep}")
    return rep


def _orthonormal_columns(A):
    """Orthonormal basis of the column span of each (5, 3) matrix (rank 2)."""
    U, S, _ = np.linalg.svd(A, full_matrices=False)
    return U[:, :, :2]
