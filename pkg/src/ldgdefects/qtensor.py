"""Algebra on S0, the space of traceless symmetric 3x3 matrices.

Tensors are stored as 5-vectors in a fixed orthonormal basis, so the
Frobenius inner product of matrices equals the Euclidean inner product of
component vectors. All array functions accept a trailing axis of length 5
and broadcast over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLeading, NotUnit, OnCone, ZeroTensor

_R2 = np.sqrt(2.0)
_R6 = np.sqrt(6.0)

# degeneracy tolerance for eigenvalue coincidences, relative to max(1, |Q|)
DEGEN_TOL = 1e-9
# relative cubic discriminant below which the closed form is not trusted
DISC_TOL = 1e-12
UNIT_TOL = 1e-10


def basis() -> np.ndarray:
    """Return the five orthonormal basis matrices, shape (5, 3, 3)."""
    E = np.zeros((5, 3, 3))
    E[0] = np.diag([1.0, -1.0, 0.0]) / _R2
    E[1] = np.diag([-1.0, -1.0, 2.0]) / _R6
    E[2, 0, 1] = E[2, 1, 0] = 1.0 / _R2
    E[3, 0, 2] = E[3, 2, 0] = 1.0 / _R2
    E[4, 1, 2] = E[4, 2, 1] = 1.0 / _R2
    return E


def to_matrix(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    M = np.empty(q.shape[:-1] + (3, 3))
    M[..., 0, 0] = q[..., 0] / _R2 - q[..., 1] / _R6
    M[..., 1, 1] = -q[..., 0] / _R2 - q[..., 1] / _R6
    M[..., 2, 2] = 2.0 * q[..., 1] / _R6
    M[..., 0, 1] = M[..., 1, 0] = q[..., 2] / _R2
    M[..., 0, 2] = M[..., 2, 0] = q[..., 3] / _R2
    M[..., 1, 2] = M[..., 2, 1] = q[..., 4] / _R2
    return M


def from_matrix(M) -> np.ndarray:
    """Project a 3x3 matrix (or stack) onto S0 and return components."""
    M = np.asarray(M, dtype=float)
    S = 0.5 * (M + np.swapaxes(M, -1, -2))
    q = np.empty(M.shape[:-2] + (5,))
    q[..., 0] = (S[..., 0, 0] - S[..., 1, 1]) / _R2
    q[..., 1] = (2.0 * S[..., 2, 2] - S[..., 0, 0] - S[..., 1, 1]) / _R6
    q[..., 2] = _R2 * S[..., 0, 1]
    q[..., 3] = _R2 * S[..., 0, 2]
    q[..., 4] = _R2 * S[..., 1, 2]
    return q


def norm(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.sqrt(np.sum(q * q, axis=-1))


def det(q) -> np.ndarray:
    return _det3(to_matrix(q))


def _det3(M):
    return (M[..., 0, 0] * (M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1])
            - M[..., 0, 1] * (M[..., 1, 0] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 0])
            + M[..., 0, 2] * (M[..., 1, 0] * M[..., 2, 1] - M[..., 1, 1] * M[..., 2, 0]))


def trace_cube(q) -> np.ndarray:
    """tr(Q^3), which equals 3 det Q for traceless Q."""
    return 3.0 * _det3(to_matrix(q))


def square_proj(q) -> np.ndarray:
    """Components of Q^2 - |Q|^2/3 Id, the traceless part of Q^2."""
    M = to_matrix(q)
    return from_matrix(M @ M)


def outer_unit(n) -> np.ndarray:
    """Components of n (x) n - Id/3 for unit vectors n, shape (..., 3)."""
    n = np.asarray(n, dtype=float)
    return from_matrix(n[..., :, None] * n[..., None, :])


def rotate(q, R) -> np.ndarray:
    """Apply Q -> R Q R^T."""
    R = np.asarray(R, dtype=float)
    M = to_matrix(q)
    return from_matrix(R @ M @ R.T)


# ---------------------------------------------------------------- eigen

def _closed_form_eigvals(q):
    M = to_matrix(q)
    nrm2 = np.sum(q * q, axis=-1)
    m = np.sqrt(nrm2 / 6.0)
    d = _det3(M)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(m > 0, d / (2.0 * m ** 3), 0.0)
    c = np.clip(c, -1.0, 1.0)
    th = np.arccos(c) / 3.0
    l1 = 2.0 * m * np.cos(th)
    l3 = 2.0 * m * np.cos(th + 2.0 * np.pi / 3.0)
    l2 = -(l1 + l3)
    return M, np.stack([l1, l2, l3], axis=-1), 1.0 - c * c


def _null_vector(A):
    """Unit vector spanning the kernel of a rank-2 symmetric stack A."""
    r0, r1, r2 = A[..., 0, :], A[..., 1, :], A[..., 2, :]
    cands = np.stack([np.cross(r0, r1), np.cross(r0, r2), np.cross(r1, r2)], axis=-2)
    n2 = np.sum(cands * cands, axis=-1)
    best = np.argmax(n2, axis=-1)
    v = np.take_along_axis(cands, best[..., None, None], axis=-2)[..., 0, :]
    return v / np.sqrt(np.take_along_axis(n2, best[..., None], axis=-1))


def _complement_basis(v):
    k = np.argmin(np.abs(v), axis=-1)
    e = np.zeros_like(v)
    np.put_along_axis(e, k[..., None], 1.0, axis=-1)
    u = np.cross(v, e)
    u /= np.sqrt(np.sum(u * u, axis=-1, keepdims=True))
    w = np.cross(v, u)
    return u, w


def _jacobi(M, sweeps=12):
    """Cyclic Jacobi diagonalisation of a stack of symmetric 3x3 matrices."""
    A = M.copy()
    V = np.broadcast_to(np.eye(3), A.shape).copy()
    for _ in range(sweeps):
        for p, r in ((0, 1), (0, 2), (1, 2)):
            apq = A[:, p, r]
            active = np.abs(apq) > 0.0
            if not np.any(active):
                continue
            theta = 0.5 * np.arctan2(2.0 * apq, A[:, r, r] - A[:, p, p])
            c = np.where(active, np.cos(theta), 1.0)
            s = np.where(active, np.sin(theta), 0.0)
            J = np.broadcast_to(np.eye(3), A.shape).copy()
            J[:, p, p] = c
            J[:, r, r] = c
            J[:, p, r] = s
            J[:, r, p] = -s
            A = np.swapaxes(J, 1, 2) @ A @ J
            V = V @ J
    return V


def _fix_signs(V):
    """Make the first non-negligible entry of every eigenvector positive."""
    # V has eigenvectors in columns; work on (..., vec, comp)
    W = np.swapaxes(V, -1, -2)
    big = np.abs(W) > 1e-12
    first = np.argmax(big, axis=-1)
    lead = np.take_along_axis(W, first[..., None], axis=-1)
    W = np.where(lead < 0, -W, W)
    return np.swapaxes(W, -1, -2)


def eigh(q):
    """Eigen-decomposition of Q given by components.

    Returns (lam, V, degenerate12) where lam is sorted descending, V holds
    the orthonormal eigenvectors as columns and degenerate12 flags
    lam1 - lam2 <= DEGEN_TOL * max(1, |Q|).
    """
    q = np.asarray(q, dtype=float)
    batch = q.shape[:-1]
    qf = q.reshape(-1, 5)
    nq = norm(qf)
    # work on unit tensors so that neither tiny nor huge |Q| under- or overflows
    scale = np.where(nq > 0, nq, 1.0)
    M, lam, disc = _closed_form_eigvals(qf / scale[:, None])
    V = np.empty(M.shape)
    zero = nq == 0.0
    fall = (~zero) & (disc < DISC_TOL)
    reg = ~(zero | fall)
    V[zero] = np.eye(3)
    if np.any(fall):
        V[fall] = _jacobi(M[fall])
    if np.any(reg):
        Mr, lr = M[reg], lam[reg]
        upper = (lr[:, 0] - lr[:, 1]) >= (lr[:, 1] - lr[:, 2])
        liso = np.where(upper, lr[:, 0], lr[:, 2])
        v = _null_vector(Mr - liso[:, None, None] * np.eye(3))
        u, w = _complement_basis(v)
        Mu, Mw = np.einsum("nij,nj->ni", Mr, u), np.einsum("nij,nj->ni", Mr, w)
        b00 = np.sum(u * Mu, axis=-1)
        b11 = np.sum(w * Mw, axis=-1)
        b01 = np.sum(u * Mw, axis=-1)
        th = 0.5 * np.arctan2(2.0 * b01, b00 - b11)
        c, s = np.cos(th)[:, None], np.sin(th)[:, None]
        hi = c * u + s * w
        lo = -s * u + c * w
        Vr = np.where(upper[:, None, None],
                      np.stack([v, hi, lo], axis=-1),
                      np.stack([hi, lo, v], axis=-1))
        V[reg] = Vr
    # Rayleigh quotients, then sort descending
    lam = np.einsum("nij,nik,nkj->nj", V, M, V)
    order = np.argsort(-lam, axis=-1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=-1)
    V = np.take_along_axis(V, order[:, None, :], axis=-1)
    V = _fix_signs(V)
    lam = lam * scale[:, None]
    lam[zero] = 0.0
    deg = (lam[:, 0] - lam[:, 1]) <= DEGEN_TOL * np.maximum(1.0, nq)
    return lam.reshape(batch + (3,)), V.reshape(batch + (3, 3)), deg.reshape(batch)


def eigvals(q) -> np.ndarray:
    return eigh(q)[0]


@dataclass(frozen=True)
class Eigen:
    values: np.ndarray
    vectors: np.ndarray
    degenerate12: bool


def eigen(q) -> Eigen:
    """Eigen-decomposition of a single tensor."""
    lam, V, deg = eigh(np.asarray(q, dtype=float).reshape(5))
    return Eigen(lam, V, bool(deg))


# ---------------------------------------------------------------- maps

def s_r_of(q):
    """Scalar order parameters (s, r) with s = 2 l1 + l2, r = (l1 + 2 l2)/s."""
    q = np.asarray(q, dtype=float)
    nq = float(norm(q))
    if nq == 0.0:
        raise ZeroTensor("s and r are undefined at Q = 0")
    lam, _, deg = eigh(q)
    if deg:
        raise DegenerateLeading("leading eigenvalue is not simple")
    s = 2 * lam[0] + lam[1]
    return float(s), float((lam[0] + 2 * lam[1]) / s)


def phi(q, s_star: float):
    """Normalised eigenvalue gap (l1 - l2)/s*; zero exactly on the oblate cone."""
    lam, _, deg = eigh(q)
    gap = lam[..., 0] - lam[..., 1]
    out = np.where(deg, 0.0, gap) / s_star
    return float(out) if np.ndim(out) == 0 else out


def leading_vector(q):
    """Leading eigenvector (sign-normalised) and the degeneracy flag."""
    _, V, deg = eigh(q)
    return V[..., :, 0], deg


def retract(q, s_star: float):
    """Nearest-point projection onto the uniaxial manifold s*(n n - Id/3)."""
    n, deg = leading_vector(q)
    if np.any(deg):
        raise OnCone("retraction is undefined on the oblate cone")
    return s_star * outer_unit(n)


def tau(q, s_star: float):
    """The Lipschitz map s* phi(Q) rho(Q), extended by zero on the cone."""
    q = np.asarray(q, dtype=float)
    lam, V, deg = eigh(q)
    ph = np.where(deg, 0.0, lam[..., 0] - lam[..., 1]) / s_star
    out = s_star * ph[..., None] * (s_star * outer_unit(V[..., :, 0]))
    return out


def lift(n, s_star: float):
    """psi(n) = s*(n n - Id/3) for a unit vector n."""
    n = np.asarray(n, dtype=float)
    if np.any(np.abs(np.linalg.norm(n, axis=-1) - 1.0) > UNIT_TOL):
        raise NotUnit("lift requires |n| = 1")
    return s_star * outer_unit(n)


def geodesic_P0(theta, s_star: float):
    """The half-turn geodesic loop in the uniaxial manifold."""
    theta = np.asarray(theta, dtype=float)
    n = np.stack([np.cos(theta / 2), np.sin(theta / 2), np.zeros_like(theta)], axis=-1)
    return s_star * outer_unit(n)


def oblate(p, s: float):
    """-s(p p - Id/3), a point on the oblate cone for s > 0."""
    return -s * outer_unit(np.asarray(p, dtype=float))
