"""Compiled stencil kernels. Every cell writes only its own outputs, so the
results do not depend on the number of threads."""
import numba as nb
import numpy as np

# prefer OpenMP or the built-in queue; an outdated TBB only produces warnings
nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_R2 = np.sqrt(2.0)
_IR2 = 1.0 / np.sqrt(2.0)
_IR6 = 1.0 / np.sqrt(6.0)
_THIRD = 1.0 / 3.0


@nb.njit(inline="always")
def _bulk(q0, q1, q2, q3, q4, a, b, c, k):
    """Returns f(Q) and the five components of Df(Q)."""
    m00 = q0 * _IR2 - q1 * _IR6
    m11 = -q0 * _IR2 - q1 * _IR6
    m22 = 2.0 * q1 * _IR6
    m01 = q2 * _IR2
    m02 = q3 * _IR2
    m12 = q4 * _IR2
    s00 = m00 * m00 + m01 * m01 + m02 * m02
    s11 = m01 * m01 + m11 * m11 + m12 * m12
    s22 = m02 * m02 + m12 * m12 + m22 * m22
    s01 = m00 * m01 + m01 * m11 + m02 * m12
    s02 = m00 * m02 + m01 * m12 + m02 * m22
    s12 = m01 * m02 + m11 * m12 + m12 * m22
    tr3 = m00 * s00 + m11 * s11 + m22 * s22 + 2.0 * (m01 * s01 + m02 * s02 + m12 * s12)
    n2 = q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3 + q4 * q4
    cn = c * n2
    f = k - 0.5 * a * n2 - b * _THIRD * tr3 + 0.25 * c * n2 * n2
    return (f,
            -a * q0 - b * (s00 - s11) * _IR2 + cn * q0,
            -a * q1 - b * (2.0 * s22 - s00 - s11) * _IR6 + cn * q1,
            -a * q2 - b * _R2 * s01 + cn * q2,
            -a * q3 - b * _R2 * s02 + cn * q3,
            -a * q4 - b * _R2 * s12 + cn * q4)


@nb.njit(parallel=True, cache=True)
def residual_energy(Q, idx, nbr, wf, wc, split, h2inv, eps2inv, a, b, c, k,
                    r_out, el_out, bk_out, rn_out, base_out):
    """Flow residual -L_h Q + eps^-2 Df(Q) and per-cell energy shares.

    el_out[i] holds the elastic energy attributed to interior cell i (half of
    each interior face, all of each face shared with a Dirichlet cell);
    bk_out[i] holds eps^-2 f(Q_i) times the cell weight; rn_out[i] is the
    Euclidean norm of the residual and base_out[i] a copy of Q at the cell.
    """
    n = idx.shape[0]
    m = nbr.shape[1]
    for i in nb.prange(n):
        ci = idx[i]
        q0 = Q[ci, 0]
        q1 = Q[ci, 1]
        q2 = Q[ci, 2]
        q3 = Q[ci, 3]
        q4 = Q[ci, 4]
        l0 = 0.0
        l1 = 0.0
        l2 = 0.0
        l3 = 0.0
        l4 = 0.0
        el = 0.0
        for j in range(m):
            cj = nbr[i, j]
            w = wf[i, j]
            d0 = Q[cj, 0] - q0
            d1 = Q[cj, 1] - q1
            d2 = Q[cj, 2] - q2
            d3 = Q[cj, 3] - q3
            d4 = Q[cj, 4] - q4
            l0 += w * d0
            l1 += w * d1
            l2 += w * d2
            l3 += w * d3
            l4 += w * d4
            el += split[i, j] * w * (d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3 + d4 * d4)
        f, g0, g1, g2, g3, g4 = _bulk(q0, q1, q2, q3, q4, a, b, c, k)
        inv = h2inv / wc[i]
        r0 = -l0 * inv + eps2inv * g0
        r1 = -l1 * inv + eps2inv * g1
        r2 = -l2 * inv + eps2inv * g2
        r3 = -l3 * inv + eps2inv * g3
        r4 = -l4 * inv + eps2inv * g4
        r_out[i, 0] = r0
        r_out[i, 1] = r1
        r_out[i, 2] = r2
        r_out[i, 3] = r3
        r_out[i, 4] = r4
        rn_out[i] = np.sqrt(r0 * r0 + r1 * r1 + r2 * r2 + r3 * r3 + r4 * r4)
        base_out[i, 0] = q0
        base_out[i, 1] = q1
        base_out[i, 2] = q2
        base_out[i, 3] = q3
        base_out[i, 4] = q4
        el_out[i] = 0.5 * el * h2inv
        bk_out[i] = eps2inv * wc[i] * f


@nb.njit(parallel=True, cache=True)
def descend(Q, idx, base, r, dt, radius):
    """Q[idx] = base - dt r, then radial truncation to |Q| <= radius if radius > 0."""
    n = idx.shape[0]
    for i in nb.prange(n):
        ci = idx[i]
        n2 = 0.0
        for l in range(5):
            v = base[i, l] - dt * r[i, l]
            Q[ci, l] = v
            n2 += v * v
        if radius > 0.0 and n2 > radius * radius:
            s = radius / np.sqrt(n2)
            for l in range(5):
                Q[ci, l] *= s

