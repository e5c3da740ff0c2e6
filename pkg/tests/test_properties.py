"""Property-based checks of invariants across modules."""
import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ldgdefects import defect as dm
from ldgdefects import io
from ldgdefects import qtensor as qt
from ldgdefects.potential import MaterialParams, bulk_f

P = MaterialParams(1.0, 1.0, 1.0)
S = P.s_star

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
tensors = arrays(np.float64, 5, elements=finite)
vectors = arrays(np.float64, 3, elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-3)
angles = st.floats(0, 2 * np.pi, allow_nan=False)


def _unit(v):
    return v / np.linalg.norm(v)


def _rotation(axis, angle):
    k = _unit(axis)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


@given(tensors)
def test_matrix_round_trip(q):
    M = qt.to_matrix(q)
    assert np.allclose(M, M.T) and abs(np.trace(M)) < 1e-12
    assert np.allclose(qt.from_matrix(M), q, atol=1e-12)
    assert np.isclose(qt.norm(q), np.linalg.norm(M), atol=1e-12)


@given(tensors)
def test_eigenvalues_match_dense_solver(q):
    lam = qt.eigvals(q)
    ref = np.sort(np.linalg.eigvalsh(qt.to_matrix(q)))[::-1]
    assert np.allclose(lam, ref, atol=1e-9 * max(1.0, qt.norm(q)))
    assert lam[0] >= lam[1] >= lam[2]


@given(tensors, vectors, angles)
def test_rotation_invariants(q, axis, angle):
    R = _rotation(axis, angle)
    r = qt.rotate(q, R)
    assert np.isclose(qt.norm(r), qt.norm(q), rtol=1e-10, atol=1e-12)
    assert np.allclose(qt.eigvals(r), qt.eigvals(q), atol=1e-9 * max(1.0, qt.norm(q)))
    assert np.isclose(bulk_f(P, r), bulk_f(P, q), rtol=1e-9, atol=1e-9)


@given(tensors)
def test_bulk_nonnegative(q):
    assert bulk_f(P, q) >= -1e-10


@given(tensors, st.floats(0.01, 10))
def test_phi_is_positively_homogeneous(q, t):
    assert qt.phi(q, S) >= 0
    assert np.isclose(qt.phi(t * q, S), t * qt.phi(q, S), rtol=1e-7, atol=1e-9)


@given(vectors)
def test_lift_is_on_the_manifold(v):
    L = qt.lift(_unit(v), S)
    assert np.isclose(qt.phi(L, S), 1.0)
    assert abs(bulk_f(P, L)) < 1e-12
    assert np.allclose(qt.retract(L, S), L, atol=1e-10)


@given(tensors, vectors)
def test_retraction_is_nearest_point(q, v):
    lam = qt.eigvals(q)
    assume(lam[0] - lam[1] > 1e-3)
    r = qt.retract(q, S)
    other = qt.lift(_unit(v), S)
    assert qt.norm(q - r) <= qt.norm(q - other) + 1e-9


@given(vectors, vectors, st.integers(8, 64))
def test_loop_class_is_rotation_invariant(axis, v, n):
    R = _rotation(axis, np.linalg.norm(v))
    th = np.linspace(0, 2 * np.pi, n + 1)[:-1]
    pts = np.stack([np.cos(th), np.sin(th)], -1)
    vals = qt.rotate(qt.geodesic_P0(th, S), R)
    assert dm.loop_class(dm.Loop(pts, vals), S) == dm.NONTRIVIAL
    twice = np.concatenate([th, th + 2 * np.pi])
    vals2 = qt.rotate(qt.geodesic_P0(twice, S), R)
    assert dm.loop_class(dm.Loop(np.concatenate([pts, pts]), vals2), S) == dm.TRIVIAL


@settings(max_examples=30)
@given(st.integers(2, 40), st.floats(0.01, 1.0), st.integers(0, 2))
def test_straight_path_length(n, h, axis):
    pts = np.zeros((n, 3))
    pts[:, axis] = h * np.arange(n)
    g = dm.SkeletonGraph.from_points(pts, h)
    assert np.isclose(g.length, (n - 1) * h)
    assert np.isclose(g.pruned(10 * n * h).length, (n - 1) * h)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trip(x):
    assert float(io.fmt(x)) == x
