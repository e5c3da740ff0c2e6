import numpy as np
import pytest

from conftest import random_rotation
from ldgdefects import field as fm
from ldgdefects import qtensor as qt
from ldgdefects.errors import BallOutsideDomain, EpsilonTooLarge, ResolutionTooCoarse
from ldgdefects.field import DIRICHLET, INTERIOR, OUTSIDE, Domain, QField
from ldgdefects.potential import bulk_f


def ball_domain(h=0.25, datum=None, radius=1.0):
    datum = datum or (lambda X: np.zeros(X.shape[:-1] + (5,)))
    return Domain.from_indicator(lambda X: np.sum(X**2, -1) < radius**2, (-radius,) * 3, (radius,) * 3, h, datum)


def annulus_section(h=0.1, datum=None):
    # (rho, z) section of a solid torus with major radius 2
    datum = datum or (lambda X: np.zeros(X.shape[:-1] + (5,)))
    return Domain.from_indicator(lambda X: (X[..., 0] - 2) ** 2 + X[..., 1] ** 2 < 0.81, (1.1, -0.9), (2.9, 0.9),
                                 h, datum, axisymmetric=True)


def random_field(domain, eps, rng, scale=1.0):
    return QField(domain, scale * rng.normal(size=domain.shape + (5,)), eps)


def brute_energy(field, params):
    """Loop over all cells and faces; an independent restatement of the discrete energy."""
    d = field.domain
    h = d.h
    cls = d.cell_class
    X = d.centers()
    el = bk = 0.0
    for i in zip(*np.nonzero(cls == INTERIOR)):
        w = X[i][0] if d.axisymmetric else 1.0
        bk += bulk_f(params, field.values[i]) / field.epsilon**2 * w * h**d.dim
        for ax in range(d.dim):
            for step in (-1, 1):
                j = list(i)
                j[ax] += step
                j = tuple(j)
                if cls[j] == OUTSIDE:
                    continue
                share = 0.5 if cls[j] == INTERIOR else 1.0
                wf = (X[i][0] + step * h / 2 if ax == 0 else X[i][0]) if d.axisymmetric else 1.0
                diff = field.values[j] - field.values[i]
                el += share * 0.5 * wf * np.sum(diff**2) * h ** (d.dim - 2)
    m = 2 * np.pi if d.axisymmetric else 1.0
    return m * el, m * bk


# ------------------------------------------------------------------- domain

def test_domain_classes_and_padding():
    d = ball_domain(0.25)
    assert d.shape == (10, 10, 10)
    assert set(np.unique(d.cell_class)) == {OUTSIDE, INTERIOR, DIRICHLET}
    # every interior face neighbour is live
    s = d.stencil
    assert np.all(d.cell_class.reshape(-1)[s.nbr] != OUTSIDE)
    assert np.all((s.split == 0.5) | (s.split == 1.0))


def test_domain_validation():
    cls = np.zeros((4, 4), np.int8)
    with pytest.raises(ValueError):
        Domain((4, 4), 0.1, (0, 0), cls, np.zeros((4, 4, 5)))
    cls[1, 1] = INTERIOR
    with pytest.raises(ValueError):   # interior cell with an outside neighbour
        Domain((4, 4), 0.1, (0, 0), cls, np.zeros((4, 4, 5)))
    cls[0, 1] = cls[2, 1] = cls[1, 0] = cls[1, 2] = DIRICHLET
    Domain((4, 4), 0.1, (0, 0), cls, np.zeros((4, 4, 5)))


def test_axisymmetric_off_axis():
    with pytest.raises(ValueError):
        Domain.from_indicator(lambda X: X[..., 0] ** 2 + X[..., 1] ** 2 < 0.25, (-0.5, -0.5), (0.5, 0.5), 0.1,
                              lambda X: np.zeros(X.shape[:-1] + (5,)), axisymmetric=True)


def test_resolution_guard(rng):
    d = ball_domain(0.25)
    with pytest.raises(ResolutionTooCoarse):
        random_field(d, 0.4, rng)
    random_field(d, 0.5, rng)


def test_dirichlet_values_enforced(rng):
    g = lambda X: np.stack([X[..., 0], X[..., 1], X[..., 2], 0 * X[..., 0], 0 * X[..., 0]], -1)
    d = ball_domain(0.25, g)
    f = random_field(d, 0.5, rng)
    assert np.array_equal(f.values[d.dirichlet], d.boundary[d.dirichlet])
    assert np.all(f.values[d.cell_class == OUTSIDE] == 0.0)


# ------------------------------------------------------------------ energy

def test_energy_matches_brute_force(params, rng):
    d = ball_domain(0.25)
    f = random_field(d, 0.5, rng, 0.5)
    e = fm.energy(f, params)
    el, bk = brute_energy(f, params)
    assert e.elastic == pytest.approx(el, rel=1e-12)
    assert e.bulk == pytest.approx(bk, rel=1e-12)
    assert e.total == pytest.approx(el + bk, rel=1e-12)


def test_axisymmetric_energy_matches_brute_force(params, rng):
    d = annulus_section(0.15)
    f = random_field(d, 0.3, rng, 0.5)
    e = fm.energy(f, params)
    el, bk = brute_energy(f, params)
    assert e.elastic == pytest.approx(el, rel=1e-12)
    assert e.bulk == pytest.approx(bk, rel=1e-12)


def test_uniaxial_constant_has_zero_energy(params):
    P = qt.lift(np.array([0.0, 0.6, 0.8]), params.s_star)
    d = ball_domain(0.2, lambda X: np.broadcast_to(P, X.shape[:-1] + (5,)))
    f = QField(d, np.broadcast_to(P, d.shape + (5,)), 0.4)
    assert abs(fm.energy(f, params).total) < 1e-12


def test_linear_field_energy_converges(params):
    # Q(x) = A + x.B: the elastic energy tends to |B|^2 |ball| / 2
    B = np.array([[1.0, 0.0, 0.5, 0.0, 0.0], [0.0, 0.3, 0.0, 0.0, 1.0], [0.2, 0.0, 0.0, 0.7, 0.0]])
    g = lambda X: X @ B
    exact = 0.5 * np.sum(B**2) * 4 / 3 * np.pi
    errs = []
    for h in (0.1, 0.05):
        d = ball_domain(h, g)
        f = QField(d, d.centers() @ B, 0.2)
        errs.append(abs(fm.energy(f, params).elastic - exact) / exact)
    assert errs[1] < errs[0] and errs[1] < 0.05


def test_axisymmetric_linear_energy(params):
    # Q = z B on the section: energy 2 pi int |B|^2 / 2 rho drho dz over the disk
    B = np.array([0.3, -0.2, 0.5, 0.1, 0.4])
    g = lambda X: X[..., 1:2] * B
    d = annulus_section(0.02, g)
    f = QField(d, d.centers()[..., 1:2] * B, 0.05)
    exact = 2 * np.pi * 0.5 * np.sum(B**2) * 2.0 * np.pi * 0.81
    assert fm.energy(f, params).elastic == pytest.approx(exact, rel=0.03)


def test_residual_is_energy_gradient(params, rng):
    d = ball_domain(0.25)
    f = random_field(d, 0.5, rng, 0.5)
    r = fm.el_residual(f, params)
    s = d.stencil
    h = 1e-6
    for k in rng.choice(len(s.idx), 5, replace=False):
        cell = np.unravel_index(s.idx[k], d.shape)
        for l in range(5):
            vp = f.values.copy()
            vm = f.values.copy()
            vp[cell + (l,)] += h
            vm[cell + (l,)] -= h
            fd = (fm.energy(f.with_values(vp), params).total - fm.energy(f.with_values(vm), params).total) / (2 * h)
            assert fd == pytest.approx(d.cell_volume * s.wc[k] * r[k, l], rel=1e-6, abs=1e-9)


def test_axisymmetric_residual_is_energy_gradient(params, rng):
    d = annulus_section(0.15)
    f = random_field(d, 0.3, rng, 0.5)
    r = fm.el_residual(f, params)
    s = d.stencil
    h = 1e-6
    for k in rng.choice(len(s.idx), 4, replace=False):
        cell = np.unravel_index(s.idx[k], d.shape)
        vp = f.values.copy()
        vm = f.values.copy()
        vp[cell + (2,)] += h
        vm[cell + (2,)] -= h
        fd = (fm.energy(f.with_values(vp), params).total - fm.energy(f.with_values(vm), params).total) / (2 * h)
        assert fd == pytest.approx(2 * np.pi * d.cell_volume * s.wc[k] * r[k, 2], rel=1e-6)


def test_rotation_invariance(params, rng):
    # a rotation of values (not of space) leaves both energy terms unchanged
    d = ball_domain(0.25)
    f = random_field(d, 0.5, rng, 0.5)
    R = random_rotation(rng)
    e0, e1 = fm.energy(f, params), fm.energy(fm.rotated(f, R), params)
    assert e1.total == pytest.approx(e0.total, rel=1e-11)


def test_per_cell_density_sums_to_total(params, rng):
    d = ball_domain(0.25)
    f = random_field(d, 0.5, rng, 0.5)
    e = fm.energy(f, params)
    assert np.sum(e.per_cell_density) * d.cell_volume == pytest.approx(e.total, rel=1e-12)


# ------------------------------------------------------------ ball measures

def test_energy_in_ball(params, rng):
    d = ball_domain(0.1)
    f = random_field(d, 0.2, rng, 0.3)
    small = fm.energy_in_ball(f, params, (0, 0, 0), 0.3)
    big = fm.energy_in_ball(f, params, (0, 0, 0), 0.8)
    assert 0 < small < big < fm.energy(f, params).total
    with pytest.raises(BallOutsideDomain):
        fm.energy_in_ball(f, params, (0, 0, 0), 5.0)


def test_mu_measure(params, rng):
    d = ball_domain(0.1)
    f = random_field(d, 0.2, rng, 0.3)
    assert fm.mu_measure(f, params) == pytest.approx(fm.energy(f, params).total / abs(np.log(0.2)))
    with pytest.raises(EpsilonTooLarge):
        fm.mu_measure(QField(d, f.values, 1.0), params)


def test_truncate(rng):
    d = ball_domain(0.25)
    f = random_field(d, 0.5, rng, 3.0)
    t = fm.truncate(f, 1.0)
    assert qt.norm(t.interior_values()).max() <= 1.0 + 1e-12
    small = qt.norm(f.interior_values()) <= 1.0
    assert np.array_equal(t.interior_values()[small], f.interior_values()[small])


def test_sample_at_centres(rng):
    d = ball_domain(0.25)
    f = random_field(d, 0.5, rng)
    X = d.centers()[d.interior][:10]
    assert np.allclose(f.sample(X), f.values[d.interior][:10])


def test_central_gradient_of_linear_field():
    B = np.arange(15, dtype=float).reshape(3, 5) / 10
    d = ball_domain(0.1, lambda X: X @ B)
    f = QField(d, d.centers() @ B, 0.2)
    G = fm.central_gradient(f)
    inner = d.interior & (np.sum(d.centers() ** 2, -1) < 0.8**2)
    assert np.allclose(G[inner], B[None], atol=1e-12)


# ----------------------------------------------------------------------- io

def test_vtk_round_trip(params, rng, tmp_path):
    d = ball_domain(0.25)
    f = random_field(d, 0.5, rng)
    path = tmp_path / "f.vtk"
    fm.write_vtk(path, f, params)
    g, p2 = fm.read_vtk(path)
    assert np.array_equal(g.values, f.values)
    assert np.array_equal(g.domain.cell_class, d.cell_class)
    assert g.epsilon == f.epsilon and g.domain.h == d.h
    assert (p2.a, p2.b, p2.c) == (params.a, params.b, params.c)


def test_vtk_round_trip_axisymmetric(params, rng, tmp_path):
    d = annulus_section(0.15)
    f = random_field(d, 0.3, rng)
    path = tmp_path / "s.vtk"
    fm.write_vtk(path, f, params)
    g, _ = fm.read_vtk(path)
    assert g.domain.axisymmetric
    assert fm.energy(g, params).total == fm.energy(f, params).total
