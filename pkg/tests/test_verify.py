import numpy as np
import pytest

from ldgdefects import io
from ldgdefects import scenario as sc
from ldgdefects import verify as vf
from ldgdefects.errors import BallTooSmall, SweepTooShort
from ldgdefects.solver import SolveConfig, relax

GRAD_TOL = 1e-6


@pytest.fixture(scope="module")
def disk_solution(params):
    f0 = sc.disclination_profile(params, 1.0, 0.5, 0.1, 40)
    f, rep = relax(f0, params, SolveConfig(grad_tol=GRAD_TOL))
    assert rep.converged
    return f


@pytest.fixture(scope="module")
def perturbed(disk_solution):
    rng = np.random.default_rng(7)
    d = disk_solution.domain
    v = disk_solution.values.copy()
    v[d.interior] += 0.05 * rng.normal(size=v[d.interior].shape)
    return disk_solution.with_values(v)


@pytest.fixture
def stretched_profile(params):
    # a profile whose core is four times too wide is far from critical
    return sc.disclination_profile(params, 1.0, 0.5, 0.1, 40).with_values(
        sc.disclination_profile(params, 1.0, 0.5, 0.4, 40).values)


def test_el_residual(params, disk_solution, perturbed):
    assert vf.check_el_residual(disk_solution, params, GRAD_TOL).passed
    rep = vf.check_el_residual(perturbed, params, GRAD_TOL)
    assert not rep.passed and rep.residual > 10 * rep.tolerance


def test_pohozaev_on_solution(params, disk_solution):
    rep = vf.check_pohozaev(disk_solution, params, (0.0, 0.0), 0.5)
    assert rep.passed
    assert rep.metadata["region"] == "ball(0.0 0.0)r0.5"


def test_pohozaev_rejects_non_critical(params, stretched_profile):
    rep = vf.check_pohozaev(stretched_profile, params, (0.0, 0.0), 0.5)
    assert not rep.passed


def test_pohozaev_ball_guards(params, disk_solution):
    with pytest.raises(BallTooSmall):
        vf.check_pohozaev(disk_solution, params, (0.0, 0.0), 0.1)


def test_monotonicity(params, disk_solution):
    rep = vf.check_monotonicity(disk_solution, params, (0.0, 0.0), [0.4, 0.2, 0.6, 0.3])
    assert rep.passed
    vals = rep.metadata["values"]
    # in two dimensions the ball energy itself must grow
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_star_bound(params, disk_solution):
    rep = vf.check_star_bound(disk_solution, params, (0.0, 0.0), 0.5)
    assert rep.passed and rep.metadata["E"] > 0


def test_stress_energy(params, disk_solution, perturbed):
    good = vf.check_stress_energy(disk_solution, params, (-0.5, -0.5), (0.5, 0.5))
    assert good.passed and len(good.residuals) == vf.TOLERANCES["stress_fields"]
    bad = vf.check_stress_energy(perturbed, params, (-0.5, -0.5), (0.5, 0.5))
    assert bad.residual > good.residual
    with pytest.raises(ValueError):
        vf.check_stress_energy(disk_solution, params, (-0.9, -0.9), (0.9, 0.9))


def test_stress_refinement_ratio():
    c = vf.CheckReport("stress_energy", [0.2], 1.0, True, {"eps": 0.1, "h": 0.05})
    f = vf.CheckReport("stress_energy", [0.08], 1.0, True, {"eps": 0.1, "h": 0.025})
    rep = vf.check_stress_refinement(c, f)
    assert rep.residual == pytest.approx(0.4) and rep.tolerance == pytest.approx(0.6)
    assert rep.passed


def test_fit_log_slope_exact():
    eps = [0.2, 0.1, 0.05, 0.025]
    E = [3.5 * np.log(1 / e) + 1.25 for e in eps]
    slope, icpt = vf.fit_log_slope(eps, E)
    assert slope == pytest.approx(3.5, abs=1e-12) and icpt == pytest.approx(1.25, abs=1e-12)


def test_kappa_sweep(params):
    k = params.kappa_star
    solve = lambda e: k * np.log(1 / e) + 2.0
    rep = vf.kappa_sweep(solve, [0.1, 0.05, 0.025], k)
    assert rep.passed and rep.residual < 1e-12
    off = vf.kappa_sweep(lambda e: 0.8 * solve(e), [0.1, 0.05, 0.025], k)
    assert not off.passed and off.residual == pytest.approx(0.2)
    flat = vf.kappa_sweep(lambda e: 1.0, [0.1, 0.05, 0.025], 0.0, abs_tol=0.35)
    assert flat.passed
    with pytest.raises(SweepTooShort):
        vf.kappa_sweep(solve, [0.1, 0.1, 0.05], k)


def test_write_reports(tmp_path):
    reps = [vf.CheckReport("a", [0.5], 1.0, True, {"eps": 0.1, "h": 0.05, "region": "x"}),
            vf.CheckReport("b", [2.0], 1.0, False)]
    vf.write_reports(tmp_path / "c.csv", reps, {"seed": 3})
    meta, cols, rows = io.read_csv(tmp_path / "c.csv")
    assert meta == {"seed": "3"}
    assert tuple(cols) == vf.REPORT_COLUMNS
    assert rows[0] == ["a", "0.5", "1.0", "true", "0.1", "0.05", "x"]
    assert rows[1][3] == "false"
