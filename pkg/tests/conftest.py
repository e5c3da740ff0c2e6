import numpy as np
import pytest

from ldgdefects import qtensor as qt
from ldgdefects.potential import MaterialParams


@pytest.fixture(scope="session")
def params():
    return MaterialParams(1.0, 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_rotation(rng):
    A = rng.normal(size=(3, 3))
    Qm, R = np.linalg.qr(A)
    Qm = Qm * np.sign(np.diag(R))
    if np.linalg.det(Qm) < 0:
        Qm[:, 0] *= -1
    return Qm


def random_frame(rng):
    """Orthonormal pair (n, m)."""
    R = random_rotation(rng)
    return R[:, 0], R[:, 1]


def assemble(s, r, n, m):
    """s(n n - Id/3) + s r (m m - Id/3) as a 5-vector."""
    return s * qt.outer_unit(n) + s * r * qt.outer_unit(m)


def jacobi_oracle(M, tol=1e-15, max_sweeps=100):
    """Cyclic Jacobi eigenvalue iteration for a symmetric 3x3 matrix."""
    A = np.array(M, dtype=float)
    V = np.eye(3)
    for _ in range(max_sweeps):
        off = np.sqrt(sum(A[i, j] ** 2 for i in range(3) for j in range(3) if i != j))
        if off < tol * max(1.0, np.abs(A).max()):
            break
        for p in range(2):
            for q in range(p + 1, 3):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = 0.5 * np.arctan2(2 * A[p, q], A[q, q] - A[p, p])
                c, s = np.cos(theta), np.sin(theta)
                J = np.eye(3)
                J[p, p] = c
                J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                V = V @ J
    lam = np.diag(A)
    order = np.argsort(-lam)
    return lam[order], V[:, order]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
