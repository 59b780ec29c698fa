import numpy as np
import pytest

from stabchan import qmat


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


def random_valid_pair(dim, rng):
    """Random (sigma, B) with <v_max|B|v_max> <= lambda_max."""
    sigma = qmat.random_density(dim, rng)
    spec = qmat.eigh_desc(sigma)
    lam, v = spec.eigenvalues[0], spec.eigenvectors[:, 0]
    b = qmat.random_density(dim, rng)
    weight = qmat.expectation(b, v)
    if weight > lam:
        w = spec.eigenvectors[:, 1]
        a = lam / weight * rng.uniform(0.2, 1.0)
        b = a * b + (1 - a) * qmat.projector(w)
    return sigma, b


def max_abs(a, b=0):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


ACCEPTANCE_RESULTS = {}


def record_criterion(number, title, ok, detail=""):
    ACCEPTANCE_RESULTS[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, ok, detail = ACCEPTANCE_RESULTS[number]
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}"
        terminalreporter.write_line(line + (f" -- {detail}" if detail else ""))
