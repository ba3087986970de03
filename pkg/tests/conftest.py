import numpy as np
import pytest

from partobs.core import EstimationSpace, ModelSpec


def linear_model(A, C, T=1.0, Nt=50, substeps=2, weighting="dt", u0=None):
    """du/dt = A u observed through y = C u, integrated by RK4."""
    A = np.asarray(A, float)
    C = np.atleast_2d(np.asarray(C, float))
    n = A.shape[0]
    return ModelSpec(
        id="linear", dim=n, rhs=lambda t, u: u @ A.T, observe=lambda u: u @ C.T,
        state_inner=lambda a, b: float(np.dot(a, b)),
        lift=lambda u: (lambda x: np.interp(x, np.linspace(0, 1, n), u)),
        restrict=lambda f: np.asarray(f(np.linspace(0, 1, n)), float),
        sample_times=np.linspace(0.0, T, Nt + 1), n_outputs=C.shape[0], grid_size=n,
        resolution=n, substeps=substeps, weighting=weighting, nominal=u0,
    )


def euclidean_space(vectors, id="rand"):
    return EstimationSpace(list(vectors), [f"v{i}" for i in range(len(vectors))],
                           lambda a, b: float(np.dot(a, b)), id=id)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
