"""Two-state system x1' = x1 + delta x2, x2' = x2 observed through x1.

The quantity of interest is x(T). Writing z(tau) = x(T - tau) turns it into an
initial state, z' = -A z, so the ordinary perturbation machinery applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import EstimationSpace, ModelSpec, Weighting


@dataclass(frozen=True)
class LinearPairConfig:
    delta: float = 0.1
    T: float = 10.0
    Nt: int = 4000
    substeps: int = 1
    weighting: str = "dt"

    def __post_init__(self):
        if self.T <= 0 or self.Nt < 1 or self.substeps < 1:
            raise ValueError("T, Nt and substeps must be positive")


def system_matrix(delta: float) -> np.ndarray:
    return np.array([[1.0, delta], [0.0, 1.0]])


def linear_pair_model(cfg: LinearPairConfig = LinearPairConfig()) -> ModelSpec:
    Arev = -system_matrix(cfg.delta)
    times = np.linspace(0.0, cfg.T, cfg.Nt + 1)

    def rhs(t, z):
        return z @ Arev.T

    def observe(z):
        return z[..., :1]

    return ModelSpec(
        id="linpair", dim=2, rhs=rhs, observe=observe,
        state_inner=lambda a, b: float(np.dot(a, b)),
        lift=lambda z: (lambda x: np.asarray(z, float)[np.asarray(x, int)]),
        restrict=lambda v: np.array([v(0), v(1)], dtype=float),
        sample_times=times, n_outputs=1, domain=(0.0, 1.0), grid_size=2,
        resolution=2, substeps=cfg.substeps, weighting=Weighting.parse(cfg.weighting),
        params={"delta": cfg.delta, "T": cfg.T},
    )


def linear_pair_space() -> EstimationSpace:
    return EstimationSpace([np.array([1.0, 0.0]), np.array([0.0, 1.0])], ["x1", "x2"],
                           lambda a, b: float(np.dot(a, b)), id="x(T)")


def printed_alphas(T: float):
    """Coefficients alpha_11, alpha_12 (= alpha_21), alpha_22 of the output quadratic form."""
    e = math.exp(-2 * T)
    a11 = 1 - e
    a12 = (T + 0.5) * e - 0.5
    a22 = 0.5 - (T * T + T + 0.5) * e
    return a11, a12, a22


def printed_quadratic_form(delta: float, T: float) -> np.ndarray:
    a11, a12, a22 = printed_alphas(T)
    return np.array([[a11, a12 * delta], [a12 * delta, a22 * delta ** 2]])


def closed_form_sigma(delta: float, T: float) -> float:
    """Square root of the smallest eigenvalue of the printed quadratic form (epsilon/rho)."""
    lam = np.linalg.eigvalsh(printed_quadratic_form(delta, T))[0]
    return math.sqrt(max(lam, 0.0))


def output_gramian_integral(delta: float, T: float) -> np.ndarray:
    """int_0^T y^2 dt as a quadratic form in x(T), integrated analytically term by term."""
    e = math.exp(-2 * T)
    g11 = (1 - e) / 2
    g12 = (T / 2 + 0.25) * e - 0.25
    g22 = 0.25 - (T * T / 2 + T / 2 + 0.25) * e
    return np.array([[g11, g12 * delta], [g12 * delta, g22 * delta ** 2]])
