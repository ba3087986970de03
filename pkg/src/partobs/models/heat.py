"""Heat equation u_t = u_xx on [0, L] with Dirichlet ends, in sine-mode coordinates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import EstimationSpace, ModelSpec, Weighting, simpson


@dataclass(frozen=True)
class HeatConfig:
    L: float = 2 * math.pi
    T: float = 10.0
    x0: float = 0.5
    N: int = 8
    Nt: int = 2000
    weighting: str = "dt"

    def __post_init__(self):
        if not 0 < self.x0 < self.L:
            raise ValueError("sensor must lie strictly inside (0, L)")
        if self.N < 1 or self.Nt < 1 or self.T <= 0:
            raise ValueError("N, Nt and T must be positive")


def decay_rates(n: int, L: float) -> np.ndarray:
    k = np.arange(1, n + 1)
    return (k * np.pi / L) ** 2


def sensor_row(n: int, L: float, x0: float) -> np.ndarray:
    k = np.arange(1, n + 1)
    return np.sin(k * np.pi * x0 / L)


def heat_model(cfg: HeatConfig = HeatConfig()) -> ModelSpec:
    N, L = cfg.N, cfg.L
    lam = decay_rates(N, L)
    c = sensor_row(N, L, cfg.x0)
    times = np.linspace(0.0, cfg.T, cfg.Nt + 1)
    decay = np.exp(-np.outer(times, lam))  # (n_times, N)
    modes = np.arange(1, N + 1)

    def rhs(t, u):
        return -lam * u

    def observe(u):
        return (u @ c)[..., None]

    def propagate(U0):
        return decay[:, None, :] * U0[None, :, :]

    def lift(u):
        u = np.asarray(u, float)
        return lambda x: np.sin(np.multiply.outer(np.asarray(x, float), modes) * np.pi / L) @ u

    quad_n = max(64, 16 * N)
    xq = np.linspace(0.0, L, quad_n + 1)
    basis_q = np.sin(np.outer(modes, xq) * np.pi / L)

    def restrict(v):
        fx = np.asarray(v(xq), float)
        return np.array([2 / L * simpson(fx * row, 0.0, L) for row in basis_q])

    return ModelSpec(
        id="heat", dim=N, rhs=rhs, observe=observe,
        state_inner=lambda a, b: float(np.dot(a, b)),
        lift=lift, restrict=restrict, sample_times=times, n_outputs=1,
        domain=(0.0, L), x_weight=2 / L, grid_size=N, resolution=N,
        weighting=Weighting.parse(cfg.weighting), propagate=propagate,
        params={"L": L, "T": cfg.T, "x0": cfg.x0},
    )


def heat_estimation_space(s: int, N: int) -> EstimationSpace:
    """First s sine modes as unit coordinate vectors of an N-mode state."""
    if not 1 <= s <= N:
        raise ValueError("need 1 <= s <= N")
    basis = [np.eye(N)[k] for k in range(s)]
    return EstimationSpace(basis, [f"mode_{k + 1}" for k in range(s)],
                           lambda a, b: float(np.dot(a, b)), id=f"modes{s}")


def heat_gramian_closed_form(s: int, cfg: HeatConfig = HeatConfig()) -> np.ndarray:
    """int_0^T e^{-A t} C^T C e^{-A t} dt for the first s modes, entrywise."""
    lam = decay_rates(s, cfg.L)
    c = sensor_row(s, cfg.L, cfg.x0)
    total = lam[:, None] + lam[None, :]
    return np.outer(c, c) * (-np.expm1(-total * cfg.T)) / total
