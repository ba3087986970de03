"""Viscous Burgers equation u_t + u u_x = kappa u_xx on [0, L], u(0) = u(L) = 0.

Central differences on N equal intervals; the state is the N-1 interior values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from ..core import EstimationSpace, ModelSpec, Weighting


def default_u0(x):
    return -2 + np.cos(x) + np.sin(x) + np.cos(2 * x) + np.sin(2 * x)


@dataclass(frozen=True)
class BurgersConfig:
    L: float = 2 * math.pi
    T: float = 5.0
    kappa: float = 0.14
    N: int = 40
    Nt: int = 20
    KF: int = 2
    sensors: Optional[Tuple[float, ...]] = None  # defaults to L/4, L/2, 3L/4
    substeps: int = 40
    advection: bool = True
    weighting: str = "unweighted"
    u0: Callable = field(default=default_u0, compare=False)

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.N < 4:
            raise ValueError("need N >= 4 grid intervals")
        if self.KF < 1 or self.Nt < 1 or self.substeps < 1:
            raise ValueError("KF, Nt and substeps must be positive")
        if any(not 0 < x < self.L for x in self.sensor_positions):
            raise ValueError("sensors must lie in (0, L)")

    @property
    def sensor_positions(self) -> Tuple[float, ...]:
        if self.sensors is None:
            return (self.L / 4, 2 * self.L / 4, 3 * self.L / 4)
        return tuple(float(s) for s in self.sensors)

    @property
    def dx(self) -> float:
        return self.L / self.N


def spline_matrix(nodes: np.ndarray, points) -> np.ndarray:
    """Rows evaluate the natural cubic spline through (nodes, values) at `points`."""
    spline = CubicSpline(nodes, np.eye(nodes.size), bc_type="natural", axis=0)
    return spline(np.asarray(points, float))


def burgers_model(cfg: BurgersConfig = BurgersConfig()) -> ModelSpec:
    N, dx, kappa = cfg.N, cfg.dx, cfg.kappa
    nodes = np.linspace(0.0, cfg.L, N + 1)
    interior = nodes[1:-1]
    # spline through all N+1 nodes with the end values pinned to zero
    H = spline_matrix(nodes, cfg.sensor_positions)[:, 1:-1]
    adv = 1.0 if cfg.advection else 0.0
    weight = 2 * math.pi / N

    def rhs(t, u):
        full = np.zeros(u.shape[:-1] + (N + 1,))
        full[..., 1:-1] = u
        left, right = full[..., :-2], full[..., 2:]
        return (-adv / (2 * dx)) * u * (right - left) + (kappa / dx ** 2) * (right + left - 2 * u)

    def observe(u):
        return u @ H.T

    def lift(u):
        vals = np.concatenate([[0.0], np.asarray(u, float), [0.0]])
        return CubicSpline(nodes, vals, bc_type="natural")

    def restrict(v):
        return np.asarray(v(interior), dtype=float)

    return ModelSpec(
        id="burgers", dim=N - 1, rhs=rhs, observe=observe,
        state_inner=lambda a, b: float(weight * np.dot(a, b)),
        lift=lift, restrict=restrict,
        sample_times=np.linspace(0.0, cfg.T, cfg.Nt + 1), n_outputs=len(cfg.sensor_positions),
        domain=(0.0, cfg.L), grid_size=N, resolution=N, substeps=cfg.substeps,
        weighting=Weighting.parse(cfg.weighting), nominal=cfg.u0(interior),
        params={"kappa": kappa, "sensors": cfg.sensor_positions},
    )


def burgers_estimation_space(cfg: BurgersConfig = BurgersConfig()) -> EstimationSpace:
    """{cos(kx) - 1, sin(kx)} for k = 1..KF, i.e. Fourier modes with alpha_0/2 + sum alpha_k = 0."""
    x = np.linspace(0.0, cfg.L, cfg.N + 1)[1:-1]
    w = 2 * math.pi / cfg.L
    basis, labels = [], []
    for k in range(1, cfg.KF + 1):
        basis.append(np.cos(k * w * x) - 1)
        labels.append(f"alpha_{k}")
    for k in range(1, cfg.KF + 1):
        basis.append(np.sin(k * w * x))
        labels.append(f"beta_{k}")
    weight = 2 * math.pi / cfg.N
    return EstimationSpace(basis, labels, lambda a, b: float(weight * np.dot(a, b)),
                           id=f"fourier{cfg.KF}")
