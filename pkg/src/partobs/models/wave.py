"""Finite-difference wave equation u_tt = u_xx on (0, L), fixed ends, boundary sensor u_N/h."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import EstimationSpace, ModelSpec, Weighting
from ..integrate import verlet_states


@dataclass(frozen=True)
class WaveConfig:
    L: float = 1.0
    T: float = 4.0
    N: int = 50
    Nt: int = 400
    substeps: int = 100
    weighting: str = "dt"

    def __post_init__(self):
        if self.N < 2 or self.L <= 0 or self.T <= 0 or self.Nt < 1 or self.substeps < 1:
            raise ValueError("invalid wave configuration")

    @property
    def h(self) -> float:
        return self.L / (self.N + 1)


@dataclass(frozen=True)
class WaveModel:
    """Second-order view of the model plus its discrete energy functionals."""

    cfg: WaveConfig
    model: ModelSpec

    @property
    def h(self) -> float:
        return self.cfg.h

    def accel(self, q):
        return _laplacian(q, self.h)

    def energy(self, q, v):
        """E_h = h/2 sum_{j=0}^{N} (|u'_j|^2 + |(u_{j+1} - u_j)/h|^2), with u_0 = u_{N+1} = 0."""
        h = self.h
        pad = [(0, 0)] * (q.ndim - 1) + [(1, 1)]
        grad = np.diff(np.pad(q, pad), axis=-1) / h
        return h / 2 * ((v ** 2).sum(-1) + (grad ** 2).sum(-1))

    def boundary_integrand(self, q):
        return (q[..., -1] / self.h) ** 2

    def grid(self):
        return self.h * np.arange(1, self.cfg.N + 1)


def _laplacian(q, h):
    out = -2 * q
    out[..., 1:] += q[..., :-1]
    out[..., :-1] += q[..., 1:]
    return out / h ** 2


def wave_model(cfg: WaveConfig = WaveConfig()) -> WaveModel:
    N, h = cfg.N, cfg.h
    times = np.linspace(0.0, cfg.T, cfg.Nt + 1)
    x = h * np.arange(1, N + 1)

    def rhs(t, u):
        q, v = u[..., :N], u[..., N:]
        return np.concatenate([v, _laplacian(q, h)], axis=-1)

    def observe(u):
        return u[..., N - 1:N] / h

    def propagate(U0):
        Q, V = verlet_states(lambda q: _laplacian(q, h), times, U0[..., :N], U0[..., N:],
                             cfg.substeps)
        return np.concatenate([Q, V], axis=-1)

    def lift(u):
        q = np.concatenate([[0.0], np.asarray(u, float)[:N], [0.0]])
        nodes = np.concatenate([[0.0], x, [cfg.L]])
        return lambda xs: np.interp(xs, nodes, q)

    def restrict(f):
        return np.concatenate([np.asarray(f(x), float), np.zeros(N)])

    model = ModelSpec(
        id="wave", dim=2 * N, rhs=rhs, observe=observe,
        state_inner=lambda a, b: float(h * np.dot(a, b)),
        lift=lift, restrict=restrict, sample_times=times, n_outputs=1,
        domain=(0.0, cfg.L), grid_size=N + 1, resolution=N, substeps=cfg.substeps,
        weighting=Weighting.parse(cfg.weighting), propagate=propagate,
        params={"L": cfg.L, "T": cfg.T, "h": h},
    )
    return WaveModel(cfg, model)


def eigenmode(cfg: WaveConfig, k: int) -> np.ndarray:
    """k-th finite-difference eigenmode sin(j k pi/(N+1)), j = 1..N."""
    j = np.arange(1, cfg.N + 1)
    return np.sin(j * k * np.pi / (cfg.N + 1))


def wave_position_space(cfg: WaveConfig, modes) -> EstimationSpace:
    """Initial displacements along the given FD eigenmodes, zero initial velocity."""
    basis = [np.concatenate([eigenmode(cfg, k), np.zeros(cfg.N)]) for k in modes]
    h = cfg.h
    return EstimationSpace(basis, [f"mode_{k}" for k in modes],
                           lambda a, b: float(h * np.dot(a, b)), id="fdmodes")
