"""1-D nonlinear shallow water on [-1, 1] by a continuous LGL spectral element method.

State: depth h and discharge m = u h at the global (interface-shared) nodes.
Element derivatives are averaged at shared interface nodes, which is the
lumped-mass continuous Galerkin form; with LGL quadrature it conserves mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from ..core import EstimationSpace, ModelSpec, Weighting
from ..integrate import rk4_states
from .lgl import legendre_vandermonde, lgl_nodes


class DryStateError(RuntimeError):
    pass


def gaussian_h0(x):
    return 0.1 * np.exp(-8 * (x - 0.5) ** 2) + 0.2


def literal_h0(x):
    return 0.1 * np.exp(-8 * (x - 0.5)) + 0.2


def sloped_bed(x):
    return 0.1 * (1 - x)


@dataclass(frozen=True)
class SweConfig:
    elements: int = 54
    Np: int = 4
    g: float = 9.81
    T: float = 1.0
    Nt: int = 800
    sensors: Tuple[float, ...] = (0.2, 0.5, 0.8)
    KF: int = 6
    substeps: int = 0  # 0: pick from a CFL estimate
    cfl: float = 0.5
    source: bool = True  # -g h d(h_b)/dx in the momentum equation
    literal_h0: bool = False
    h0_is_surface: bool = False  # True: depth = h0 - h_b
    boundary: str = "reflective"  # or "outflow"
    filter_strength: float = 1.0  # top Legendre mode damped by exp(-strength) per step
    weighting: str = "dt"
    h0: Optional[Callable] = field(default=None, compare=False)
    bed: Callable = field(default=sloped_bed, compare=False)

    def __post_init__(self):
        if self.elements < 2 or self.Np < 2:
            raise ValueError("need elements >= 2 and Np >= 2")
        if self.g <= 0 or self.T <= 0 or self.Nt < 1:
            raise ValueError("g, T and Nt must be positive")
        if self.boundary not in ("reflective", "outflow"):
            raise ValueError("boundary must be 'reflective' or 'outflow'")
        if any(not -1 < s < 1 for s in self.sensors):
            raise ValueError("sensors must lie in (-1, 1)")

    @property
    def dt(self) -> float:
        return self.T / self.Nt

    def surface0(self):
        if self.h0 is not None:
            return self.h0
        return literal_h0 if self.literal_h0 else gaussian_h0


@dataclass(frozen=True)
class SpectralMesh:
    x: np.ndarray  # global nodes, ascending
    mass: np.ndarray  # lumped LGL mass per global node
    D: np.ndarray  # global derivative (interface-averaged)
    F: np.ndarray  # global top-mode filter (interface-averaged)
    min_spacing: float


def build_mesh(elements: int, Np: int, filter_strength: float = 1.0) -> SpectralMesh:
    xi, w, Dref = lgl_nodes(Np)
    width = 2.0 / elements
    G = elements * Np + 1
    local = np.arange(Np + 1)
    x = np.empty(G)
    mass = np.zeros(G)
    # assembly: average element contributions at shared nodes
    D = np.zeros((G, G))
    F = np.zeros((G, G))
    V = legendre_vandermonde(xi, Np)
    damp = np.ones(Np + 1)
    damp[-1] = math.exp(-filter_strength)
    Floc = V @ np.diag(damp) @ np.linalg.inv(V)
    count = np.zeros(G)
    for e in range(elements):
        idx = e * Np + local
        x[idx] = -1.0 + e * width + (xi + 1) * width / 2
        mass[idx] += w * width / 2
        D[np.ix_(idx, idx)] += Dref * (2 / width)
        F[np.ix_(idx, idx)] += Floc
        count[idx] += 1
    D /= count[:, None]
    F /= count[:, None]
    x[0], x[-1] = -1.0, 1.0
    return SpectralMesh(x, mass, D, F, float(np.diff(x).min()))


def interpolation_matrix(nodes: np.ndarray, points) -> np.ndarray:
    """Piecewise-linear interpolation weights between neighbouring nodes."""
    P = np.zeros((len(points), nodes.size))
    for r, p in enumerate(points):
        j = int(np.clip(np.searchsorted(nodes, p) - 1, 0, nodes.size - 2))
        a = (p - nodes[j]) / (nodes[j + 1] - nodes[j])
        P[r, j], P[r, j + 1] = 1 - a, a
    return P


def swe_model(cfg: SweConfig = SweConfig()) -> ModelSpec:
    mesh = build_mesh(cfg.elements, cfg.Np, cfg.filter_strength)
    x, D, Fg, M = mesh.x, mesh.D, mesh.F, mesh.mass
    G = x.size
    g = cfg.g
    bed_slope = D @ cfg.bed(x) if cfg.source else np.zeros(G)
    reflective = cfg.boundary == "reflective"
    P = interpolation_matrix(x, cfg.sensors)
    times = np.linspace(0.0, cfg.T, cfg.Nt + 1)

    depth0 = np.asarray(cfg.surface0()(x), dtype=float)
    if cfg.h0_is_surface:
        depth0 = depth0 - cfg.bed(x)
    if np.any(depth0 <= 0):
        raise DryStateError("dry state")
    state0 = np.concatenate([depth0, np.zeros(G)])

    def rhs(t, U):
        h, m = U[..., :G], U[..., G:]
        dh = -(m @ D.T)
        flux = m * m / h + 0.5 * g * h * h
        dm = -(flux @ D.T) - g * h * bed_slope
        if reflective:
            dm[..., 0] = 0.0
            dm[..., -1] = 0.0
        return np.concatenate([dh, dm], axis=-1)

    def post_step(U):
        U = U @ _blockdiag_T
        if reflective:
            U[..., G] = 0.0
            U[..., -1] = 0.0
        else:
            # zero-gradient outflow: copy the first interior node outward
            for a, b in ((0, 1), (G - 1, G - 2), (G, G + 1), (2 * G - 1, 2 * G - 2)):
                U[..., a] = U[..., b]
        return U

    _blockdiag_T = np.zeros((2 * G, 2 * G))
    _blockdiag_T[:G, :G] = Fg.T
    _blockdiag_T[G:, G:] = Fg.T

    if cfg.substeps > 0:
        substeps = cfg.substeps
    else:
        speed = math.sqrt(g * max(depth0.max(), 1e-12))
        substeps = max(1, math.ceil(cfg.dt * speed / (cfg.cfl * mesh.min_spacing)))

    def propagate(U0):
        states = rk4_states(rhs, times, U0, substeps, post_step)
        if np.any(states[..., :G] <= 0):
            raise DryStateError("dry state")
        return states

    def observe(U):
        return U[..., :G] @ P.T

    def lift(U):
        h = np.asarray(U, float)[:G]
        return lambda xs: np.interp(xs, x, h)

    def restrict(f):
        return np.concatenate([np.asarray(f(x), float), np.zeros(G)])

    def inner(a, b):
        return float(np.dot(M * a[:G], b[:G]) + np.dot(M * a[G:], b[G:]))

    return ModelSpec(
        id="swe", dim=2 * G, rhs=rhs, observe=observe, state_inner=inner,
        lift=lift, restrict=restrict, sample_times=times, n_outputs=len(cfg.sensors),
        domain=(-1.0, 1.0), grid_size=G, resolution=cfg.elements, substeps=substeps,
        weighting=Weighting.parse(cfg.weighting), propagate=propagate, nominal=state0,
        params={"g": g, "Np": cfg.Np, "nodes": x, "mass": M, "post_step": post_step},
    )


def swe_estimation_space(cfg: SweConfig = SweConfig()) -> EstimationSpace:
    """{1/2, cos(k pi x), sin(k pi x)}, k = 1..KF, applied to the depth field only."""
    mesh = build_mesh(cfg.elements, cfg.Np, cfg.filter_strength)
    x, M = mesh.x, mesh.mass
    G = x.size
    zeros = np.zeros(G)
    basis = [np.concatenate([np.full(G, 0.5), zeros])]
    labels = ["alpha_0"]
    for k in range(1, cfg.KF + 1):
        basis.append(np.concatenate([np.cos(k * np.pi * x), zeros]))
        labels.append(f"alpha_{k}")
    for k in range(1, cfg.KF + 1):
        basis.append(np.concatenate([np.sin(k * np.pi * x), zeros]))
        labels.append(f"beta_{k}")

    def inner(a, b):
        return float(np.dot(M * a[:G], b[:G]))

    return EstimationSpace(basis, labels, inner, id=f"fourier{cfg.KF}")
