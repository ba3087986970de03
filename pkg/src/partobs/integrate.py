"""Fixed-step time integration sampled at a model's output times."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import ModelSpec, OutputSeries

BLOWUP_THRESHOLD = 1e12


class BlowUpError(RuntimeError):
    def __init__(self, t: float, rows=None):
        self.t = float(t)
        self.rows = [] if rows is None else list(rows)
        super().__init__(f"blow-up at t={self.t:.6g}")


def _check(U: np.ndarray, t: float):
    bad = ~np.isfinite(U) | (np.abs(U) > BLOWUP_THRESHOLD)
    if bad.any():
        rows = np.nonzero(bad.reshape(-1, U.shape[-1]).any(axis=1))[0]
        raise BlowUpError(t, rows)


@dataclass(frozen=True)
class Trajectory:
    model_id: str
    states: np.ndarray  # (n_times, dim)
    outputs: OutputSeries
    substeps: int


@dataclass(frozen=True)
class EnergySeries:
    times: np.ndarray
    total_energy: np.ndarray
    boundary_energy_integrand: np.ndarray

    def boundary_energy(self) -> float:
        """Discrete-in-time boundary energy sum_k dt |u_N(t_k)/h|^2 over the intervals."""
        dt = np.diff(self.times)
        return float(np.sum(dt * self.boundary_energy_integrand[1:]))


def rk4_states(rhs: Callable, times: np.ndarray, U0: np.ndarray, substeps: int,
               post_step: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> np.ndarray:
    """Classical RK4 with `substeps` equal steps per sample interval.

    U0 may carry leading batch axes; the result has shape (n_times,) + U0.shape.
    `post_step` is applied after every full step (filters, wall conditions).
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    # overflow is detected and reported by _check, so numpy's warnings are noise here
    with np.errstate(over="ignore", invalid="ignore"):
        return _rk4_loop(rhs, times, U0, substeps, post_step)


def _rk4_loop(rhs, times, U0, substeps, post_step):
    U = np.array(U0, dtype=float)
    _check(U, times[0])
    out = np.empty((times.size,) + U.shape)
    out[0] = U
    for k in range(times.size - 1):
        t0 = times[k]
        h = (times[k + 1] - t0) / substeps
        for m in range(substeps):
            t = t0 + m * h
            k1 = rhs(t, U)
            k2 = rhs(t + h / 2, U + (h / 2) * k1)
            k3 = rhs(t + h / 2, U + (h / 2) * k2)
            k4 = rhs(t + h, U + h * k3)
            U = U + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            if post_step is not None:
                U = post_step(U)
        _check(U, times[k + 1])
        out[k + 1] = U
    return out


def simulate(model: ModelSpec, U0: np.ndarray) -> np.ndarray:
    """States at every sample time for a batch of initial conditions (B, dim)."""
    U0 = np.atleast_2d(np.asarray(U0, dtype=float))
    if U0.shape[-1] != model.dim:
        raise ValueError(f"state has length {U0.shape[-1]}, model expects {model.dim}")
    if model.propagate is not None:
        states = model.propagate(U0)
        _check(states, model.horizon)
        return states
    return rk4_states(model.rhs, model.sample_times, U0, model.substeps)


def integrate_rk4(model: ModelSpec, u0, substeps: Optional[int] = None) -> Trajectory:
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (model.dim,):
        raise ValueError(f"u0 must have shape ({model.dim},)")
    m = model.substeps if substeps is None else substeps
    states = rk4_states(model.rhs, model.sample_times, u0, m)
    return Trajectory(model.id, states, model.outputs(states), m)


def verlet_states(accel: Callable[[np.ndarray], np.ndarray], times: np.ndarray,
                  Q0: np.ndarray, V0: np.ndarray, substeps: int):
    """Velocity Verlet (Stormer-Verlet) for q'' = accel(q); returns (Q, V) at sample times."""
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    with np.errstate(over="ignore", invalid="ignore"):
        return _verlet_loop(accel, times, Q0, V0, substeps)


def _verlet_loop(accel, times, Q0, V0, substeps):
    q = np.array(Q0, dtype=float)
    v = np.array(V0, dtype=float)
    _check(q, times[0])
    _check(v, times[0])
    Q = np.empty((times.size,) + q.shape)
    V = np.empty((times.size,) + v.shape)
    Q[0], V[0] = q, v
    a = accel(q)
    for k in range(times.size - 1):
        h = (times[k + 1] - times[k]) / substeps
        for _ in range(substeps):
            v_half = v + (h / 2) * a
            q = q + h * v_half
            a = accel(q)
            v = v_half + (h / 2) * a
        _check(q, times[k + 1])
        _check(v, times[k + 1])
        Q[k + 1], V[k + 1] = q, v
    return Q, V


def integrate_leapfrog(wave, q0, v0, substeps: Optional[int] = None):
    """Integrate a second-order model and return (Trajectory, EnergySeries).

    `wave` must expose `accel(q)`, `model` (first-order ModelSpec over the
    stacked state (q, v)), `energy(q, v)` and `boundary_integrand(q)`.
    """
    model = wave.model
    m = model.substeps if substeps is None else substeps
    Q, V = verlet_states(wave.accel, model.sample_times, q0, v0, m)
    states = np.concatenate([Q, V], axis=-1)
    traj = Trajectory(model.id, states, model.outputs(states), m)
    energy = EnergySeries(model.sample_times, wave.energy(Q, V), wave.boundary_integrand(Q))
    return traj, energy
