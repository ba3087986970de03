"""Index behaviour across resolution and sensor layouts.

Sweeps recompute the Gramian index at each resolution with one absolute rho and
flag the point after which the index stops moving.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import EstimationSpace, ModelSpec, OutputSeries, gram_matrix
from .gramian import (PerturbationRunSet, assemble_gramian, default_rho, index_from_gramian,
                      run_perturbations)
from .integrate import integrate_leapfrog, simulate
from .models.wave import WaveConfig, eigenmode, wave_model

STABILIZATION_TOL = 0.01


@dataclass
class SweepResult:
    resolutions: list
    indices: list
    sigmas: list
    rho: float = 0.0
    stabilized_at: Optional[int] = None
    stabilized_value: Optional[float] = None

    @property
    def stabilized(self) -> bool:
        return self.stabilized_at is not None


class SweepAborted(RuntimeError):
    def __init__(self, message, partial: SweepResult):
        super().__init__(message)
        self.partial = partial


def relative_changes(values: Sequence[float]) -> list:
    out = []
    for a, b in zip(values[:-1], values[1:]):
        if math.isinf(a) and math.isinf(b):
            out.append(0.0)
        elif a == 0 or not (math.isfinite(a) and math.isfinite(b)):
            out.append(math.inf)
        else:
            out.append(abs(b - a) / abs(a))
    return out


def detect_stabilization(resolutions, indices, tol: float = STABILIZATION_TOL, run: int = 2):
    """Start of the trailing plateau: all later relative changes < tol, at least `run` of them.

    Returns (stabilized_at, stabilized_value) or (None, None).
    """
    changes = relative_changes(list(indices))
    start = len(changes)
    while start > 0 and changes[start - 1] < tol:
        start -= 1
    if len(changes) - start < run:
        return None, None
    return resolutions[start], indices[-1]


def index_sweep(build: Callable[[int], tuple], resolutions: Sequence[int],
                rho: Optional[float] = None, jobs: int = 1) -> SweepResult:
    """Gramian index at each resolution; `build(N)` returns (ModelSpec, EstimationSpace)."""
    resolutions = list(resolutions)
    if len(resolutions) < 3:
        raise ValueError("a sweep needs at least 3 resolutions")
    if any(b <= a for a, b in zip(resolutions[:-1], resolutions[1:])):
        raise ValueError("resolutions must increase strictly")
    if rho is None:
        model0, _ = build(resolutions[0])
        rho = default_rho(model0, model0.initial_state())
    result = SweepResult([], [], [], rho)

    def one(n):
        model, space = build(n)
        runs = run_perturbations(model, model.initial_state(), space, rho)
        return index_from_gramian(assemble_gramian(runs, gram_matrix(space)), rho,
                                  model.id, space.id, n)

    def record(n, rep):
        result.resolutions.append(n)
        result.indices.append(rep.index)
        result.sigmas.append(rep.sigma_min)

    try:
        if jobs > 1:
            # results are assembled in resolution order; the first failure aborts,
            # keeping every resolution before it
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(one, n) for n in resolutions]
                for n, fut in zip(resolutions, futures):
                    record(n, fut.result())
        else:
            for n in resolutions:
                record(n, one(n))
    except Exception as err:
        raise SweepAborted(f"sweep failed at N={resolutions[len(result.resolutions)]} "
                           f"after {len(result.resolutions)} resolutions: {err}", result) from err
    result.stabilized_at, result.stabilized_value = detect_stabilization(
        result.resolutions, result.indices)
    return result


# --- wave equation: total energy against boundary energy --------------------------


@dataclass
class RatioStudyResult:
    resolutions: list
    family: str
    ratios: list
    total_energy: list = field(default_factory=list)
    boundary_energy: list = field(default_factory=list)


def wave_initial_data(cfg: WaveConfig, family: str) -> np.ndarray:
    if family == "high_mode":
        return eigenmode(cfg, cfg.N)
    if family == "low_mode":
        x = cfg.h * np.arange(1, cfg.N + 1)
        return np.sin(np.pi * x / cfg.L)
    raise ValueError(f"unknown data family {family!r}")


def wave_ratio_study(resolutions: Sequence[int] = (20, 40, 80), family: str = "high_mode",
                     template: WaveConfig = WaveConfig(), q0: Optional[Callable] = None
                     ) -> RatioStudyResult:
    """E_h(0) / sum_k dt |u_N(t_k)/h|^2 for each resolution."""
    resolutions = list(resolutions)
    if any(b <= a for a, b in zip(resolutions[:-1], resolutions[1:])):
        raise ValueError("resolutions must increase strictly")
    out = RatioStudyResult(resolutions, family, [])
    for n in resolutions:
        cfg = dataclasses.replace(template, N=n)
        wave = wave_model(cfg)
        q = wave_initial_data(cfg, family) if q0 is None else np.asarray(q0(cfg), float)
        _, energy = integrate_leapfrog(wave, q, np.zeros(n))
        boundary = energy.boundary_energy()
        if energy.total_energy[0] == 0.0 or boundary == 0.0:
            raise ValueError("zero initial data: energy ratio undefined")
        out.total_energy.append(float(energy.total_energy[0]))
        out.boundary_energy.append(boundary)
        out.ratios.append(float(energy.total_energy[0]) / boundary)
    return out


# --- sensor placement ranking -------------------------------------------------------


@dataclass
class SensorSweepResult:
    candidates: list
    indices: list
    sigmas: list
    errors: list
    ranking: list  # candidate positions sorted by ascending index


def sensor_sweep(make_model: Callable[[tuple], ModelSpec], space: EstimationSpace,
                 candidates: Sequence[Sequence[float]], rho: Optional[float] = None,
                 u0=None) -> SensorSweepResult:
    """Gramian index per sensor layout, sharing one set of perturbation trajectories.

    Sensor placement does not change the dynamics, so the 2s+1 state trajectories
    are computed once with the first candidate and re-observed for the others.
    """
    candidates = [tuple(c) for c in candidates]
    if len(candidates) < 2:
        raise ValueError("need at least 2 candidates")
    base = make_model(candidates[0])
    u0 = base.initial_state() if u0 is None else np.asarray(u0, float)
    rho = default_rho(base, u0) if rho is None else rho
    B = space.matrix()
    U0 = [u0]
    for i in range(space.size):
        U0 += [u0 + rho * B[:, i], u0 - rho * B[:, i]]
    states = simulate(base, np.array(U0))
    S = gram_matrix(space)

    indices, sigmas, errors = [], [], []
    for cand in candidates:
        try:
            model = make_model(cand)
            Y = model.observe(states)
            t = model.sample_times
            deltas = tuple(OutputSeries(t, Y[:, 2 * i + 1] - Y[:, 2 * i + 2], model.weighting)
                           for i in range(space.size))
            runs = PerturbationRunSet(rho, deltas, OutputSeries(t, Y[:, 0], model.weighting))
            rep = index_from_gramian(assemble_gramian(runs, S), rho, model.id, space.id,
                                     model.resolution)
            indices.append(rep.index)
            sigmas.append(rep.sigma_min)
            errors.append("")
        except Exception as err:  # recorded per candidate
            indices.append(math.nan)
            sigmas.append(math.nan)
            errors.append(str(err))
    order = sorted(range(len(candidates)),
                   key=lambda k: (math.isnan(indices[k]), indices[k], k))
    return SensorSweepResult(candidates, indices, sigmas, errors,
                             [candidates[k] for k in order])
