"""Empirical observability Gramians and the unobservability index rho/epsilon."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (EstimationSpace, ModelSpec, ObservabilityReport, OutputSeries,
                   fmt17, gram_matrix, time_weights)
from .eig import cholesky, generalized_sym_eig
from .integrate import BlowUpError, simulate

UNOBSERVABLE_CUTOFF = 1e-14


class PerturbationBlowUp(RuntimeError):
    pass


@dataclass(frozen=True)
class PerturbationRunSet:
    rho: float
    deltas: tuple  # of OutputSeries, one per basis vector
    nominal: OutputSeries

    def delta_array(self) -> np.ndarray:
        return np.stack([d.values for d in self.deltas])  # (s, n_times, p)


@dataclass(frozen=True)
class EmpiricalGramian:
    G: np.ndarray
    rho: float
    S: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    @property
    def sigma_min(self) -> float:
        return float(self.eigvals[0])


def default_rho(model: ModelSpec, u0) -> float:
    return 1e-3 * max(1.0, model.state_norm(np.asarray(u0, float)))


def _simulate_batch(model: ModelSpec, U0: np.ndarray, jobs: int = 1) -> np.ndarray:
    if jobs <= 1 or U0.shape[0] < 2 * jobs:
        return simulate(model, U0)
    chunks = np.array_split(np.arange(U0.shape[0]), jobs)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(lambda idx: simulate(model, U0[idx]), chunks))
    return np.concatenate(parts, axis=1)


def run_perturbations(model: ModelSpec, u0, space: EstimationSpace, rho: float,
                      jobs: int = 1) -> PerturbationRunSet:
    """Nominal run plus u0 +/- rho e_i for every basis vector; deltas are y(+) - y(-)."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    u0 = np.asarray(u0, dtype=float)
    B = space.matrix()
    U0 = [u0]
    for i in range(space.size):
        U0.append(u0 + rho * B[:, i])
        U0.append(u0 - rho * B[:, i])
    U0 = np.array(U0)
    try:
        states = _simulate_batch(model, U0, jobs)
    except BlowUpError as err:
        rows = sorted({(r - 1) // 2 for r in err.rows if r > 0})
        if not rows:
            raise PerturbationBlowUp(f"nominal run: {err}") from err
        names = ", ".join(space.labels[i] for i in rows)
        raise PerturbationBlowUp(f"perturbation along {names}: {err}") from err
    Y = model.observe(states)  # (n_times, 2s+1, p)
    t = model.sample_times
    nominal = OutputSeries(t, Y[:, 0], model.weighting)
    deltas = tuple(OutputSeries(t, Y[:, 2 * i + 1] - Y[:, 2 * i + 2], model.weighting)
                   for i in range(space.size))
    return PerturbationRunSet(rho, deltas, nominal)


def assemble_gramian(runs: PerturbationRunSet, S: np.ndarray) -> EmpiricalGramian:
    S = np.asarray(S, dtype=float)
    cholesky(S)
    D = runs.delta_array()
    w = time_weights(runs.nominal.times, runs.nominal.weighting)
    G = np.einsum("k,ikp,jkp->ij", w, D, D) / (4 * runs.rho ** 2)
    G = (G + G.T) / 2
    vals, vecs = generalized_sym_eig(G, S)
    return EmpiricalGramian(G, runs.rho, S, vals, vecs)


def index_from_gramian(g: EmpiricalGramian, rho: Optional[float] = None,
                       model_id: str = "", basis_id: str = "",
                       resolution: int = 0) -> ObservabilityReport:
    rho = g.rho if rho is None else rho
    sigma = max(float(g.eigvals[0]), 0.0)
    sigma_max = float(g.eigvals[-1])
    flags = []
    if sigma_max <= 0.0 or sigma <= UNOBSERVABLE_CUTOFF * sigma_max:
        flags.append("practically unobservable")
        index, eps = math.inf, 0.0
    else:
        index, eps = 1 / math.sqrt(sigma), rho * math.sqrt(sigma)
    return ObservabilityReport(sigma, index, eps, rho, "gramian", model_id, basis_id,
                               resolution, g.G.shape[0], flags)


def empirical_index(model: ModelSpec, space: EstimationSpace, u0=None,
                    rho: Optional[float] = None, jobs: int = 1):
    """Convenience pipeline: perturbation runs, Gramian, index. Returns (report, gramian)."""
    u0 = model.initial_state() if u0 is None else np.asarray(u0, float)
    rho = default_rho(model, u0) if rho is None else rho
    runs = run_perturbations(model, u0, space, rho, jobs)
    g = assemble_gramian(runs, gram_matrix(space))
    report = index_from_gramian(g, rho, model.id, space.id, model.resolution)
    return report, g


# --- direct optimization of epsilon over the rho-sphere -------------------------


class _SphereObjective:
    """Output misfit ||y(u0 + c) - y(u0)||_Y for whitened coordinates x = L^T c."""

    def __init__(self, model, u0, space, L):
        self.model = model
        self.u0 = u0
        self.B = space.matrix()
        self.L = L
        self.w = time_weights(model.sample_times, model.weighting)
        self.y0 = model.observe(simulate(model, u0[None, :]))[:, 0]
        self.evaluations = 0

    def coeffs(self, X):
        from scipy.linalg import solve_triangular
        return solve_triangular(self.L.T, np.atleast_2d(X).T, lower=False).T

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        out = np.full(X.shape[0], np.inf)
        todo = np.arange(X.shape[0])
        U0 = self.u0 + self.coeffs(X) @ self.B.T
        while todo.size:
            try:
                Y = self.model.observe(simulate(self.model, U0[todo]))
            except BlowUpError as err:
                bad = todo[np.asarray(err.rows, dtype=int)] if err.rows else todo
                todo = np.setdiff1d(todo, bad)
                continue
            diff = Y - self.y0[:, None, :]
            out[todo] = np.sqrt(np.einsum("k,kbp,kbp->b", self.w, diff, diff))
            break
        self.evaluations += X.shape[0]
        return out


class _TangentChart:
    """Gnomonic chart of the radius-rho sphere around the point p: theta -> rho (p^ + T theta)/|.|."""

    def __init__(self, p, rho):
        p = np.asarray(p, float)
        phat = p / np.linalg.norm(p)
        Q, _ = np.linalg.qr(np.column_stack([phat, np.eye(p.size)]))
        self.phat = phat
        self.T = Q[:, 1:p.size]
        self.rho = rho

    def __call__(self, theta):
        theta = np.atleast_2d(theta)
        v = self.phat + theta @ self.T.T
        return self.rho * v / np.linalg.norm(v, axis=1, keepdims=True)


class _NelderMead:
    """One Nelder-Mead run in chart coordinates, advanced one iteration at a time.

    Candidate points for reflection, expansion and both contractions are proposed
    together so that many runs can share a single batched model evaluation.
    """

    def __init__(self, chart: _TangentChart, step: float):
        n = chart.T.shape[1]
        self.chart = chart
        self.simplex = np.vstack([np.zeros(n), step * np.eye(n)])
        self.f = None
        self.done = False
        self.iterations = 0

    def points(self, thetas):
        return self.chart(thetas)

    def order(self):
        idx = np.argsort(self.f, kind="stable")
        self.simplex, self.f = self.simplex[idx], self.f[idx]

    def proposals(self):
        self.order()
        centroid = self.simplex[:-1].mean(axis=0)
        worst = self.simplex[-1]
        d = centroid - worst
        self._c = centroid
        return np.array([centroid + d, centroid + 2 * d,
                         centroid + 0.5 * d, centroid - 0.5 * d])

    def step(self, props, fp):
        """Apply one iteration given proposal values; returns shrink targets or None."""
        self.iterations += 1
        fr, fe, foc, fic = fp
        f1, fn, fw = self.f[0], self.f[-2], self.f[-1]
        if fr < f1:
            if fe < fr:
                self.simplex[-1], self.f[-1] = props[1], fe
            else:
                self.simplex[-1], self.f[-1] = props[0], fr
        elif fr < fn:
            self.simplex[-1], self.f[-1] = props[0], fr
        elif fr < fw:
            if foc <= fr:
                self.simplex[-1], self.f[-1] = props[2], foc
            else:
                return self._shrink_targets()
        else:
            if fic < fw:
                self.simplex[-1], self.f[-1] = props[3], fic
            else:
                return self._shrink_targets()
        return None

    def _shrink_targets(self):
        best = self.simplex[0]
        self.simplex[1:] = best + 0.5 * (self.simplex[1:] - best)
        return self.simplex[1:]

    def diameter(self):
        pts = self.points(self.simplex)
        diff = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((diff ** 2).sum(-1)).max())

    def best(self):
        i = int(np.argmin(self.f))
        return self.points(self.simplex[i])[0], float(self.f[i])


def direct_epsilon(model: ModelSpec, u0, space: EstimationSpace, rho: float,
                   gramian: Optional[EmpiricalGramian] = None, n_random: int = 8,
                   seed: int = 0, extra_starts: Sequence = (), tol: float = 1e-8,
                   max_iter: Optional[int] = None, step: float = 0.25) -> ObservabilityReport:
    """Minimize ||y_hat - y||_Y over u0 + c, c in span(basis) with c^T S c = rho^2.

    Multi-start Nelder-Mead: both signs of the Gramian's weakest direction, `n_random`
    random points on the sphere and any `extra_starts` (coefficient vectors).
    Points are kept on the sphere by radial projection from the tangent plane at
    each start.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    u0 = np.asarray(u0, dtype=float)
    S = gram_matrix(space)
    L = cholesky(S)
    s = space.size
    objective = _SphereObjective(model, u0, space, L)

    if gramian is None:
        gramian = assemble_gramian(run_perturbations(model, u0, space, rho), S)
    xi = gramian.eigvecs[:, 0]
    starts = [rho * (L.T @ xi), -rho * (L.T @ xi)]
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        z = rng.standard_normal(s)
        starts.append(rho * z / np.linalg.norm(z))
    for c in extra_starts:
        x = L.T @ np.asarray(c, float)
        starts.append(rho * x / np.linalg.norm(x))

    if s == 1:
        X = np.array([[rho], [-rho]])
        f = objective(X)
        i = int(np.argmin(f))
        return _direct_report(model, space, rho, X[i], f[i], objective, L)

    runs = [_NelderMead(_TangentChart(p, rho), step) for p in starts]
    init = np.vstack([r.points(r.simplex) for r in runs])
    f_init = objective(init)
    if not np.isfinite(f_init).any():
        raise PerturbationBlowUp("all starts of the direct optimization blew up")
    m = s  # simplex vertices per run (chart dimension s-1)
    for k, r in enumerate(runs):
        r.f = f_init[k * m:(k + 1) * m].copy()
    max_iter = 400 * s if max_iter is None else max_iter

    for _ in range(max_iter):
        active = [r for r in runs if not r.done]
        if not active:
            break
        props = [r.proposals() for r in active]
        fp = objective(np.vstack([r.points(p) for r, p in zip(active, props)]))
        shrinking = []
        for k, (r, p) in enumerate(zip(active, props)):
            targets = r.step(p, fp[4 * k:4 * k + 4])
            if targets is not None:
                shrinking.append(r)
        if shrinking:
            fs = objective(np.vstack([r.points(r.simplex[1:]) for r in shrinking]))
            for k, r in enumerate(shrinking):
                r.f[1:] = fs[k * (m - 1):(k + 1) * (m - 1)]
        for r in active:
            if r.diameter() < tol * rho:
                r.done = True

    best_x, best_f = None, math.inf
    for r in runs:
        x, f = r.best()
        if f < best_f:
            best_x, best_f = x, f
    if not math.isfinite(best_f):
        raise PerturbationBlowUp("all starts of the direct optimization blew up")
    return _direct_report(model, space, rho, best_x, best_f, objective, L)


def _direct_report(model, space, rho, x, eps, objective, L):
    eps = float(eps)
    index = math.inf if eps == 0.0 else rho / eps
    flags = ["practically unobservable"] if eps == 0.0 else []
    return ObservabilityReport((eps / rho) ** 2, index, eps, rho, "direct_optimization",
                               model.id, space.id, model.resolution, space.size, flags,
                               coefficients=objective.coeffs(x)[0])


# --- CSV dumps -------------------------------------------------------------------


def write_gramian_csv(path, g: EmpiricalGramian):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "Gij"])
        s = g.G.shape[0]
        for i in range(s):
            for j in range(s):
                w.writerow([i + 1, j + 1, fmt17(g.G[i, j])])


def write_eigen_csv(path, g: EmpiricalGramian):
    s = g.G.shape[0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "sigma_j"] + [f"xi_{i + 1}" for i in range(s)])
        for j in range(s):
            w.writerow([j + 1, fmt17(g.eigvals[j])] + [fmt17(v) for v in g.eigvecs[:, j]])
