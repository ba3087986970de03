"""Domain types shared by every stage: models, estimation spaces, outputs, reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

Sampler = Callable[[np.ndarray], np.ndarray]


class Weighting(str, Enum):
    UNWEIGHTED = "unweighted"
    DT = "dt"

    @classmethod
    def parse(cls, value) -> "Weighting":
        if isinstance(value, cls):
            return value
        aliases = {"unweighted": cls.UNWEIGHTED, "unweighted_l2": cls.UNWEIGHTED,
                   "dt": cls.DT, "dt_weighted": cls.DT, "dt_weighted_l2": cls.DT}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown output weighting {value!r}") from None


class DegenerateSample(ValueError):
    pass


def time_weights(times: np.ndarray, weighting: Weighting) -> np.ndarray:
    """Per-sample weights w_k so that ||y||^2 = sum_k w_k |y_k|^2.

    The dt variant uses composite Simpson weights on uniform grids with an even
    number of intervals and trapezoid weights otherwise, so the discrete norm
    tracks the time integral of |y|^2 to the accuracy the Gramian oracles need.
    """
    times = np.asarray(times, dtype=float)
    n = times.size
    if weighting is Weighting.UNWEIGHTED:
        return np.ones(n)
    if n == 1:
        return np.ones(1)
    dt = np.diff(times)
    uniform = np.allclose(dt, dt[0], rtol=1e-9, atol=0.0)
    if uniform and (n - 1) % 2 == 0:
        w = np.full(n, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        return w * dt[0] / 3.0
    w = np.zeros(n)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


@dataclass(frozen=True)
class OutputSeries:
    times: np.ndarray
    values: np.ndarray  # (n_times, p)
    weighting: Weighting = Weighting.UNWEIGHTED

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "weighting", Weighting.parse(self.weighting))
        if values.size and values.shape[0] != self.times.size:
            raise ValueError("times and values disagree in length")

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    def weights(self) -> np.ndarray:
        return time_weights(self.times, self.weighting)

    def __sub__(self, other: "OutputSeries") -> "OutputSeries":
        if not np.array_equal(self.times, other.times):
            raise ValueError("output series sampled at different times")
        return OutputSeries(self.times, self.values - other.values, self.weighting)


def output_inner(a: OutputSeries, b: OutputSeries) -> float:
    if not np.array_equal(a.times, b.times):
        raise ValueError("output series sampled at different times")
    w = a.weights()
    return float(np.einsum("k,kp,kp->", w, a.values, b.values))


def output_norm(y: OutputSeries) -> float:
    if y.values.size == 0:
        raise ValueError("empty output")
    return math.sqrt(max(output_inner(y, y), 0.0))


@dataclass(frozen=True)
class ModelSpec:
    """A discretized system du/dt = rhs(t, u) observed through `observe`.

    `rhs` and `observe` act on the trailing axis and must broadcast over any
    leading batch axes. `propagate`, when given, replaces numerical time
    stepping: it maps a batch of initial states (B, dim) to the states at every
    sample time, shape (n_times, B, dim).
    """

    id: str
    dim: int
    rhs: Callable[[float, np.ndarray], np.ndarray]
    observe: Callable[[np.ndarray], np.ndarray]
    state_inner: Callable[[np.ndarray, np.ndarray], float]
    lift: Callable[[np.ndarray], Sampler]
    restrict: Callable[[Sampler], np.ndarray]
    sample_times: np.ndarray
    n_outputs: int
    domain: tuple = (0.0, 1.0)
    # density of the continuum X-norm relative to dx: ||u||_X^2 = x_weight * int u^2
    x_weight: float = 1.0
    grid_size: int = 0
    resolution: int = 0
    substeps: int = 1
    weighting: Weighting = Weighting.UNWEIGHTED
    propagate: Optional[Callable[[np.ndarray], np.ndarray]] = None
    nominal: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.sample_times, dtype=float)
        if t.ndim != 1 or t.size < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("sample_times must start at 0 and increase strictly")
        object.__setattr__(self, "sample_times", t)
        object.__setattr__(self, "weighting", Weighting.parse(self.weighting))
        if self.dim < 1:
            raise ValueError("dim must be positive")

    @property
    def horizon(self) -> float:
        return float(self.sample_times[-1])

    def initial_state(self) -> np.ndarray:
        if self.nominal is None:
            return np.zeros(self.dim)
        return np.array(self.nominal, dtype=float)

    def state_norm(self, u: np.ndarray) -> float:
        return math.sqrt(max(self.state_inner(u, u), 0.0))

    def outputs(self, states: np.ndarray) -> OutputSeries:
        return OutputSeries(self.sample_times, self.observe(states), self.weighting)


@dataclass(frozen=True)
class EstimationSpace:
    basis: tuple  # of state vectors
    labels: tuple
    inner: Callable[[np.ndarray, np.ndarray], float]
    id: str = "basis"

    def __post_init__(self):
        basis = tuple(np.asarray(b, dtype=float) for b in self.basis)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "labels", tuple(self.labels))
        if not basis:
            raise ValueError("estimation basis is empty")
        if len(self.labels) != len(basis):
            raise ValueError("one label per basis vector required")
        if len({b.shape for b in basis}) != 1:
            raise ValueError("basis vectors differ in length")
        if len(basis) > basis[0].size:
            raise ValueError("more basis vectors than state dimension")

    @property
    def size(self) -> int:
        return len(self.basis)

    def matrix(self) -> np.ndarray:
        """Basis as columns, shape (dim, s)."""
        return np.column_stack(self.basis)

    def combine(self, coeffs) -> np.ndarray:
        return self.matrix() @ np.asarray(coeffs, dtype=float)

    def extended(self, vector, label: str) -> "EstimationSpace":
        return EstimationSpace(self.basis + (np.asarray(vector, float),),
                               self.labels + (label,), self.inner, self.id + "+" + label)

    def permuted(self, order: Sequence[int]) -> "EstimationSpace":
        return EstimationSpace(tuple(self.basis[i] for i in order),
                               tuple(self.labels[i] for i in order), self.inner, self.id)


def gram_matrix(space: EstimationSpace) -> np.ndarray:
    s = space.size
    S = np.empty((s, s))
    for i in range(s):
        for j in range(i, s):
            S[i, j] = S[j, i] = space.inner(space.basis[i], space.basis[j])
    if not np.all(np.isfinite(S)):
        raise ValueError("non-finite inner product in Gram matrix")
    return S


def simpson(values: np.ndarray, a: float, b: float) -> float:
    n = values.size - 1
    if n < 2 or n % 2:
        raise ValueError("composite Simpson needs an even number of intervals")
    h = (b - a) / n
    return float(h / 3 * (values[0] + values[-1] + 4 * values[1:-1:2].sum()
                          + 2 * values[2:-1:2].sum()))


def continuum_norm(model: ModelSpec, u: Sampler, intervals: Optional[int] = None) -> float:
    """||u||_X by composite Simpson at 8x the model grid resolution."""
    a, b = model.domain
    if intervals is None:
        intervals = 8 * max(model.grid_size, model.dim, 8)
    intervals += intervals % 2
    x = np.linspace(a, b, intervals + 1)
    return math.sqrt(model.x_weight * simpson(np.asarray(u(x), float) ** 2, a, b))


def norm_consistency_check(space: EstimationSpace, model: ModelSpec,
                           samples: Sequence[Sampler]) -> list:
    """Relative defects | ||u||_X - ||P u||_N | / ||P u||_N for each sample."""
    defects = []
    for u in samples:
        discrete = model.state_norm(model.restrict(u))
        if discrete == 0.0:
            raise DegenerateSample("degenerate sample")
        defects.append(abs(continuum_norm(model, u) - discrete) / discrete)
    return defects


@dataclass
class ObservabilityReport:
    sigma_min: float
    index: float
    epsilon: float
    rho: float
    source: str  # "gramian" | "direct_optimization"
    model_id: str = ""
    basis_id: str = ""
    resolution: int = 0
    s: int = 0
    flags: list = field(default_factory=list)
    coefficients: Optional[np.ndarray] = None

    def worst_error_bound(self, sensor_error: float) -> float:
        if self.sigma_min <= 0.0:
            return math.inf
        return sensor_error / math.sqrt(self.sigma_min)

    @property
    def practically_unobservable(self) -> bool:
        return "practically unobservable" in self.flags


def fmt17(x) -> str:
    """17 significant digits, enough to round-trip any double; inf/nan spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")
