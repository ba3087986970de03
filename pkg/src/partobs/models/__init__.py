"""Concrete systems and a string-id registry used by sweeps and the command line."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from ..core import EstimationSpace, ModelSpec
from .burgers import BurgersConfig, burgers_estimation_space, burgers_model
from .heat import HeatConfig, heat_estimation_space, heat_gramian_closed_form, heat_model
from .lgl import lgl_nodes
from .linpair import (LinearPairConfig, closed_form_sigma, linear_pair_model,
                      linear_pair_space)
from .swe import SweConfig, swe_estimation_space, swe_model
from .wave import WaveConfig, wave_model, wave_position_space

__all__ = [
    "BurgersConfig", "HeatConfig", "LinearPairConfig", "SweConfig", "WaveConfig",
    "burgers_model", "burgers_estimation_space", "heat_model", "heat_estimation_space",
    "heat_gramian_closed_form", "linear_pair_model", "linear_pair_space",
    "closed_form_sigma", "swe_model", "swe_estimation_space", "wave_model",
    "wave_position_space", "lgl_nodes", "FAMILIES", "get_family",
]


@dataclass(frozen=True)
class Family:
    id: str
    description: str
    config_cls: type
    make_model: Callable
    make_space: Callable  # (cfg, estimation options) -> EstimationSpace
    resolution_key: Optional[str]
    default_resolutions: tuple
    estimation_defaults: dict
    sensor_key: Optional[str] = None

    def config(self, **overrides):
        return self.config_cls(**overrides)

    def build(self, cfg, estimation: Optional[dict] = None):
        est = dict(self.estimation_defaults)
        est.update(estimation or {})
        return self.make_model(cfg), self.make_space(cfg, est)

    def at_resolution(self, cfg, n: int):
        if self.resolution_key is None:
            raise ValueError(f"model {self.id!r} has no resolution parameter")
        return dataclasses.replace(cfg, **{self.resolution_key: n})

    def with_sensors(self, cfg, sensors: Sequence[float]):
        if self.sensor_key is None:
            raise ValueError(f"model {self.id!r} has no configurable sensors")
        value = sensors[0] if self.sensor_key == "x0" else tuple(sensors)
        return dataclasses.replace(cfg, **{self.sensor_key: value})


def _heat_space(cfg, est):
    return heat_estimation_space(int(est["s"]), cfg.N)


def _wave_space(cfg, est):
    modes = est["modes"]
    if isinstance(modes, int):
        modes = range(1, modes + 1)
    return wave_position_space(cfg, [int(m) for m in modes])


def _burgers_space(cfg, est):
    if "KF" in est and int(est["KF"]) != cfg.KF:
        cfg = dataclasses.replace(cfg, KF=int(est["KF"]))
    return burgers_estimation_space(cfg)


def _swe_space(cfg, est):
    if "KF" in est and int(est["KF"]) != cfg.KF:
        cfg = dataclasses.replace(cfg, KF=int(est["KF"]))
    return swe_estimation_space(cfg)


FAMILIES = {
    "heat": Family("heat", "heat equation in sine modes, point sensor", HeatConfig,
                   heat_model, _heat_space, "N", tuple(range(3, 9)), {"s": 1}, "x0"),
    "wave": Family("wave", "finite-difference wave equation, boundary sensor", WaveConfig,
                   lambda cfg: wave_model(cfg).model, _wave_space, "N", (20, 40, 80),
                   {"modes": 1}),
    "burgers": Family("burgers", "viscous Burgers, central differences, three sensors",
                      BurgersConfig, burgers_model, _burgers_space, "N",
                      tuple(4 * k for k in range(5, 22)), {}, "sensors"),
    "swe": Family("swe", "1-D shallow water, LGL spectral elements, three depth sensors",
                  SweConfig, swe_model, _swe_space, "elements",
                  tuple(range(10, 90, 10)), {}, "sensors"),
    "linpair": Family("linpair", "two-state linear system, x(T) from x1 output",
                      LinearPairConfig, linear_pair_model,
                      lambda cfg, est: linear_pair_space(), None, (), {}),
}


def get_family(model_id: str) -> Family:
    try:
        return FAMILIES[model_id]
    except KeyError:
        raise KeyError(f"unknown model id {model_id!r}; known: {', '.join(FAMILIES)}") from None
