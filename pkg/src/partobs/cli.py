"""Command-line front end: `partobs {index,sweep,wave-demo,sensors,models}`.

Configuration is an INI file with sections [model], [estimation] and [run];
command-line flags override the file, which overrides built-in defaults.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .consistency import SweepAborted, index_sweep, sensor_sweep, wave_ratio_study
from .core import fmt17
from .gramian import (default_rho, direct_epsilon, empirical_index, write_eigen_csv,
                      write_gramian_csv)
from .models import FAMILIES, get_family
from .models.swe import DryStateError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

RUN_KEYS = {"rho", "weighting", "seed", "jobs", "out", "sweep", "sensors", "direct",
            "n_random", "families"}
ESTIMATION_KEYS = {"s", "KF", "modes"}


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    def __init__(self, stage: str, err: BaseException):
        super().__init__(f"{stage}: {err}")
        self.stage = stage


@dataclass
class RunConfig:
    model: str = "heat"
    model_params: dict = field(default_factory=dict)
    estimation: dict = field(default_factory=dict)
    rho: Optional[float] = None  # None means "auto"
    weighting: Optional[str] = None
    sweep: Optional[list] = None
    sensors: Optional[list] = None
    seed: int = 0
    jobs: int = 1
    out: str = "out"
    direct: bool = False
    n_random: int = 8
    families: tuple = ("high_mode", "low_mode")

    def snapshot(self) -> dict:
        return dataclasses.asdict(self)


# --- parsing helpers --------------------------------------------------------------


def _parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"expected on/off, got {text!r}")


def _parse_floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _parse_ints(text: str) -> list:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from None


def _parse_rho(text) -> Optional[float]:
    if text is None or str(text).strip().lower() == "auto":
        return None
    try:
        rho = float(text)
    except ValueError:
        raise ConfigError(f"rho must be a number or 'auto', got {text!r}") from None
    if not rho > 0 or not math.isfinite(rho):
        raise ConfigError("rho must be positive")
    return rho


def _number(text: str, kind):
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"expected {kind.__name__}, got {text!r}") from None


def _model_fields(cfg_cls) -> dict:
    """Configurable fields of a model config: scalars, booleans, strings and float tuples."""
    hints = typing.get_type_hints(cfg_cls)
    out = {}
    for f in dataclasses.fields(cfg_cls):
        hint = hints[f.name]
        if hint in (int, float, str, bool):
            out[f.name] = hint
        elif "Tuple" in str(hint) or "tuple" in str(hint):
            out[f.name] = tuple
    return out


def _convert_model_value(kind, text: str):
    if kind is bool:
        return _parse_bool(text)
    if kind is tuple:
        return _parse_floats(text)
    if kind is str:
        return str(text).strip()
    return _number(text, kind)


def load_config(path: Optional[str], args: argparse.Namespace) -> RunConfig:
    """Merge defaults, an optional INI file and command-line flags (in that order)."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str  # keys are case-sensitive (KF, Nt)
    if path is not None:
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config: {err}") from None
        except configparser.Error as err:
            raise ConfigError(f"malformed config: {err}") from None
    unknown_sections = set(parser.sections()) - {"model", "estimation", "run"}
    if unknown_sections:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown_sections))}")

    section = lambda name: dict(parser[name]) if parser.has_section(name) else {}
    model_sec, est_sec, run_sec = section("model"), section("estimation"), section("run")

    cfg = RunConfig()
    cfg.model = getattr(args, "model", None) or model_sec.pop("id", None) or cfg.model
    model_sec.pop("id", None)
    if cfg.model not in FAMILIES:
        raise ConfigError(f"unknown model id {cfg.model!r}; known: {', '.join(FAMILIES)}")
    family = FAMILIES[cfg.model]
    fields = _model_fields(family.config_cls)
    for key, text in model_sec.items():
        if key not in fields:
            raise ConfigError(f"unknown key {key!r} in [model] for model {cfg.model!r}")
        cfg.model_params[key] = _convert_model_value(fields[key], text)

    for key, text in est_sec.items():
        if key not in ESTIMATION_KEYS:
            raise ConfigError(f"unknown key {key!r} in [estimation]")
        cfg.estimation[key] = _parse_ints(text) if key == "modes" else _number(text, int)

    for key in run_sec:
        if key not in RUN_KEYS:
            raise ConfigError(f"unknown key {key!r} in [run]")
    if "rho" in run_sec:
        cfg.rho = _parse_rho(run_sec["rho"])
    if "weighting" in run_sec:
        cfg.weighting = run_sec["weighting"].strip()
    if "seed" in run_sec:
        cfg.seed = _number(run_sec["seed"], int)
    if "jobs" in run_sec:
        cfg.jobs = _number(run_sec["jobs"], int)
    else:
        cfg.jobs = os.cpu_count() or 1
    if "out" in run_sec:
        cfg.out = run_sec["out"].strip()
    if "sweep" in run_sec:
        cfg.sweep = _parse_ints(run_sec["sweep"])
    if "sensors" in run_sec:
        cfg.sensors = [_parse_floats(c) for c in run_sec["sensors"].split(";") if c.strip()]
    if "direct" in run_sec:
        cfg.direct = _parse_bool(run_sec["direct"])
    if "n_random" in run_sec:
        cfg.n_random = _number(run_sec["n_random"], int)
    if "families" in run_sec:
        cfg.families = tuple(v.strip() for v in run_sec["families"].split(",") if v.strip())

    # flags beat the file
    if getattr(args, "rho", None) is not None:
        cfg.rho = _parse_rho(args.rho)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "jobs", None) is not None:
        cfg.jobs = args.jobs
    if getattr(args, "out", None) is not None:
        cfg.out = args.out
    if getattr(args, "weighting", None) is not None:
        cfg.weighting = args.weighting
    for flag, key in (("flat_source", "source"), ("literal_h0", "literal_h0")):
        value = getattr(args, flag, None)
        if value is not None:
            if key not in fields:
                raise ConfigError(f"--{flag.replace('_', '-')} applies to the swe model only")
            cfg.model_params[key] = _parse_bool(value)

    if cfg.weighting is not None:
        if cfg.weighting not in ("unweighted", "dt"):
            raise ConfigError("weighting must be 'unweighted' or 'dt'")
        cfg.model_params["weighting"] = cfg.weighting
    if cfg.jobs < 1:
        raise ConfigError("jobs must be >= 1")
    if cfg.n_random < 0:
        raise ConfigError("n_random must be >= 0")
    return cfg


def _model_config(cfg: RunConfig):
    family = get_family(cfg.model)
    try:
        return family, family.config(**cfg.model_params)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid [model] parameters: {err}") from None


def _build(family, model_cfg, estimation):
    try:
        return family.build(model_cfg, estimation)
    except DryStateError as err:
        raise NumericalFailure("model setup", err) from err
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"invalid model or estimation setup: {err}") from None


# --- output ---------------------------------------------------------------------


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_plot(path: Path, xs, ys, labels=("x", "y")):
    with open(path, "w") as fh:
        fh.write(f"# {labels[0]} {labels[1]}\n")
        for x, y in zip(xs, ys):
            fh.write(f"{fmt17(x) if isinstance(x, float) else x} {fmt17(y)}\n")


def _report_row(rep):
    return [rep.model_id, rep.resolution, rep.s, fmt17(rep.rho), fmt17(rep.sigma_min),
            fmt17(rep.epsilon), fmt17(rep.index), rep.source]


def _write_record(out: Path, command: str, cfg: RunConfig, started: float, results: dict):
    digest = hashlib.sha256()
    for name in sorted(p.name for p in out.iterdir() if p.suffix in (".csv", ".dat")):
        digest.update(name.encode())
        digest.update((out / name).read_bytes())
    record = {
        "command": command,
        "config": cfg.snapshot(),
        "version": __version__,
        "wall_time_s": time.perf_counter() - started,
        "results": results,
        "content_hash": digest.hexdigest(),
    }
    with open(out / "run.json", "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float):
        return fmt17(obj)
    return str(obj)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ConfigError(f"cannot create output directory: {err}") from None
    return out


# --- commands -------------------------------------------------------------------


def cmd_index(cfg: RunConfig) -> int:
    started = time.perf_counter()
    family, model_cfg = _model_config(cfg)
    model, space = _build(family, model_cfg, cfg.estimation)
    out = _outdir(cfg)
    try:
        u0 = model.initial_state()
        rho = default_rho(model, u0) if cfg.rho is None else cfg.rho
        report, gramian = empirical_index(model, space, u0, rho, jobs=cfg.jobs)
    except Exception as err:
        raise NumericalFailure("gramian", err) from err
    reports = [report]
    if cfg.direct:
        try:
            reports.append(direct_epsilon(model, u0, space, rho, gramian=gramian,
                                          n_random=cfg.n_random, seed=cfg.seed))
        except Exception as err:
            raise NumericalFailure("direct optimization", err) from err

    _write_csv(out / "report.csv",
               ["model", "N", "s", "rho", "sigma_min", "epsilon", "index", "source"],
               [_report_row(r) for r in reports])
    write_gramian_csv(out / "gramian.csv", gramian)
    write_eigen_csv(out / "eigen.csv", gramian)
    _write_plot(out / "eigen.dat", range(1, space.size + 1), gramian.eigvals, ("j", "sigma_j"))

    for r in reports:
        note = f" [{', '.join(r.flags)}]" if r.flags else ""
        print(f"{r.source}: index rho/epsilon = {fmt17(r.index)} "
              f"(sigma_min = {fmt17(r.sigma_min)}, rho = {fmt17(r.rho)}){note}")
    print(f"worst-case estimation error for a unit sensor error: "
          f"{fmt17(report.worst_error_bound(1.0))}")
    _write_record(out, "index", cfg, started,
                  {"reports": [dataclasses.asdict(r) | {"coefficients": None} for r in reports]})
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    started = time.perf_counter()
    family, model_cfg = _model_config(cfg)
    if family.resolution_key is None:
        raise ConfigError(f"model {family.id!r} has no resolution parameter to sweep")
    resolutions = cfg.sweep or list(family.default_resolutions)
    if len(resolutions) < 3 or any(b <= a for a, b in zip(resolutions[:-1], resolutions[1:])):
        raise ConfigError("sweep needs at least 3 strictly increasing resolutions")
    for n in resolutions:  # validate every resolution before running any
        _build(family, family.at_resolution(model_cfg, n), cfg.estimation)
    out = _outdir(cfg)

    def build(n):
        return family.build(family.at_resolution(model_cfg, n), cfg.estimation)

    try:
        result = index_sweep(build, resolutions, cfg.rho, jobs=cfg.jobs)
    except SweepAborted as err:
        _write_sweep(out, family.id, err.partial)
        raise NumericalFailure("sweep", err) from err
    _write_sweep(out, family.id, result)
    for n, idx in zip(result.resolutions, result.indices):
        print(f"N={n}: index = {fmt17(idx)}")
    if result.stabilized:
        print(f"stabilized at N={result.stabilized_at}, index = "
              f"{fmt17(result.stabilized_value)}")
    else:
        print("not stabilized")
    _write_record(out, "sweep", cfg, started, dataclasses.asdict(result))
    return EXIT_OK


def _write_sweep(out: Path, model_id: str, result):
    _write_csv(out / "sweep.csv", ["model", "N", "rho", "sigma_min", "index"],
               [[model_id, n, fmt17(result.rho), fmt17(sg), fmt17(ix)]
                for n, sg, ix in zip(result.resolutions, result.sigmas, result.indices)])
    _write_csv(out / "stabilization.csv", ["stabilized_at", "stabilized_value"],
               [["" if result.stabilized_at is None else result.stabilized_at,
                 "" if result.stabilized_value is None else fmt17(result.stabilized_value)]])
    _write_plot(out / "sweep.dat", result.resolutions, result.indices, ("N", "index"))


def cmd_wave_demo(cfg: RunConfig) -> int:
    started = time.perf_counter()
    if cfg.model != "wave":
        cfg = dataclasses.replace(cfg, model="wave", model_params={
            k: v for k, v in cfg.model_params.items() if k == "weighting"})
    family, model_cfg = _model_config(cfg)
    resolutions = cfg.sweep or [20, 40, 80]
    if any(b <= a for a, b in zip(resolutions[:-1], resolutions[1:])) or not resolutions:
        raise ConfigError("wave-demo resolutions must increase strictly")
    for fam in cfg.families:
        if fam not in ("high_mode", "low_mode"):
            raise ConfigError(f"unknown data family {fam!r}")
    out = _outdir(cfg)
    studies = {}
    try:
        for fam in cfg.families:
            studies[fam] = wave_ratio_study(resolutions, fam, model_cfg)
    except Exception as err:
        raise NumericalFailure("wave ratio study", err) from err
    fams = list(cfg.families)
    _write_csv(out / "ratios.csv", ["N"] + fams,
               [[n] + [fmt17(studies[f].ratios[k]) for f in fams]
                for k, n in enumerate(resolutions)])
    for f in fams:
        _write_plot(out / f"ratios_{f}.dat", resolutions, studies[f].ratios, ("N", "ratio"))
        print(f"{f}: " + ", ".join(f"N={n}: {fmt17(r)}"
                                   for n, r in zip(resolutions, studies[f].ratios)))
    _write_record(out, "wave-demo", cfg, started,
                  {f: dataclasses.asdict(s) for f, s in studies.items()})
    return EXIT_OK


DEFAULT_CANDIDATES = {
    "heat": lambda c: [(0.5,), (c.L / 2,)],
    "burgers": lambda c: [(c.L / 4, c.L / 2, 3 * c.L / 4), (c.L / 2,) * 3],
    "swe": lambda c: [(0.2, 0.5, 0.8), (-0.5, 0.0, 0.5), (0.5, 0.5, 0.5)],
}


def cmd_sensors(cfg: RunConfig) -> int:
    started = time.perf_counter()
    family, model_cfg = _model_config(cfg)
    if family.sensor_key is None:
        raise ConfigError(f"model {family.id!r} has no configurable sensors")
    candidates = cfg.sensors or DEFAULT_CANDIDATES[family.id](model_cfg)
    if len(candidates) < 2:
        raise ConfigError("sensors needs at least 2 candidates")
    model, space = _build(family, model_cfg, cfg.estimation)
    out = _outdir(cfg)

    def make_model(c):
        return family.make_model(family.with_sensors(model_cfg, c))

    try:
        result = sensor_sweep(make_model, space, candidates, cfg.rho)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    except Exception as err:
        raise NumericalFailure("sensor sweep", err) from err
    rank = {c: k + 1 for k, c in reversed(list(enumerate(result.ranking)))}
    _write_csv(out / "sensors.csv", ["candidate", "positions", "sigma_min", "index", "rank",
                                     "error"],
               [[k + 1, " ".join(fmt17(p) for p in c), fmt17(sg), fmt17(ix), rank[c], e]
                for k, (c, sg, ix, e) in enumerate(zip(result.candidates, result.sigmas,
                                                       result.indices, result.errors))])
    _write_plot(out / "sensors.dat", range(1, len(candidates) + 1), result.indices,
                ("candidate", "index"))
    for k, c in enumerate(result.candidates):
        status = result.errors[k] or fmt17(result.indices[k])
        print(f"candidate {k + 1} {c}: {status}")
    print(f"best: {result.ranking[0]}")
    _write_record(out, "sensors", cfg, started, dataclasses.asdict(result))
    return EXIT_OK


def cmd_models_list() -> int:
    for fid, fam in FAMILIES.items():
        print(f"{fid}\t{fam.description}")
    return EXIT_OK


COMMANDS = {"index": cmd_index, "sweep": cmd_sweep, "wave-demo": cmd_wave_demo,
            "sensors": cmd_sensors}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--model", metavar="ID")
    common.add_argument("--rho", metavar="FLOAT|auto")
    common.add_argument("--jobs", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--flat-source", choices=["on", "off"], dest="flat_source")
    common.add_argument("--literal-h0", choices=["on", "off"], dest="literal_h0")
    common.add_argument("--weighting", choices=["unweighted", "dt"])
    parser = argparse.ArgumentParser(prog="partobs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("index", parents=[common], help="Gramian index (and optional direct check)")
    sub.add_parser("sweep", parents=[common], help="index across resolutions")
    sub.add_parser("wave-demo", parents=[common], help="wave energy ratio study")
    sub.add_parser("sensors", parents=[common], help="rank sensor layouts")
    sub.add_parser("models", help="list model ids")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    if args.command == "models":
        return cmd_models_list()
    try:
        cfg = load_config(args.config, args)
        return COMMANDS[args.command](cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as err:
        print(f"numerical failure in {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
