"""Command-line front end: ``simulate``, ``zn`` and ``tune``.

Exit status: 0 success, 1 usage or configuration error, 2 domain error
(unstable loop, no ultimate gain).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, svg
from .evoa import EvoaConfig, GainRanges
from .lti import LTIError, PidGains, Stability, TransferFunction, pid_loop, routh_array, to_state_space
from .sim import SimConfig, SimulationDiverged, compute_metrics, simulate_step
from .tuner import ObjectiveConfig, TuningReport, run_statistics, tune
from .zn import ControlType, NoUltimateGain, find_ultimate, zn_gains

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2


class ConfigError(ValueError):
    pass


class DomainError(RuntimeError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise ValueError(f"expected 'lo,hi', got {text!r}")
    return (vals[0], vals[1])


def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "auto", "none") else int(text)


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none") else float(text)


@dataclass
class AppConfig:
    num: list[float] = field(default_factory=lambda: [1.0])
    den: list[float] = field(default_factory=lambda: [64.0, 9.6, 0.48, 0.008])
    dt: float = 0.01
    horizon: float = 600.0
    settling_band: float = 0.02
    rise_low: float = 0.10
    rise_high: float = 0.90
    w_bits: int = 16
    population: int = 20
    max_iterations: int = 200
    pebble_max: int | None = None
    seed: int = 0
    kp_range: tuple[float, float] = (0.0, 0.2)
    ki_range: tuple[float, float] = (0.0, 0.02)
    kd_range: tuple[float, float] = (0.0, 4.0)
    penalty: float = 1e9
    objective: str = "ise"
    zn_seed: str = "recomputed"
    runs: int = 1
    jobs: int = 1
    out: str = "out"
    kp: float | None = None
    ki: float | None = None
    kd: float | None = None

    def plant(self) -> TransferFunction:
        return TransferFunction(self.num, self.den)

    def sim_config(self) -> SimConfig:
        return SimConfig(self.dt, self.horizon, self.settling_band, (self.rise_low, self.rise_high))

    def evoa_config(self) -> EvoaConfig:
        return EvoaConfig(
            w_bits=self.w_bits,
            population=self.population,
            max_iterations=self.max_iterations,
            pebble_max=self.pebble_max,
            rng_seed=self.seed,
            ranges=GainRanges(tuple(self.kp_range), tuple(self.ki_range), tuple(self.kd_range)),
        )

    def objective_config(self) -> ObjectiveConfig:
        return ObjectiveConfig(self.sim_config(), self.penalty, self.objective)

    def to_lines(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (list, tuple)):
                v = ",".join(repr(float(x)) for x in v)
            elif v is None:
                v = "none"
            elif isinstance(v, float):
                v = repr(v)
            out.append(f"{f.name}={v}")
        return out


PARSERS = {
    "num": _floats, "den": _floats, "dt": float, "horizon": float, "settling_band": float,
    "rise_low": float, "rise_high": float, "w_bits": int, "population": int,
    "max_iterations": int, "pebble_max": _opt_int, "seed": int, "kp_range": _pair,
    "ki_range": _pair, "kd_range": _pair, "penalty": float, "objective": str,
    "zn_seed": str, "runs": int, "jobs": int, "out": str,
    "kp": _opt_float, "ki": _opt_float, "kd": _opt_float,
}

# single-key invariants; cross-field ones are checked when sub-configs are built
CHECKS = {
    "dt": (lambda v: v > 0, "dt > 0"),
    "horizon": (lambda v: v > 0, "horizon > 0"),
    "settling_band": (lambda v: 0 < v < 0.5, "0 < settling_band < 0.5"),
    "rise_low": (lambda v: 0 < v < 1, "0 < rise_low < 1"),
    "rise_high": (lambda v: 0 < v < 1, "0 < rise_high < 1"),
    "w_bits": (lambda v: 1 <= v <= 62, "1 <= w_bits <= 62"),
    "population": (lambda v: v >= 1, "population >= 1"),
    "max_iterations": (lambda v: v >= 0, "max_iterations >= 0"),
    "pebble_max": (lambda v: v is None or v >= 1, "pebble_max >= 1"),
    "seed": (lambda v: v >= 0, "seed >= 0"),
    "runs": (lambda v: v >= 1, "runs >= 1"),
    "jobs": (lambda v: v >= 1, "jobs >= 1"),
    "penalty": (lambda v: v > 0, "penalty > 0"),
    "objective": (lambda v: v in ("ise", "ise+settling"), "objective in {ise, ise+settling}"),
    "zn_seed": (lambda v: v in ("recomputed", "reference"), "zn_seed in {recomputed, reference}"),
    "den": (lambda v: len(v) >= 1 and any(x != 0 for x in v), "den is a nonzero polynomial"),
    "num": (lambda v: len(v) >= 1, "num is non-empty"),
    "kp": (lambda v: v is None or v >= 0, "kp >= 0"),
    "ki": (lambda v: v is None or v >= 0, "ki >= 0"),
    "kd": (lambda v: v is None or v >= 0, "kd >= 0"),
}


def _set(cfg: AppConfig, key: str, raw, where: str) -> None:
    if key not in PARSERS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        value = PARSERS[key](raw) if isinstance(raw, str) else raw
    except ValueError:
        raise ConfigError(f"{where}: malformed value for {key!r}: {raw!r}") from None
    ok, rule = CHECKS.get(key, (lambda v: True, ""))
    if not ok(value):
        raise ConfigError(f"{where}: {key}={raw} violates invariant {rule}")
    setattr(cfg, key, value)


def read_config_file(path: str | Path, cfg: AppConfig) -> None:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        _set(cfg, key, value, f"{path}:{lineno}")


FLAG_KEYS = {
    "kp": "kp", "ki": "ki", "kd": "kd", "num": "num", "den": "den", "dt": "dt",
    "horizon": "horizon", "band": "settling_band", "w_bits": "w_bits", "pop": "population",
    "iters": "max_iterations", "pebble_max": "pebble_max", "runs": "runs", "seed": "seed",
    "out": "out", "jobs": "jobs", "objective": "objective", "zn_seed": "zn_seed",
}


def load_config(args: argparse.Namespace) -> AppConfig:
    """defaults < config file < command-line flags."""
    cfg = AppConfig()
    if getattr(args, "config", None):
        read_config_file(args.config, cfg)
    for dest, key in FLAG_KEYS.items():
        raw = getattr(args, dest, None)
        if raw is not None:
            _set(cfg, key, raw, f"--{dest.replace('_', '-')}")
    if not cfg.rise_low < cfg.rise_high:
        raise ConfigError("rise_low must be < rise_high")
    try:
        cfg.sim_config()
        cfg.evoa_config()
        cfg.objective_config()
        cfg.plant()
    except (ValueError, LTIError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


# -- output helpers -----------------------------------------------------------


def fmt(x: float) -> str:
    return f"{x:.17g}"


def write_csv(path: Path, header: Sequence[str], columns: Sequence[Sequence[float]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def read_csv(path: Path) -> tuple[list[str], list[list[float]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    cols = [[float(r[j]) for r in rows[1:]] for j in range(len(header))]
    return header, cols


def _jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2)
        fh.write("\n")


def _response_plot(title: str, curves, config: SimConfig) -> svg.Plot:
    plot = svg.Plot(title, "time (s)", "level h(t)")
    band = config.settling_band
    plot.hlines = [(1.0, "setpoint"), (1 + band, f"+{band:g}"), (1 - band, f"-{band:g}")]
    for label, resp, metrics in curves:
        plot.series.append(svg.Series(label, resp.times, resp.outputs))
        k = int(np.argmax(resp.outputs))
        plot.markers.append((float(resp.times[k]), float(resp.outputs[k]), f"Mp {metrics.overshoot_pct:.1f}%"))
        if metrics.settling_time is not None:
            ts = metrics.settling_time
            plot.markers.append((ts, float(np.interp(ts, resp.times, resp.outputs)), f"ts {ts:.1f}s"))
    return plot


def _check_loop(plant: TransferFunction, gains: PidGains):
    loop = pid_loop(plant, gains)
    verdict = routh_array(loop.den)[1].verdict
    if verdict is not Stability.STABLE:
        raise DomainError(f"closed loop is {verdict.value} (Routh verdict: {verdict.value})")
    return loop


def _simulate(plant, gains, sim):
    loop = _check_loop(plant, gains)
    try:
        resp = simulate_step(to_state_space(loop), sim)
    except SimulationDiverged as exc:
        raise DomainError(f"unstable response: {exc}") from None
    return resp, compute_metrics(resp, sim)


# -- subcommands --------------------------------------------------------------


def cmd_simulate(cfg: AppConfig) -> int:
    missing = [k for k in ("kp", "ki", "kd") if getattr(cfg, k) is None]
    if missing:
        raise ConfigError(f"simulate needs gains: missing {', '.join('--' + k for k in missing)}")
    gains = PidGains(cfg.kp, cfg.ki, cfg.kd)
    sim = cfg.sim_config()
    resp, metrics = _simulate(cfg.plant(), gains, sim)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "response.csv", ["t", "r", "y"],
              [resp.times.tolist(), [resp.setpoint] * len(resp.times), resp.outputs.tolist()])
    label = f"kp={gains.kp:g} ki={gains.ki:g} kd={gains.kd:g}"
    svg.write(_response_plot("Closed-loop step response", [(label, resp, metrics)], sim), out / "response.svg")
    print(json.dumps(metrics.to_dict()))
    return EXIT_OK


def cmd_zn(cfg: AppConfig, simulate: bool = False) -> int:
    plant = cfg.plant()
    try:
        ult = find_ultimate(plant)
    except (NoUltimateGain, ValueError) as exc:
        raise DomainError(f"no Ziegler-Nichols ultimate gain: {exc}") from None
    rows = {ct.value: dataclasses.asdict(zn_gains(ult, ct)) for ct in ControlType}
    doc = {"ku": ult.ku, "tu": ult.tu, "gains": rows}
    if simulate:
        _, metrics = _simulate(plant, zn_gains(ult, ControlType.PID), cfg.sim_config())
        doc["pid_metrics"] = metrics.to_dict()
    print(json.dumps(doc))
    return EXIT_OK


def _tune_one(args) -> TuningReport:
    cfg, index = args
    return tune(cfg.plant(), cfg.evoa_config(), cfg.objective_config(), run_index=index, zn_seed=cfg.zn_seed)


def _table_row(gains: PidGains, metrics) -> dict:
    return {
        "kp": gains.kp, "ki": gains.ki, "kd": gains.kd,
        "ise": metrics.ise, "t_s": metrics.settling_time, "M_p": metrics.overshoot_pct,
    }


def cmd_tune(cfg: AppConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, i) for i in range(cfg.runs)]
    reports: list[TuningReport] = []
    try:
        if cfg.jobs > 1 and cfg.runs > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
                reports = list(ex.map(_tune_one, jobs))
        else:
            for job in jobs:
                reports.append(_tune_one(job))
    except (NoUltimateGain, ValueError, ArithmeticError) as exc:
        index = len(reports)
        raise DomainError(f"tuning run {index} failed: {exc}") from None

    for i, rep in enumerate(reports):
        write_csv(out / f"convergence_{i}.csv", ["iteration", "best_fitness"],
                  [list(range(len(rep.history))), rep.history])
        write_json(out / f"report_{i}.json", rep.to_dict())

    stats = run_statistics([r.best_fitness for r in reports])
    best_i = int(np.argmin([r.best_fitness for r in reports]))
    best = reports[best_i]
    summary = {
        "version": __version__,
        "config": dataclasses.asdict(cfg),
        "statistics": {"runs": stats.runs, "best_values": stats.best_values, "mean": stats.mean, "std": stats.std},
        "best_run": best_i,
        "comparison": {"ZN": _table_row(best.zn_gains, best.zn_metrics),
                       "EVOA": _table_row(best.best_gains, best.best_metrics)},
    }
    write_json(out / "summary.json", summary)

    sim = cfg.sim_config()
    plant = cfg.plant()
    curves = []
    for label, gains in (("ZN", best.zn_gains), ("EVOA", best.best_gains)):
        resp, metrics = _simulate(plant, gains, sim)
        curves.append((label, resp, metrics))
    svg.write(_response_plot("ZN vs EVOA step response", curves, sim), out / "comparison.svg")
    conv = svg.Plot("Convergence of best ISE", "iteration", "best ISE", logy=False)
    for i, rep in enumerate(reports):
        conv.series.append(svg.Series(f"run {i}", np.arange(len(rep.history)), np.array(rep.history)))
    svg.write(conv, out / "convergence.svg")
    print(json.dumps({"runs": stats.runs, "mean": stats.mean, "std": stats.std,
                      "best_ise": best.best_fitness, "zn_ise": best.zn_metrics.ise}))
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("plant and simulation")
    g.add_argument("--num", help="plant numerator, comma-separated, highest power first")
    g.add_argument("--den", help="plant denominator, comma-separated, highest power first")
    g.add_argument("--dt", help="integration step (s)")
    g.add_argument("--horizon", help="simulated time (s)")
    g.add_argument("--band", help="settling band as a fraction of the final value")
    g.add_argument("--kp")
    g.add_argument("--ki")
    g.add_argument("--kd")
    e = common.add_argument_group("optimizer")
    e.add_argument("--w-bits", dest="w_bits", help="bits per gain")
    e.add_argument("--pop", help="population size N")
    e.add_argument("--iters", help="iterations T")
    e.add_argument("--pebble-max", dest="pebble_max", help="largest pebble / flip count")
    e.add_argument("--runs", help="independent runs M")
    e.add_argument("--seed", help="base RNG seed")
    e.add_argument("--jobs", help="worker processes for independent runs")
    e.add_argument("--objective", help="ise or ise+settling")
    e.add_argument("--zn-seed", dest="zn_seed", help="recomputed or reference")
    common.add_argument("--out", help="output directory")
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--print-config", action="store_true", help="echo the effective config and exit")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="vulture-pid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="simulate the closed loop for given gains")
    zn = sub.add_parser("zn", parents=[common], help="Ziegler-Nichols ultimate gain and ZN rule gains")
    zn.add_argument("--simulate", action="store_true", help="also report closed-loop metrics of the PID row")
    sub.add_parser("tune", parents=[common], help="ZN-seeded EVOA tuning over M runs")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        if args.print_config:
            print("\n".join(cfg.to_lines()))
            return EXIT_OK
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "zn":
            return cmd_zn(cfg, simulate=args.simulate)
        return cmd_tune(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
