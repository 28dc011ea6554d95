#!/usr/bin/env python3

"""
Experiment Runner Script - Python
Author: NimbusDFIR
Description: Run one-bit massive MIMO experiment recipes from a spec file and
write the results as CSV plus a JSON run manifest.

Spec file grammar (one `key = value` per line, `#` starts a comment):

    kind = rate-validation
    K = 8
    T = 200
    tau = 16
    trials = 2000
    seed = 7
    sweep.M = 32, 64, 128
    sweep.rho = -20dB, -15dB, -10dB, -5dB, 0dB

Power keys (rho, rho_p, rho_d) take linear values or a dB suffix. `rho` sets
training and data power together; the optimization recipes read it as the
average power per symbol. Sweeps expand as a cartesian product in file order.

Usage:
  python -m onebit_mimo.experiment_runner --spec specs/rate_validation.spec
  python -m onebit_mimo.experiment_runner --spec my.spec --seed 3 --trials 500 --out run.csv --quiet
"""

import argparse
import csv
import itertools
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from dotenv import dotenv_values, load_dotenv

from . import __version__
from .bussgang_lmmse import estimate_quality
from .console import Colors, banner, print_colored
from .errors import ConfigError, OneBitMimoError
from .rate_analysis import appendix_moments_mc, closed_form_rate, ergodic_rate_mc
from .se_optimizer import low_snr_se, optimize_case1, optimize_case2, sum_spectral_efficiency
from .system_model import SystemConfig, make_dft_pilots

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "ONEBIT_MIMO_OUTPUT_DIR"
WORKERS_ENV = "ONEBIT_MIMO_WORKERS"

DEFAULT_TRIALS = 1000
DEFAULTS = {"M": 128, "K": 8, "T": 200, "tau": None, "rho_p": 0.1, "rho_d": 0.1, "seed": 0}
POWER_KEYS = ("rho", "rho_p", "rho_d")
INT_KEYS = ("M", "K", "T", "tau", "seed", "trials")
SWEEPABLE = ("rho", "rho_p", "rho_d", "M", "K", "T", "tau")
OPTIMIZATION_KINDS = ("se-vs-T", "opt-tau-vs-power", "opt-tau-vs-T")

_OPT_TAU_COLUMNS = ("snr_db", "rho", "M", "K", "T",
                    "onebit_case1_tau", "onebit_case1_gamma", "onebit_case2_tau",
                    "conv_case1_tau", "conv_case1_gamma", "conv_case2_tau")

COLUMNS = {
    "rate-validation": ("snr_db", "rho_p", "rho_d", "M", "K", "T", "tau", "trials",
                        "se_mc", "se_mc_std_err", "se_closed", "se_low", "rel_gap"),
    "se-vs-T": ("snr_db", "rho", "M", "K", "T", "onebit_case1_se", "onebit_case2_se",
                "conv_case1_se", "conv_case2_se", "onebit_gap", "conv_gap"),
    "opt-tau-vs-power": _OPT_TAU_COLUMNS,
    "opt-tau-vs-T": _OPT_TAU_COLUMNS,
    "mse-sweep": ("snr_db", "rho_p", "M", "K", "tau", "eta_sq", "mse", "sigma_sq"),
    "moments-check": ("M", "K", "tau", "rho_p", "rho_d", "trials", "moment",
                      "simulated", "predicted", "rel_error"),
}
KINDS = tuple(COLUMNS)


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    sweep: Tuple[Tuple[str, Tuple[float, ...]], ...]
    base: SystemConfig
    trials: int
    output_path: str
    tau_follows_K: bool = False

    def points(self):
        """Resolved SystemConfig for every sweep point, in sweep order."""
        names = [name for name, _ in self.sweep]
        for combo in itertools.product(*(values for _, values in self.sweep)):
            params = asdict(self.base)
            for name, value in zip(names, combo):
                if name == "rho":
                    params["rho_p"] = params["rho_d"] = value
                else:
                    params[name] = value
            if self.tau_follows_K and "tau" not in names:
                params["tau"] = params["K"]
            yield SystemConfig(**params)


def parse_power(text: str) -> float:
    """Linear power from '0.1' or '-10dB'."""
    raw = text.strip()
    try:
        if raw.lower().endswith("db"):
            return 10.0 ** (float(raw[:-2]) / 10.0)
        return float(raw)
    except ValueError:
        raise ConfigError(f"cannot read power value {text!r}") from None


def to_db(rho: float) -> float:
    return 10.0 * math.log10(rho) if rho > 0 else -math.inf


def _parse_scalar(key: str, text: str):
    if key in POWER_KEYS:
        value = parse_power(text)
    else:
        try:
            value = float(text)
        except ValueError:
            raise ConfigError(f"{key} must be numeric, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite, got {text!r}")
    if key in INT_KEYS:
        if value != int(value):
            raise ConfigError(f"{key} must be an integer, got {text!r}")
        value = int(value)
    return value


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV) or ".")


def resolve_output(path: str) -> Path:
    """Bare file names land in $ONEBIT_MIMO_OUTPUT_DIR (or the working directory)."""
    out = Path(path)
    if not out.is_absolute() and out.parent == Path("."):
        out = default_output_dir() / out
    return out


def load_spec(path, seed: Optional[int] = None, trials: Optional[int] = None,
              output: Optional[str] = None) -> ExperimentSpec:
    """Read a spec file; seed, trials and output override the file's values."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"spec file not found: {path}")
    values = dotenv_values(path, interpolate=False)

    base = dict(DEFAULTS)
    sweep = []
    kind = None
    file_trials = DEFAULT_TRIALS
    file_output = None
    for key, text in values.items():
        if text is None or not text.strip():
            raise ConfigError(f"{key} has no value")
        if key.startswith("sweep."):
            name = key[len("sweep."):]
            if name not in SWEEPABLE:
                raise ConfigError(f"cannot sweep {name!r}; sweepable: {', '.join(SWEEPABLE)}")
            points = tuple(_parse_scalar(name, part) for part in text.split(",") if part.strip())
            if not points:
                raise ConfigError(f"sweep {name!r} is empty")
            sweep.append((name, points))
        elif key == "kind":
            kind = text.strip()
        elif key == "output":
            file_output = text.strip()
        elif key == "trials":
            file_trials = _parse_scalar(key, text)
        elif key == "rho":
            base["rho_p"] = base["rho_d"] = _parse_scalar(key, text)
        elif key in DEFAULTS:
            base[key] = _parse_scalar(key, text)
        else:
            raise ConfigError(f"unknown spec key {key!r}")

    if kind is None:
        raise ConfigError("spec is missing 'kind'")
    if kind not in KINDS:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    if seed is not None:
        base["seed"] = seed
    trials = file_trials if trials is None else trials
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")

    tau_follows_K = base["tau"] is None
    if tau_follows_K:
        base["tau"] = base["K"]
    spec = ExperimentSpec(
        kind=kind,
        sweep=tuple(sweep),
        base=SystemConfig(**base),
        trials=trials,
        output_path=str(resolve_output(output or file_output or f"{kind}.csv")),
        tau_follows_K=tau_follows_K,
    )
    if kind in OPTIMIZATION_KINDS:
        for config in spec.points():
            if config.rho_p != config.rho_d:
                raise ConfigError(f"{kind} optimizes a single average power; set rho instead of "
                                  f"rho_p={config.rho_p:g} / rho_d={config.rho_d:g}")
    logger.debug("loaded %s: %d sweep axes, %d trials", kind, len(spec.sweep), trials)
    return spec


# Recipes


def _rate_validation(spec: ExperimentSpec, config: SystemConfig, workers: int) -> List[Dict]:
    mc = ergodic_rate_mc(config, spec.trials, workers=workers)
    pilots = make_dft_pilots(config.tau, config.K)
    eta_sq = estimate_quality(pilots, config.rho_p, config.M).eta_sq
    closed = closed_form_rate(config.M, config.K, config.rho_d, eta_sq)
    se_mc = sum_spectral_efficiency(mc.per_user, config.tau, config.T)
    se_closed = sum_spectral_efficiency([closed] * config.K, config.tau, config.T)
    duty = (config.T - config.tau) / config.T
    return [{
        "snr_db": to_db(config.rho_d), "rho_p": config.rho_p, "rho_d": config.rho_d,
        "M": config.M, "K": config.K, "T": config.T, "tau": config.tau, "trials": spec.trials,
        "se_mc": se_mc,
        "se_mc_std_err": duty * config.K * mc.std_err,
        "se_closed": se_closed,
        "se_low": float(low_snr_se(config.M, config.K, config.T, config.tau, config.rho_p, config.rho_d)),
        "rel_gap": abs(se_mc - se_closed) / se_closed if se_closed > 0 else abs(se_mc),
    }]


def _optimize_all(config: SystemConfig):
    M, K, T, rho = config.M, config.K, config.T, config.rho_d
    return {
        "onebit_case1": optimize_case1(M, K, T, rho * T, receiver="one-bit"),
        "onebit_case2": optimize_case2(M, K, T, rho, receiver="one-bit"),
        "conv_case1": optimize_case1(M, K, T, rho * T, receiver="conventional"),
        "conv_case2": optimize_case2(M, K, T, rho, receiver="conventional"),
    }


def _power_columns(config: SystemConfig) -> Dict:
    return {"snr_db": to_db(config.rho_d), "rho": config.rho_d,
            "M": config.M, "K": config.K, "T": config.T}


def _se_vs_T(spec, config, workers):
    results = _optimize_all(config)
    row = _power_columns(config)
    for name, result in results.items():
        row[f"{name}_se"] = result.se_star
    for prefix in ("onebit", "conv"):
        case1 = results[f"{prefix}_case1"].se_star
        row[f"{prefix}_gap"] = (case1 - results[f"{prefix}_case2"].se_star) / case1
    return [row]


def _opt_tau(spec, config, workers):
    results = _optimize_all(config)
    row = _power_columns(config)
    for name, result in results.items():
        row[f"{name}_tau"] = result.tau_star
        if result.gamma_star is not None:
            row[f"{name}_gamma"] = result.gamma_star
    return [row]


def _mse_sweep(spec, config, workers):
    quality = estimate_quality(make_dft_pilots(config.tau, config.K), config.rho_p, config.M)
    return [{"snr_db": to_db(config.rho_p), "rho_p": config.rho_p, "M": config.M,
             "K": config.K, "tau": config.tau, "eta_sq": quality.eta_sq,
             "mse": quality.mse, "sigma_sq": quality.sigma_sq}]


def _moments_check(spec, config, workers):
    report = appendix_moments_mc(config, spec.trials, workers=workers)
    common = {"M": config.M, "K": config.K, "tau": config.tau, "rho_p": config.rho_p,
              "rho_d": config.rho_d, "trials": spec.trials}
    return [dict(common, moment=check.name, simulated=check.simulated,
                 predicted=check.predicted, rel_error=check.rel_error)
            for check in report.checks]


RECIPES = {
    "rate-validation": _rate_validation,
    "se-vs-T": _se_vs_T,
    "opt-tau-vs-power": _opt_tau,
    "opt-tau-vs-T": _opt_tau,
    "mse-sweep": _mse_sweep,
    "moments-check": _moments_check,
}


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return f"{float(value):.10g}"


def write_csv(path: Path, columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(column)) for column in columns])


def write_manifest(path: Path, spec: ExperimentSpec, rows: int, wall_time: float) -> None:
    manifest = {
        "kind": spec.kind,
        "config": asdict(spec.base),
        "sweep": {name: list(values) for name, values in spec.sweep},
        "seed": spec.base.seed,
        "trials": spec.trials,
        "rows": rows,
        "output": str(spec.output_path),
        "wall_time_s": round(wall_time, 3),
        "version": __version__,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def workers_from_env() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(workers, 1)


def run_experiment(spec: ExperimentSpec, workers: int = 1, quiet: bool = True) -> Tuple[Path, Path]:
    """Run the recipe over every sweep point; returns (csv path, manifest path)."""
    recipe = RECIPES[spec.kind]
    started = time.perf_counter()
    rows = []
    for index, config in enumerate(spec.points(), 1):
        print_colored(f"  [{index}] M={config.M} K={config.K} T={config.T} tau={config.tau} "
                      f"rho_p={config.rho_p:.4g} rho_d={config.rho_d:.4g}", Colors.CYAN, quiet)
        rows.extend(recipe(spec, config, workers))
    wall_time = time.perf_counter() - started

    csv_path = Path(spec.output_path)
    manifest_path = csv_path.with_name(csv_path.name + ".json")
    write_csv(csv_path, COLUMNS[spec.kind], rows)
    write_manifest(manifest_path, spec, len(rows), wall_time)
    logger.info("%s: %d rows in %.2f s -> %s", spec.kind, len(rows), wall_time, csv_path)
    return csv_path, manifest_path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="One-bit massive MIMO experiment runner",
                                     allow_abbrev=False)
    parser.add_argument("--spec", required=True, help="experiment spec file")
    parser.add_argument("--seed", type=int, help="master RNG seed (overrides the spec)")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials (overrides the spec)")
    parser.add_argument("--out", help="CSV output path (overrides the spec)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def main(argv=None) -> int:
    """Main script execution"""
    args = build_parser().parse_args(argv)

    # Load .env from the project root
    load_dotenv(Path(__file__).resolve().parent.parent / ".env")
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        spec = load_spec(args.spec, seed=args.seed, trials=args.trials, output=args.out)
        banner("One-Bit MIMO Experiment Runner", args.quiet)
        print_colored(f"Running {spec.kind} (seed {spec.base.seed}, {spec.trials} trials)...",
                      Colors.BLUE, args.quiet)
        csv_path, manifest_path = run_experiment(spec, workers=workers_from_env(), quiet=args.quiet)
    except (OneBitMimoError, OSError) as e:
        print_colored(f"Error: {e}", Colors.RED, stream=sys.stderr)
        return 1

    print_colored(f"✓ Results written to {csv_path}", Colors.GREEN, args.quiet)
    print_colored(f"✓ Run manifest written to {manifest_path}", Colors.GREEN, args.quiet)
    return 0


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print_colored("\nOperation cancelled by user", Colors.YELLOW)
        sys.exit(1)
