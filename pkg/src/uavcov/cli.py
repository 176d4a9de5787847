"""Batch command-line front end.

Subcommands: coverage, density-sweep, optimal-density, simulate, validate.
Parameters come from a flat key=value config file and/or flags (flags win);
keys carry their units (altitude_m, density_per_km2, a_los_db, ...) and are
converted to SI exactly once, at this boundary.

Exit codes: 0 ok, 1 validation failure, 2 config error, 3 numerical failure,
4 no admissible polynomial root.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

import numpy as np

from . import density as density_mod
from . import mc, units, validate
from .coverage import coverage_probability
from .errors import ConfigError, NoRootError, NumericalError
from .model import ChannelParams, LosRadiusMap, NetworkConfig, los_radius_at

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NOROOT = 4

_FLOAT_FMT = "{:.17g}"


@dataclasses.dataclass
class RunConfig:
    """Full run description in user units (km^-2, m, dBm, dB)."""

    density_per_km2: float = 1.0
    altitude_m: float = 50.0
    los_radius_m: float = 200.0
    los_radius_affine_c0_m: float | None = None
    los_radius_affine_c1: float | None = None
    tx_power_dbm: float = 40.0
    noise_power_dbm: float = -97.0
    alpha_los: float = 2.1
    alpha_nlos: float = 4.0
    a_los_db: float = -41.1
    a_nlos_db: float = -32.9
    m_los: int = 3
    sidelobe_gain_db: float = 0.0
    tau_db: str = "0"
    lambda_per_km2: str = "0.01:100:60,log"
    trials: int = 100_000
    seed: int = 1
    quad_order: int = 64
    metric: str = "sir"
    los_model: str = "ball"
    logistic_a: float = 9.61
    logistic_b: float = 0.16

    def network_config(self) -> NetworkConfig:
        ch = ChannelParams(
            alpha_los=self.alpha_los,
            alpha_nlos=self.alpha_nlos,
            a_los=units.db_to_linear(self.a_los_db),
            a_nlos=units.db_to_linear(self.a_nlos_db),
            m_los=int(self.m_los),
            sidelobe_gain=units.db_to_linear(self.sidelobe_gain_db),
        )
        if self.los_radius_affine_c0_m is not None or self.los_radius_affine_c1 is not None:
            rmap = LosRadiusMap.affine(
                self.los_radius_affine_c0_m or 0.0, self.los_radius_affine_c1 or 0.0
            )
            radius = los_radius_at(rmap, self.altitude_m)
        else:
            radius = self.los_radius_m
        return NetworkConfig(
            density=units.per_km2_to_per_m2(self.density_per_km2),
            altitude=self.altitude_m,
            los_radius=radius,
            tx_power=units.dbm_to_watt(self.tx_power_dbm),
            noise_power=units.dbm_to_watt(self.noise_power_dbm),
            channel=ch,
        )

    def los_model_obj(self, cfg: NetworkConfig):
        if self.los_model == "ball":
            return mc.BallLos(cfg.los_radius)
        if self.los_model == "probabilistic":
            return mc.ProbabilisticLos(mc.elevation_logistic(self.logistic_a, self.logistic_b))
        raise ConfigError(f"unknown los_model {self.los_model!r} (ball|probabilistic)")


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(RunConfig)}
_INT_KEYS = {"m_los", "trials", "seed", "quad_order"}
_STR_KEYS = {"tau_db", "lambda_per_km2", "metric", "los_model"}


def _coerce(key: str, raw: str):
    if key in _INT_KEYS:
        return int(raw)
    if key in _STR_KEYS:
        return raw
    return float(raw)


def load_config_file(path: str) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, raw = (part.strip() for part in stripped.split("=", 1))
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _coerce(key, raw)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def build_run_config(args: argparse.Namespace) -> RunConfig:
    values = load_config_file(args.config) if args.config else {}
    for key in _FIELD_TYPES:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            values[key] = flag_val
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def parse_tau_db_spec(spec: str) -> list[float]:
    """'lo:hi:step' (inclusive), a comma list, or a single value, in dB."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"tau sweep must be lo:hi:step, got {spec!r}")
        lo, hi, step = (float(p) for p in parts)
        if step <= 0 or hi < lo:
            raise ConfigError(f"bad tau sweep {spec!r}")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [lo + i * step for i in range(count)]
    return [float(p) for p in spec.split(",")]


def parse_lambda_spec(spec: str) -> list[float]:
    """'lo:hi:points[,log|,lin]' or a single value, in km^-2."""
    spec = spec.strip()
    mode = "log"
    if "," in spec:
        spec, mode = (p.strip() for p in spec.rsplit(",", 1))
        if mode not in ("log", "lin"):
            raise ConfigError(f"grid mode must be log or lin, got {mode!r}")
    if ":" not in spec:
        return [float(spec)]
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"density sweep must be lo:hi:points, got {spec!r}")
    lo, hi, points = float(parts[0]), float(parts[1]), int(parts[2])
    if lo <= 0 or hi < lo or points < 1:
        raise ConfigError(f"bad density sweep {spec!r}")
    if points == 1:
        return [lo]
    if mode == "log":
        return list(np.logspace(math.log10(lo), math.log10(hi), points))
    return list(np.linspace(lo, hi, points))


def _fmt(value) -> str:
    if isinstance(value, float):
        return _FLOAT_FMT.format(value)
    return str(value)


def write_csv(path: str | None, header: list[str], rows, footer: str | None = None) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    if footer:
        lines.append(footer)
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def write_json(path: str | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_coverage(rc: RunConfig, out: str | None) -> int:
    cfg = rc.network_config()
    rows = []
    for tau_db in parse_tau_db_spec(rc.tau_db):
        res = coverage_probability(units.db_to_linear(tau_db), cfg, order=rc.quad_order)
        rows.append((tau_db, res.total, res.los_term, res.nlos_term))
    write_csv(out, ["tau_db", "p_c", "los_term", "nlos_term"], rows)
    return EXIT_OK


def cmd_density_sweep(rc: RunConfig, out: str | None) -> int:
    cfg = rc.network_config()
    grid_km2 = parse_lambda_spec(rc.lambda_per_km2)
    tau = units.db_to_linear(parse_tau_db_spec(rc.tau_db)[0])
    rows = []
    for lam_km2 in grid_km2:
        lam = units.per_km2_to_per_m2(lam_km2)
        res = coverage_probability(tau, cfg.with_density(lam), order=rc.quad_order)
        rows.append((lam_km2, res.total))
    best = max(range(len(rows)), key=lambda i: rows[i][1])
    footer = (
        f"# argmax lambda_per_km2={_fmt(rows[best][0])} p_c={_fmt(rows[best][1])}"
    )
    write_csv(out, ["lambda_per_km2", "p_c"], rows, footer=footer)
    return EXIT_OK


def cmd_optimal_density(rc: RunConfig, out: str | None) -> int:
    cfg = rc.network_config()
    tau = units.db_to_linear(parse_tau_db_spec(rc.tau_db)[0])
    grid = [units.per_km2_to_per_m2(x) for x in parse_lambda_spec(rc.lambda_per_km2)]
    opt = density_mod.lambda_lower_bound(tau, cfg, order=rc.quad_order, grid=grid,
                                         grid_order=rc.quad_order)
    betas = density_mod.beta_coeffs(tau, cfg, order=rc.quad_order)
    payload = {
        "lambda_lb": units.per_m2_to_per_km2(opt.lambda_lb),
        "lambda_star_grid": units.per_m2_to_per_km2(opt.lambda_star_grid),
        "roots": [units.per_m2_to_per_km2(r) for r in opt.all_real_roots],
        "betas": list(betas.coefficients),
        "units": {"lambda": "per_km2", "betas": "SI (m^2 lambda-powers)"},
    }
    write_json(out, payload)
    if opt.lambda_lb > opt.lambda_star_grid:
        print(
            f"bound violated: lambda_lb={payload['lambda_lb']:.6g} > "
            f"lambda_star_grid={payload['lambda_star_grid']:.6g} (per km^2)",
            file=sys.stderr,
        )
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_simulate(rc: RunConfig, out: str | None, workers: int | None) -> int:
    cfg = rc.network_config()
    model = rc.los_model_obj(cfg)
    taus_db = parse_tau_db_spec(rc.tau_db)
    taus = [units.db_to_linear(t) for t in taus_db]
    metrics = ("sir", "sinr") if rc.metric == "both" else (rc.metric,)
    if any(m not in ("sir", "sinr") for m in metrics):
        raise ConfigError(f"metric must be sir, sinr or both, got {rc.metric!r}")
    rows = []
    for metric in metrics:
        ests = mc.estimate_coverage(cfg, model, taus, rc.trials, rc.seed,
                                    metric=metric, workers=workers)
        rows += [
            (tau_db, metric, e.coverage, e.stderr, e.trials, e.seed)
            for tau_db, e in zip(taus_db, ests)
        ]
    write_csv(out, ["tau_db", "metric", "coverage", "stderr", "trials", "seed"], rows)
    return EXIT_OK


def cmd_validate(rc: RunConfig, out: str | None, workers: int | None) -> int:
    cfg = rc.network_config()
    tau = units.db_to_linear(parse_tau_db_spec(rc.tau_db)[0])
    results = [
        validate.finite_difference_gate(),
        validate.identity_gate(),
        validate.mc_agreement_gate(cfg, trials=rc.trials, seed=rc.seed,
                                   order=rc.quad_order, workers=workers),
        validate.bound_gate(tau=tau, cfg=cfg, order=rc.quad_order),
    ]
    for res in results:
        print(res.line())
    payload = {
        res.name: {
            "passed": res.passed,
            "worst": res.worst,
            "tolerance": res.tolerance,
            "detail": res.detail,
            **res.extras,
        }
        for res in results
    }
    if out:
        write_json(out, payload)
    if all(res.passed for res in results):
        return EXIT_OK
    failing = {res.name: res.detail for res in results if not res.passed}
    print(f"failing gates with configuration {dataclasses.asdict(rc)}: {failing}",
          file=sys.stderr)
    return EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="flat key=value config file")
    shared.add_argument("--out", help="output path (default: stdout)")
    shared.add_argument("--workers", type=int, default=None,
                        help="worker processes for simulation (UAVCOV_THREADS also caps)")
    for key, f in _FIELD_TYPES.items():
        flag = "--" + key.replace("_", "-")
        if key in _INT_KEYS:
            shared.add_argument(flag, type=int, default=None)
        elif key in _STR_KEYS:
            shared.add_argument(flag, type=str, default=None)
        else:
            shared.add_argument(flag, type=float, default=None)

    parser = argparse.ArgumentParser(
        prog="uavcov",
        description="SIR coverage of cellular-connected aerial users: analytics and simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("coverage", parents=[shared],
                   help="analytic coverage over a tau sweep (CSV)")
    sub.add_parser("density-sweep", parents=[shared],
                   help="analytic coverage over a density grid (CSV + argmax footer)")
    sub.add_parser("optimal-density", parents=[shared],
                   help="polynomial-root density estimate vs grid optimum (JSON)")
    sub.add_parser("simulate", parents=[shared],
                   help="Monte Carlo coverage estimates (CSV)")
    sub.add_parser("validate", parents=[shared],
                   help="run the correctness gates and report pass/fail")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = build_run_config(args)
        if args.command == "coverage":
            return cmd_coverage(rc, args.out)
        if args.command == "density-sweep":
            return cmd_density_sweep(rc, args.out)
        if args.command == "optimal-density":
            return cmd_optimal_density(rc, args.out)
        if args.command == "simulate":
            return cmd_simulate(rc, args.out, args.workers)
        return cmd_validate(rc, args.out, args.workers)
    except NoRootError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOROOT
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
