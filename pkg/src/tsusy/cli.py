"""Command-line interface.

Subcommands::

    tsusy simulate <config>        one scenario -> CSV/JSON (+ optional SVG)
    tsusy sweep <config>           Cartesian parameter sweep -> results table
    tsusy verify-algebra <config>  discrete super-algebra residuals (JSON)
    tsusy verify-ansatz <config>   spatial ansatz residuals (JSON)
    tsusy neutrino                 closed-form neutrino preset
    tsusy convert <v> <from> <to>  natural-unit conversion

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O failure.  Configs are fully validated before anything is written.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import approx, dynamics, oscillation
from .config import (RunConfig, Solver, load_algebra_config, load_ansatz_config, load_run_config,
                     load_sweep, resolve_row)
from .dynamics import Convention, ScenarioParams
from .errors import ConfigError, NumericalError, TsusyError
from .operators import (TimeGrid, algebra_residuals, build_charge_operators, hamiltonian_defect,
                        observed_order)
from .oscillation import ClosedFormMode, MixingConfig, OscillationResult
from .profiles import MassProfile, ProfileKind, superpotentials
from .spatial import ansatz_residual, basis_action_residuals
from .units import convert_units, max_oscillation_distance

__all__ = ["main", "run_scenario", "run_sweep", "NeutrinoPreset", "ScenarioOutput",
           "CSV_COLUMNS", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERICAL", "EXIT_IO"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

CSV_COLUMNS = ("t", "m", "W_plus", "W_minus", "ReE_plus", "ImE_plus", "ReE_minus", "ImE_minus",
               "alpha", "beta", "rho", "P")
ROUNDOFF_DEFECT = 1e-9
SWEEP_STATS = ("status", "peak_P", "t_peak", "alpha_end", "beta_end", "rho_end", "message")


def fmt(x) -> str:
    """17 significant digits: enough for every double to round-trip."""
    return format(float(x), ".17g")


# -- scenario ---------------------------------------------------------------

@dataclass(frozen=True)
class NeutrinoPreset:
    k: float = 1e6
    m0: float = 1e-1
    delta_m2: float = 1e-4
    sin2_2theta: float = 1.0

    @property
    def lam(self) -> float:
        return self.delta_m2 / self.k

    def config(self, mode: ClosedFormMode = ClosedFormMode.UR_REDUCED, samples: int = 2001) -> RunConfig:
        profile = MassProfile.sinusoidal(self.m0, self.lam)
        return RunConfig(profile, self.k, MixingConfig.from_sin2_2theta(self.sin2_2theta).theta,
                         scenario="neutrino", t_span=profile.domain, samples=samples,
                         closed_form=ClosedFormMode(mode))


@dataclass
class ScenarioOutput:
    config: RunConfig
    columns: dict
    result: OscillationResult
    diagnostics: dict

    @property
    def summary(self) -> str:
        p, t = self.result.peak
        return (f"{self.config.scenario}: peak P = {p:.10g} at t = {t:.10g} "
                f"[{self.config.probability_source}]")


def _trajectory(cfg: RunConfig, params: ScenarioParams):
    if cfg.solver is Solver.COUPLED:
        return dynamics.solve_coupled(params)
    if cfg.solver is Solver.SECOND_ORDER:
        return dynamics.solve_second_order(params)
    psi0 = dynamics.initial_state(params)
    t0 = params.t_span[0]
    dp, dm = dynamics._coupled_derivative(params, t0, *psi0)
    E0 = (dynamics.log_derivatives(params.convention, [psi0[0]], [dp])[0],
          dynamics.log_derivatives(params.convention, [psi0[1]], [dm])[0])
    return dynamics.solve_riccati(params, E0, psi0)


def _closed_form_E(cfg: RunConfig, times):
    mode = cfg.closed_form
    if mode is ClosedFormMode.MASSIVE:
        return approx.limit_E_massive(cfg.profile, times, cfg.convention, k=cfg.k)
    if cfg.profile.kind is not ProfileKind.SINUSOIDAL:
        raise ConfigError("ultra-relativistic closed forms need a sinusoidal profile")
    if cfg.convention is not Convention.PHYSICAL:
        raise ConfigError("ultra-relativistic closed forms are in the Physical convention")
    return approx.limit_E_ur_sinusoidal(cfg.profile.m0, cfg.profile.lam, cfg.k, times)


def run_scenario(cfg: RunConfig) -> ScenarioOutput:
    """Compute the CSV columns, probability series and diagnostics for one config."""
    params = cfg.scenario_params()
    times = params.times
    diagnostics = {}
    if cfg.closed_form is None:
        traj = _trajectory(cfg, params)
        E_plus, E_minus = traj.E_plus, traj.E_minus
        if not (np.all(np.isfinite(E_plus)) and np.all(np.isfinite(E_minus))):
            raise NumericalError("E is undefined where psi vanishes; use a different solver or ic_mode")
        result = oscillation.probability_from_E(cfg.theta, E_plus, E_minus, times)
        diagnostics.update(norm_defect=traj.norm_defect() if cfg.convention is Convention.PHYSICAL
                           else None, poles=[list(p) for p in traj.poles], **traj.stats)
    else:
        limit = _closed_form_E(cfg, times)
        E_plus, E_minus = limit.E_plus, limit.E_minus
        kwargs = {"profile": cfg.profile}
        if cfg.closed_form is not ClosedFormMode.MASSIVE:
            kwargs["k"] = cfg.k
        result = oscillation.probability_closed_form(cfg.closed_form, cfg.theta, times, **kwargs)
        diagnostics.update(validity=limit.validity, applicable=limit.applicable, **result.metadata)
    w = superpotentials(cfg.profile, times)
    columns = {
        "t": times, "m": cfg.profile.mass(times), "W_plus": w.w_plus, "W_minus": w.w_minus,
        "ReE_plus": E_plus.real, "ImE_plus": E_plus.imag,
        "ReE_minus": E_minus.real, "ImE_minus": E_minus.imag,
        "alpha": result.alpha, "beta": result.beta, "rho": result.rho, "P": result.probability,
    }
    peak, t_peak = result.peak
    diagnostics.update(peak_P=peak, t_peak=t_peak, exceeds_unity=result.exceeds_unity)
    return ScenarioOutput(cfg, columns, result, diagnostics)


def render_csv(columns: dict, names=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    arrays = [np.broadcast_to(np.asarray(columns[n], dtype=float), np.shape(columns["t"])) for n in names]
    for row in zip(*arrays):
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def render_json(out: ScenarioOutput) -> str:
    bundle = {
        "metadata": out.config.describe(),
        "diagnostics": out.diagnostics,
        "source": out.result.source.value,
        "columns": list(CSV_COLUMNS),
        "series": {n: out.columns[n] for n in CSV_COLUMNS},
    }
    return json.dumps(_jsonable(bundle), indent=1) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, output) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        write_atomic(output, text)


# -- sweep ------------------------------------------------------------------

def _sweep_row(job):
    """Evaluate one sweep row; never raises (status column carries the outcome)."""
    row, base_dir = job
    stats = dict.fromkeys(SWEEP_STATS[1:-1], math.nan)
    try:
        cfg = resolve_row(row, base_dir)
        out = run_scenario(cfg)
        r = out.result
        stats.update(peak_P=out.diagnostics["peak_P"], t_peak=out.diagnostics["t_peak"],
                     alpha_end=r.alpha[-1], beta_end=r.beta[-1], rho_end=r.rho[-1])
        status, message = "ok", ""
    except ConfigError as exc:
        status, message = "config_error", str(exc)
    except ValueError as exc:
        status, message = "config_error", str(exc)
    except (NumericalError, ArithmeticError) as exc:
        status, message = "numerical_error", f"{type(exc).__name__}: {exc}"
    return [status] + [fmt(stats[k]) for k in SWEEP_STATS[1:-1]] + [message]


def run_sweep(path, parallelism: int = 1):
    """Return ``(header, rows)``; rows are lists of strings in lexicographic order."""
    if parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    names, rows, _, base_dir = load_sweep(path)
    jobs = [(row, base_dir) for _, row in rows]
    if parallelism == 1 or len(jobs) == 1:
        results = [_sweep_row(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(parallelism, len(jobs))) as pool:
            results = list(pool.map(_sweep_row, jobs))
    header = ["row"] + names + list(SWEEP_STATS)
    table = [[str(i)] + list(values) + res for i, ((values, _), res) in enumerate(zip(rows, results))]
    return header, table


def render_table_csv(header, table) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(table)
    return buf.getvalue()


def render_table_json(header, table) -> str:
    return json.dumps({"columns": header, "rows": [dict(zip(header, r)) for r in table]}, indent=1) + "\n"


# -- verification reports ---------------------------------------------------

def algebra_report(cfg) -> dict:
    reports = []
    t0, t1 = cfg.t_span
    for profile in cfg.profiles:
        grid = TimeGrid(t0, t1, cfg.n_points)
        q_plus, q_minus = build_charge_operators(grid, profile, cfg.scheme)
        res = algebra_residuals(q_plus, q_minus)
        norm = max(res.h_norm, res.q_norm, 1.0)
        hs, defects = [], []
        for level in range(cfg.refinements):
            g = TimeGrid(t0, t1, (cfg.n_points - 1) * 2 ** level + 1)
            v = np.cos(np.pi * (g.times - t0) / (t1 - t0))
            hs.append(g.h)
            defects.append(max(hamiltonian_defect(g, profile, v, cfg.scheme, b) for b in ("plus", "minus")))
        # constant m: H_pm equals D2 + W_pm exactly, the defect is pure round-off
        floor = ROUNDOFF_DEFECT * max(1.0, float(np.max(np.abs(profile.mass(grid.times))))) / min(hs)
        order = observed_order(hs, defects) if min(defects) > floor else None
        reports.append({
            "profile": profile.spec(),
            **res._asdict(),
            "normalized_max": max(res.anticommutator_residual, res.commutator_residual,
                                  res.nilpotency_residual) / norm,
            "defects": defects,
            "grid_steps": hs,
            "defect_order": order,
        })
    return {"scheme": cfg.scheme.value, "n_points": cfg.n_points, "profiles": reports}


def ansatz_report(ansatz, method) -> dict:
    res = ansatz_residual(ansatz, method)
    return {"k1": ansatz.k1, "k2": ansatz.k2, "k": ansatz.k, "f": ansatz.f.kind.value,
            "method": method, "counts": list(ansatz.region.counts),
            "residual_plus": res.residual_plus, "residual_minus": res.residual_minus,
            "basis_checks": basis_action_residuals()}


# -- argument handling ------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--svg", help="also write an SVG chart of P(t)")

    ap = argparse.ArgumentParser(prog="tsusy", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="run one scenario")
    p.add_argument("config")
    p = sub.add_parser("sweep", parents=[common], help="run a parameter sweep")
    p.add_argument("config")
    p.add_argument("--parallelism", type=int, default=1)
    p = sub.add_parser("verify-algebra", parents=[common], help="discrete super-algebra residuals")
    p.add_argument("config")
    p = sub.add_parser("verify-ansatz", parents=[common], help="spatial ansatz residuals")
    p.add_argument("config")
    p = sub.add_parser("neutrino", parents=[common], help="closed-form neutrino preset")
    p.add_argument("--sin2-2theta", type=float, default=1.0)
    p.add_argument("--mode", choices=("URReduced", "URFull"), default="URReduced")
    p.add_argument("--samples", type=int, default=2001)
    p = sub.add_parser("convert", help="natural-unit conversion")
    p.add_argument("value", type=float)
    p.add_argument("from_unit")
    p.add_argument("to_unit")
    return ap


def _scenario_command(cfg: RunConfig, args) -> int:
    fmt_ = args.format or cfg.output_format
    output = args.output or cfg.output
    out = run_scenario(cfg)
    text = render_csv(out.columns) if fmt_ == "csv" else render_json(out)
    _emit(text, output)
    if args.svg:
        from .plotting import probability_svg
        probability_svg(out.columns["t"], out.columns["P"], args.svg, cfg.scenario)
    print(out.summary, file=sys.stderr if output in (None, "-") else sys.stdout)
    return EXIT_OK


def _dispatch(args) -> int:
    if args.command == "simulate":
        return _scenario_command(load_run_config(args.config), args)
    if args.command == "neutrino":
        preset = NeutrinoPreset(sin2_2theta=args.sin2_2theta)
        if not 0 < args.sin2_2theta <= 1:
            raise ConfigError("--sin2-2theta must be in (0, 1]")
        if args.samples < 3:
            raise ConfigError("--samples must be >= 3")
        cfg = preset.config(ClosedFormMode(args.mode), args.samples)
        code = _scenario_command(cfg, args)
        out_stream = sys.stderr if args.output in (None, "-") else sys.stdout
        print(f"lambda = {preset.lam:.6g} eV, max distance pi*hbar*c/lambda = "
              f"{max_oscillation_distance(preset.lam, 'km'):.6g} km", file=out_stream)
        return code
    if args.command == "sweep":
        header, table = run_sweep(args.config, args.parallelism)
        text = render_table_json(header, table) if args.format == "json" else render_table_csv(header, table)
        _emit(text, args.output)
        ok = sum(r[len(header) - len(SWEEP_STATS)] == "ok" for r in table)
        print(f"sweep: {ok}/{len(table)} rows ok", file=sys.stderr)
        return EXIT_OK if ok else EXIT_NUMERICAL
    if args.command == "verify-algebra":
        report = algebra_report(load_algebra_config(args.config))
    elif args.command == "verify-ansatz":
        report = ansatz_report(*load_ansatz_config(args.config))
    else:
        print(repr(convert_units(args.value, args.from_unit, args.to_unit)))
        return EXIT_OK
    text = json.dumps(_jsonable(report), indent=1) + "\n"
    sys.stdout.write(text)
    if args.output:
        write_atomic(args.output, text)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError, TsusyError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
