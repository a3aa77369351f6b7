#!/usr/bin/env python3
"""
ncfields command line
=====================
Parameter sweeps and checks for the deformed symplectic structures.

Usage:
    ncfields spectrum --kind E --theta 0,0.5,1 --n 1..8
    ncfields dressing-check --kind both --theta 0,1,10 --n-max 4
    ncfields evolve --kind B --theta 1 --n 1 --dt 0.05 --t-end 204.8
    ncfields qhe filling --m 0,1,2 --theta-bar 1
    ncfields qhe jain --m 1 --p 1,2,3

Exit codes: 0 ok, 1 tolerance violation or step failure,
2 usage or configuration error, 3 I/O error.
"""

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO

import numpy as np
import pandas as pd
from pydantic import ValidationError

from .chiral_edge import (
    CoupledEdgeModel,
    chiral_velocities,
    coupled_edge_eigen,
    deformed_bracket_delta,
    dispersion_from_hamiltonian,
    edge_pair_model,
    filling_factor,
    jain_matching_theta_bar,
    jain_theta_bar,
    nonlinear_dispersion,
    shifted_field_hamiltonian,
    statistical_phase,
    theta_bar,
    SECTORS,
)
from .config import RunSettings, ToolkitConfig, get_config, load_user_config, resolve_option
from .dynamics import energy_drift, exact_evolve, frequency_extract, midpoint_evolve, trajectory_frame, bin_width
from .errors import ConfigurationError, InvalidArgumentError, InvalidModelError, StepFailureError
from .reporting import (
    SweepSpec,
    parse_float_list,
    parse_fraction_list,
    parse_int_range,
    render_table,
    rows_to_frame,
    write_text,
)
from .spectra import SpectrumSource, Splitting, closed_form_spectrum, spectrum_rows, spectrum_table
from .symplectic_core import DeformationKind, DeformationParams, pullback_residual

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_USAGE = 2
EXIT_IO = 3

DRESSING_COLUMNS = ["kind", "theta", "n_modes", "residual", "passed"]


# ============================================================================
# Run context
# ============================================================================

@dataclass
class RunContext:
    """Resolved settings and streams for one command-line run."""

    settings: RunSettings
    config: ToolkitConfig
    user_config: Dict[str, Any] = field(default_factory=dict)
    stdout: TextIO = None
    summary: TextIO = None

    def __post_init__(self):
        self.stdout = self.stdout or sys.stdout
        self.summary = self.summary or sys.stderr

    def option(self, args: argparse.Namespace, name: str, section: Optional[str] = None, fallback: Any = None) -> Any:
        """Flag, then config file, then packaged default."""
        default = self.config.default(section, name, fallback) if section else fallback
        return resolve_option(name, getattr(args, name, None), self.user_config, default)

    def output_format(self, args: argparse.Namespace) -> str:
        return self.option(args, "format", "output", "csv")

    def output_path(self, args: argparse.Namespace, command: str, fmt: str) -> Optional[Path]:
        """--out, else <output dir>/<command>.<format>, else stdout (None)."""
        out = getattr(args, "out", None)
        if out is not None:
            return Path(out)
        if self.settings.output_dir is not None:
            return Path(self.settings.output_dir) / f"{command}.{fmt}"
        return None

    def emit(self, frame: pd.DataFrame, path: Optional[Path], fmt: str) -> None:
        write_text(render_table(frame, fmt), path, self.stdout)

    def report(self, line: str) -> None:
        print(line, file=self.summary)


def build_settings(args: argparse.Namespace, user_config: Dict[str, Any], config: ToolkitConfig) -> RunSettings:
    """Flags > config file > environment > packaged defaults."""
    settings = RunSettings(
        output_dir=config.default("output", "dir"),
        workers=int(config.default("sweep", "workers", 1)),
    )
    env = RunSettings.from_env()
    settings = settings.merged(**{name: getattr(env, name) for name in env.model_fields_set})
    settings = settings.merged(
        output_dir=user_config.get("out_dir"),
        workers=user_config.get("workers"),
        verbose=user_config.get("verbose"),
    )
    return settings.merged(
        workers=getattr(args, "workers", None),
        verbose=True if getattr(args, "verbose", False) else None,
    )


def _fan_out(function: Callable, tasks: Sequence, workers: int) -> List:
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(function, tasks))
    return [function(task) for task in tasks]


# ============================================================================
# spectrum / dressing-check
# ============================================================================

def cmd_spectrum(spec: SweepSpec, context: RunContext) -> int:
    """Closed-form vs oracle frequencies for every (kind, theta, n)."""
    if spec.source is not None:
        return _single_source_spectrum(spec, context)
    frames = [
        spectrum_table(
            DeformationKind.from_label(kind),
            spec.theta_values,
            spec.n_values,
            splitting=spec.splitting,
            workers=context.settings.workers,
        )
        for kind in spec.kinds
    ]
    frame = pd.concat(frames, ignore_index=True)
    context.emit(frame, spec.output_path, spec.format)

    unstable = frame[~frame["stable"].astype(bool)]
    for _, row in unstable.iterrows():
        logger.warning(f"Unstable row: kind={row['kind']} theta={row['theta']} n={row['n']}")

    tolerance = context.config.cli_deviation_tol
    worst = float(frame["deviation"].max())
    if worst > tolerance:
        logger.warning(f"Closed form deviates from oracle by {worst:.3g} (tolerance {tolerance:g})")
        return EXIT_TOLERANCE
    logger.info(f"✓ {len(frame)} spectrum rows, max deviation {worst:.3g}")
    return EXIT_OK


def _single_source_spectrum(spec: SweepSpec, context: RunContext) -> int:
    frames = [
        spectrum_rows(
            DeformationKind.from_label(kind),
            spec.theta_values,
            spec.n_values,
            source=spec.source,
            splitting=spec.splitting,
            workers=context.settings.workers,
        )
        for kind in spec.kinds
    ]
    frame = pd.concat(frames, ignore_index=True)
    context.emit(frame, spec.output_path, spec.format)
    unstable = int((~frame["stable"].astype(bool)).sum())
    if unstable:
        logger.warning(f"{unstable} unstable {spec.source.value} rows")
    logger.info(f"✓ {len(frame)} {spec.source.value} spectrum rows")
    return EXIT_OK


def _spectrum_source(value: Any) -> Optional[SpectrumSource]:
    if value is None:
        return None
    try:
        return SpectrumSource(str(value).lower())
    except ValueError:
        raise InvalidArgumentError(f"Unknown spectrum source: {value}")


def cmd_dressing_check(spec: SweepSpec, context: RunContext) -> int:
    """Pullback residuals of the dressing maps; n_values holds the mode counts."""
    tolerance = context.config.algebraic_tol
    tasks = [(kind, theta, n_modes) for kind in spec.kinds for theta in spec.theta_values for n_modes in spec.n_values]

    def check(task):
        kind, theta, n_modes = task
        residual = pullback_residual(DeformationParams(kind, theta), n_modes)
        return {
            "kind": kind,
            "theta": theta,
            "n_modes": n_modes,
            "residual": residual,
            "passed": residual < tolerance,
        }

    rows = _fan_out(check, tasks, context.settings.workers)
    frame = rows_to_frame(rows, DRESSING_COLUMNS)
    context.emit(frame, spec.output_path, spec.format)

    failed = frame[~frame["passed"].astype(bool)]
    if len(failed):
        logger.warning(f"{len(failed)} dressing residuals at or above {tolerance:g}")
        return EXIT_TOLERANCE
    logger.info(f"✓ All {len(frame)} dressing residuals below {tolerance:g}")
    return EXIT_OK


def _sweep_spec(args: argparse.Namespace, context: RunContext, command: str, n_values: List[int]) -> SweepSpec:
    fmt = context.output_format(args)
    return SweepSpec(
        kind=str(context.option(args, "kind", fallback="both")),
        theta_values=parse_float_list(context.option(args, "theta", "sweep")),
        n_values=n_values,
        output_path=context.output_path(args, command, fmt),
        format=fmt,
        splitting=Splitting(str(context.option(args, "splitting", fallback="exact")).lower()),
        source=_spectrum_source(context.option(args, "source")),
    )


def run_spectrum(args: argparse.Namespace, context: RunContext) -> int:
    n_values = parse_int_range(context.option(args, "n", "sweep"))
    return cmd_spectrum(_sweep_spec(args, context, "spectrum", n_values), context)


def run_dressing_check(args: argparse.Namespace, context: RunContext) -> int:
    n_values = parse_int_range(context.option(args, "n_max", "sweep", 4))
    return cmd_dressing_check(_sweep_spec(args, context, "dressing-check", n_values), context)


# ============================================================================
# evolve
# ============================================================================

def _plain(value: float) -> str:
    """Shortest round-trip text of a float, independent of numpy scalar reprs."""
    return repr(float(value))


def cmd_evolve(
    kind: str,
    theta: float,
    n: int,
    state0: Sequence[float],
    t_end: float,
    dt: float,
    context: RunContext,
    method: str = "midpoint",
    output_path: Optional[Path] = None,
    fmt: str = "csv",
) -> int:
    """Integrate one mode, write the trajectory, report drift and spectral peaks."""
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n}")
    if dt <= 0 or t_end <= 0:
        raise InvalidArgumentError(f"dt and t-end must be positive, got dt={dt} t-end={t_end}")
    steps = int(round(t_end / dt))
    if steps < 1:
        raise InvalidArgumentError(f"t-end={t_end} is shorter than one step of dt={dt}")

    params = DeformationParams(DeformationKind.from_label(kind), theta)
    if method == "exact":
        traj = exact_evolve(params, n, state0, dt * np.arange(steps + 1))
    elif method == "midpoint":
        traj = midpoint_evolve(params, n, state0, dt, steps)
    else:
        raise InvalidArgumentError(f"Unknown method: {method}")

    context.emit(trajectory_frame(traj), output_path, fmt)

    closed = closed_form_spectrum(params, n)
    expected = sorted({abs(closed.omega_minus), abs(closed.omega_plus)})
    try:
        peaks = frequency_extract(traj)
    except InvalidArgumentError as e:
        logger.warning(f"Skipping peak extraction: {e}")
        peaks = []
    width = bin_width(traj)

    context.report(f"energy_drift={_plain(energy_drift(traj))}")
    context.report("peaks=" + ",".join(_plain(p) for p in peaks))
    context.report("expected=" + ",".join(_plain(w) for w in expected))
    for omega in expected:
        if not peaks:
            break
        nearest = min(peaks, key=lambda p: abs(p - omega))
        context.report(
            f"omega={_plain(omega)} peak={_plain(nearest)} diff={_plain(abs(nearest - omega))} bin={_plain(width)}"
        )
        if abs(nearest - omega) > width:
            logger.warning(f"No spectral peak within one bin of omega={omega:.6g}")
    return EXIT_OK


def run_evolve(args: argparse.Namespace, context: RunContext) -> int:
    fmt = context.output_format(args)
    n = parse_int_range(context.option(args, "n", "evolve", 1))
    if len(n) != 1:
        raise InvalidArgumentError("evolve takes a single mode index")
    try:
        theta = float(context.option(args, "theta", "evolve", 0.0))
        dt = float(context.option(args, "dt", "evolve"))
        t_end = float(context.option(args, "t_end", "evolve"))
    except (TypeError, ValueError) as e:
        raise InvalidArgumentError(f"Invalid evolve setting: {e}")
    return cmd_evolve(
        kind=str(context.option(args, "kind", "evolve", "B")),
        theta=theta,
        n=n[0],
        state0=parse_float_list(context.option(args, "state", "evolve")),
        t_end=t_end,
        dt=dt,
        context=context,
        method=str(context.option(args, "method", "evolve", "midpoint")),
        output_path=context.output_path(args, "evolve", fmt),
        fmt=fmt,
    )


# ============================================================================
# qhe
# ============================================================================

def _velocity_rows(args: argparse.Namespace, context: RunContext) -> pd.DataFrame:
    k_values = context.option(args, "k")
    if k_values is not None or getattr(args, "k_plus", None) is not None or getattr(args, "k_minus", None) is not None:
        k_plus = float(context.option(args, "k_plus", fallback=1.0))
        k_minus = float(context.option(args, "k_minus", fallback=1.0))
        rows = []
        for k in parse_float_list(k_values if k_values is not None else "0"):
            model = CoupledEdgeModel(k_plus=k_plus, k_minus=k_minus, k=k)
            lambda_plus, lambda_minus, _ = coupled_edge_eigen(model)
            delta = deformed_bracket_delta(model)
            rows.append({
                "k_plus": k_plus,
                "k_minus": k_minus,
                "k": k,
                "lambda_plus": lambda_plus,
                "lambda_minus": lambda_minus,
                "delta_11": delta[0, 0],
                "delta_12": delta[0, 1],
                "delta_22": delta[1, 1],
            })
        return rows_to_frame(rows, list(rows[0]))

    rows = []
    for theta in parse_float_list(context.option(args, "theta", "sweep")):
        left, right = chiral_velocities(edge_pair_model(theta))
        rows.append({"theta": theta, "theta_bar": theta_bar(theta), "v_left": left, "v_right": right})
    return rows_to_frame(rows, ["theta", "theta_bar", "v_left", "v_right"])


def _filling_rows(args: argparse.Namespace, context: RunContext) -> pd.DataFrame:
    rows = []
    for m in parse_int_range(context.option(args, "m", fallback="0..3")):
        for tb in parse_fraction_list(context.option(args, "theta_bar", fallback="1")):
            result = filling_factor(m, tb)
            rows.append({"m": m, "theta_bar": result.theta_bar, "exponent": result.exponent, "nu": result.nu})
    return rows_to_frame(rows, ["m", "theta_bar", "exponent", "nu"])


def _jain_rows(args: argparse.Namespace, context: RunContext) -> pd.DataFrame:
    columns = ["m", "p", "theta_bar", "nu", "nu_from_theta_bar", "consistent", "real_theta_exists", "matching_theta_bar"]
    rows = []
    for m in parse_int_range(context.option(args, "m", fallback="0..3")):
        for p in parse_int_range(context.option(args, "p", fallback="1..3")):
            result = jain_theta_bar(m, p)
            rows.append({
                "m": m,
                "p": p,
                "theta_bar": result.theta_bar,
                "nu": result.nu,
                "nu_from_theta_bar": result.nu_from_theta_bar,
                "consistent": result.consistent,
                "real_theta_exists": result.real_theta_exists,
                "matching_theta_bar": jain_matching_theta_bar(m, p),
            })
    return rows_to_frame(rows, columns)


def _dispersion_rows(args: argparse.Namespace, context: RunContext) -> pd.DataFrame:
    n_values = parse_int_range(context.option(args, "n", "sweep"))
    if min(n_values) < 1:
        raise InvalidArgumentError("dispersion needs mode indices >= 1")
    thetas = parse_float_list(context.option(args, "theta", "sweep"))

    def curve(theta):
        hamiltonian = shifted_field_hamiltonian(theta, max(n_values))
        return [
            {
                "theta": theta,
                "n": n,
                "energy": nonlinear_dispersion(theta, n),
                "quadrature": dispersion_from_hamiltonian(hamiltonian, n),
            }
            for n in n_values
        ]

    rows = [row for rows in _fan_out(curve, thetas, context.settings.workers) for row in rows]
    return rows_to_frame(rows, ["theta", "n", "energy", "quadrature"])


def _phase_rows(args: argparse.Namespace, context: RunContext) -> pd.DataFrame:
    position_sign = int(context.option(args, "position_sign", fallback=1))
    rows = []
    for m in parse_int_range(context.option(args, "m", fallback="0..3")):
        for theta in parse_float_list(context.option(args, "theta", "sweep")):
            for s in SECTORS:
                for s_prime in SECTORS:
                    phase = statistical_phase(m, theta, s, s_prime, position_sign)
                    rows.append({
                        "m": m,
                        "theta": theta,
                        "s": s,
                        "s_prime": s_prime,
                        "position_sign": position_sign,
                        "phase_real": phase.real,
                        "phase_imag": phase.imag,
                    })
    return rows_to_frame(rows, ["m", "theta", "s", "s_prime", "position_sign", "phase_real", "phase_imag"])


QHE_TABLES = {
    "velocities": _velocity_rows,
    "filling": _filling_rows,
    "jain": _jain_rows,
    "dispersion": _dispersion_rows,
    "phases": _phase_rows,
}


def _qhe_violations(subcommand: str, frame: pd.DataFrame, context: RunContext) -> int:
    """Rows whose numeric cross-check misses its tolerance."""
    if subcommand == "velocities" and "v_left" in frame:
        tolerance = context.config.oracle_tol
        misses = (frame["v_left"] - frame["theta_bar"]).abs() + (frame["v_right"] + frame["theta_bar"]).abs()
        return int((misses > tolerance * frame["theta_bar"]).sum())
    if subcommand == "dispersion":
        tolerance = context.config.tolerances["quadrature"]
        scale = frame["energy"].abs().clip(lower=1.0)
        return int(((frame["quadrature"] - frame["energy"]).abs() > tolerance * scale).sum())
    return 0


def cmd_qhe(subcommand: str, args: argparse.Namespace, context: RunContext) -> int:
    """Emit one quantum Hall edge table."""
    if subcommand not in QHE_TABLES:
        raise InvalidArgumentError(f"Unknown qhe table: {subcommand}")
    frame = QHE_TABLES[subcommand](args, context)
    fmt = context.output_format(args)
    context.emit(frame, context.output_path(args, f"qhe-{subcommand}", fmt), fmt)

    violations = _qhe_violations(subcommand, frame, context)
    if violations:
        logger.warning(f"{violations} {subcommand} rows fail their cross-check")
        return EXIT_TOLERANCE
    logger.info(f"✓ qhe {subcommand}: {len(frame)} rows")
    return EXIT_OK


def run_qhe(args: argparse.Namespace, context: RunContext) -> int:
    return cmd_qhe(args.table, args, context)


# ============================================================================
# Argument parsing
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    # Global flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default=argparse.SUPPRESS,
                        help='Flat YAML file of option defaults')
    common.add_argument('--verbose', '-v', action='store_true', default=argparse.SUPPRESS,
                        help='Log at DEBUG level')
    common.add_argument('--workers', type=int, default=argparse.SUPPRESS,
                        help='Worker threads for sweeps (env: NCFIELDS_WORKERS)')

    output = argparse.ArgumentParser(add_help=False)
    output.add_argument('--out', '-o',
                        help='Output file (default: <output dir>/<command>.<format> or stdout)')
    output.add_argument('--format', '-f', choices=['csv', 'json'],
                        help='Output format (default: csv)')

    parser = argparse.ArgumentParser(
        prog='ncfields',
        description='Noncommutative field symplectic toolkit',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        parents=[common],
        epilog="""
Examples:
  ncfields spectrum --kind E --theta 1 --n 1
  ncfields spectrum --kind both --theta 0,0.5,1 --n 1..8 --out spectra.csv
  ncfields dressing-check --kind both --theta 0,1,10 --n-max 4
  ncfields evolve --kind B --theta 1 --n 1 --dt 0.05 --t-end 204.8
  ncfields qhe jain --m 1 --p 1,2,3 --format json
  ncfields qhe dispersion --theta 1 --n 1..4

Environment:
  NCFIELDS_OUTPUT_DIR   default directory for output files
  NCFIELDS_WORKERS      default worker count
        """
    )
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    spectrum = commands.add_parser('spectrum', parents=[common, output],
                                   help='Closed-form vs eigen-oracle frequencies')
    spectrum.add_argument('--kind', choices=['E', 'B', 'both'], help='Deformation kind (default: both)')
    spectrum.add_argument('--theta', help='Comma-separated theta values')
    spectrum.add_argument('--n', help='Mode indices, e.g. 1..8 or 1,2,5')
    spectrum.add_argument('--splitting', choices=['exact', 'doubled'],
                          help='E-kind level splitting (default: exact)')
    spectrum.add_argument('--source', choices=['closed_form', 'oracle'],
                          help='Export one source only, without the comparison columns')
    spectrum.set_defaults(handler=run_spectrum)

    dressing = commands.add_parser('dressing-check', parents=[common, output],
                                   help='Pullback residuals of the dressing maps')
    dressing.add_argument('--kind', choices=['E', 'B', 'both'], help='Deformation kind (default: both)')
    dressing.add_argument('--theta', help='Comma-separated theta values')
    dressing.add_argument('--n-max', dest='n_max', help='Number of modes (a range sweeps several)')
    dressing.set_defaults(handler=run_dressing_check)

    evolve = commands.add_parser('evolve', parents=[common, output],
                                 help='Integrate one mode and extract its frequencies')
    evolve.add_argument('--kind', choices=['E', 'B', 'canonical'], help='Deformation kind (default: B)')
    evolve.add_argument('--theta', help='Noncommutativity parameter')
    evolve.add_argument('--n', help='Mode index')
    evolve.add_argument('--state', help='Initial q1,q2,p1,p2')
    evolve.add_argument('--dt', help='Time step')
    evolve.add_argument('--t-end', dest='t_end', help='Final time')
    evolve.add_argument('--method', choices=['midpoint', 'exact'], help='Integrator (default: midpoint)')
    evolve.set_defaults(handler=run_evolve)

    qhe = commands.add_parser('qhe', parents=[common], help='Quantum Hall edge tables')
    tables = qhe.add_subparsers(dest='table', metavar='table')
    tables.required = True
    for name, help_text in [
        ('velocities', 'Edge-pair velocities per theta, or coupled-edge eigenvalues'),
        ('filling', 'Filling factors and correlation exponents'),
        ('jain', 'Jain-sequence theta_bar bookkeeping'),
        ('dispersion', 'Nonlinear dispersion curves'),
        ('phases', 'Exchange phases of the edge electron operators'),
    ]:
        table = tables.add_parser(name, parents=[common, output], help=help_text)
        table.add_argument('--theta', help='Comma-separated theta values')
        table.add_argument('--n', help='Mode indices, e.g. 1..4')
        table.add_argument('--m', help='Comma-separated m values (or a range)')
        table.add_argument('--p', help='Comma-separated p values (or a range)')
        table.add_argument('--theta-bar', dest='theta_bar', help='Comma-separated theta_bar values, fractions allowed')
        table.add_argument('--k-plus', dest='k_plus', help='Right-mover coupling')
        table.add_argument('--k-minus', dest='k_minus', help='Left-mover coupling')
        table.add_argument('--k', help='Comma-separated cross couplings')
        table.add_argument('--position-sign', dest='position_sign', type=int, choices=[1, -1],
                           help='Sign of x - y for exchange phases (default: 1)')
        table.set_defaults(handler=run_qhe)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (None, 0) else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if getattr(args, 'verbose', False) else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
        datefmt='%H:%M:%S'
    )

    try:
        config = get_config()
        user_config = load_user_config(getattr(args, 'config', None))
        settings = build_settings(args, user_config, config)
        if settings.verbose:
            logging.getLogger().setLevel(logging.DEBUG)
        context = RunContext(settings=settings, config=config, user_config=user_config)
        return args.handler(args, context)
    except StepFailureError as e:
        logger.error(f"Step failure: {e}")
        return EXIT_TOLERANCE
    except ValidationError as e:
        logger.error(f"Invalid arguments: {e}")
        return EXIT_USAGE
    except (InvalidModelError, ConfigurationError, ValueError) as e:
        logger.error(f"{e}")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
