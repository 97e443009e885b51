"""
Run orchestrator: maps a command and a resolved config to module operations,
writes the CSV outputs and finishes with the manifest.

Outputs are collected in memory and written only once the command has
succeeded, so a failed command leaves nothing behind but its error manifest.
If writing itself fails, that manifest lists the files already on disk.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from app.core.errors import ConfigError, InternalError, LabError, NoFeasibleMode
from app.core.kinetics import classify_competition, coexistence_state, equilibria
from app.core.logging import config_fingerprint, generate_run_id
from app.core.validation import validate_run
from app.continuation.branch import continue_branch, fit_pitchfork
from app.continuation.weakly_nonlinear import predicted_branch_stability, weakly_nonlinear
from app.experiments.acceptance import ACCEPTANCE_COLUMNS, run_acceptance
from app.experiments.config_loader import config_loader
from app.experiments.models import RunConfig, RunManifest
from app.experiments.writers import write_csv, write_manifest
from app.shadow.k2 import shadow_K2
from app.shadow.layer import heteroclinic_profile, layer_solve
from app.shadow.limit import LIMIT_COLUMNS, shadow_limit_check
from app.shadow.system import continue_shadow_branch, epsilon_n
from app.simulation.diagnostics import InvariantMonitor
from app.simulation.grid import Grid1D, State
from app.simulation.simulator import perturbed_state, random_state, simulate
from app.stability.linear import chi_k, chi_threshold, dispersion_table, is_linearly_stable

logger = logging.getLogger("run_orchestrator")

COMMANDS = (
    "equilibria",
    "stability",
    "simulate",
    "continue",
    "shadow-branch",
    "layer",
    "verify-shadow-limit",
    "verify-all",
)

BRANCH_COLUMNS = ["amplitude", "stable", "residual", "norm_u", "norm_v"]
EXIT_ACCEPTANCE_FAILED = 1


@dataclass
class PendingFile:
    name: str
    frame: pd.DataFrame
    columns: Sequence[str]


@dataclass
class CommandResult:
    """What a command produced, before anything touches the disk."""

    files: List[PendingFile] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    invariants: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    exit_code: int = 0

    def add(self, name: str, rows, columns: Sequence[str]) -> None:
        frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=list(columns))
        self.files.append(PendingFile(name, frame, columns))


def _profile_frame(x: np.ndarray, **fields: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame({"x": x, **fields})


def cmd_equilibria(config: RunConfig) -> CommandResult:
    p = config.params()
    result = CommandResult()
    eq = equilibria(p)
    result.add("equilibria.csv", [dict(zip(("kind", "u", "v"), row)) for row in eq.rows()], ["kind", "u", "v"])
    result.summary = {"regime": classify_competition(p).value, "coexistence_positive": eq.coexistence_positive}
    return result


def cmd_stability(config: RunConfig) -> CommandResult:
    p = config.params()
    k_max = config.stability.k_max
    result = CommandResult()
    table = dispersion_table(p, k_max)
    result.add("stability.csv", table, list(table.columns))
    summary: Dict[str, Any] = {"linearly_stable": is_linearly_stable(p, k_max)}
    try:
        chi0, k0 = chi_threshold(p, k_max)
        summary.update(chi0=chi0, k0=k0)
    except NoFeasibleMode:
        summary.update(chi0=None, k0=None)
    result.summary = summary
    return result


def _initial_state(config: RunConfig, grid: Grid1D) -> State:
    p = config.params()
    sim = config.simulate
    base = coexistence_state(p)
    if sim.init == "equilibrium":
        return State.constant(grid, *base)
    if sim.init == "random":
        return random_state(grid, base, sim.amplitude, config.seed)
    k = sim.mode
    if k == 0:
        try:
            _, k = chi_threshold(p, config.stability.k_max)
        except NoFeasibleMode:
            k = 1
    return perturbed_state(grid, base, k, sim.amplitude, chi_k(p, k, grid=grid).Q_k)


def cmd_simulate(config: RunConfig) -> CommandResult:
    p = config.params()
    grid = Grid1D(n=config.grid.n, L=p.L)
    init = _initial_state(config, grid)
    modes = config.simulate.modes
    monitor = InvariantMonitor(p, init)
    t = config.time
    final, diags = simulate(
        p, init, t_end=t.t_end, dt=t.dt, snapshot_every=t.snapshot_every,
        modes=modes, keep_states=True, monitor=monitor,
    )
    result = CommandResult()
    snapshots = pd.concat(
        [pd.DataFrame({"t": np.full(grid.n, d.t), "x": grid.x, "u": d.state.u, "v": d.state.v}) for d in diags],
        ignore_index=True,
    )
    result.add("snapshots.csv", snapshots, ["t", "x", "u", "v"])
    diag_columns = ["t", "mass_u", "sup_v", "residual"] + [f"amp_k{k}" for k in modes]
    result.add("diagnostics.csv", [d.as_row(modes) for d in diags], diag_columns)
    result.invariants = monitor.summary()
    result.summary = {"t_final": final.t, "snapshots": len(diags), "final_residual": diags[-1].residual}
    return result


def cmd_continue(config: RunConfig) -> CommandResult:
    p = config.params()
    c = config.continuation
    ref = chi_k(p, c.k).chi_k
    span = (
        c.chi_min if c.chi_min is not None else 0.5 * ref,
        c.chi_max if c.chi_max is not None else 2.0 * ref,
    )
    branch = continue_branch(
        p, c.k, span, ds=c.ds, n=c.n, s0=c.s0, max_points=c.max_points, tau_stability=c.tau_stability
    )
    result = CommandResult()
    result.add("branch.csv", branch.rows(), ["chi"] + BRANCH_COLUMNS)
    if c.profile_every > 0:
        grid = Grid1D(n=c.n, L=p.L)
        for i in range(0, len(branch), c.profile_every):
            x = branch.points[i].x
            result.add(f"profile_{i:04d}.csv", _profile_frame(grid.x, u=x[: grid.n], v=x[grid.n :]), ["x", "u", "v"])

    summary: Dict[str, Any] = {
        "chi_k": branch.param_ref,
        "points": len(branch),
        "stop_reason": branch.stop_reason,
        "folds": [branch.points[i].param for i in branch.folds],
    }
    try:
        report = weakly_nonlinear(p, c.k)
        summary.update(K2=report.K2, asymptotic_sign=report.asymptotic_sign.value,
                       asymptotic_agrees=report.asymptotic_agrees,
                       predicted_stable=predicted_branch_stability(p, c.k, config.stability.k_max))
    except LabError as e:
        logger.warning(f"Weakly-nonlinear report unavailable: {e.get_error_summary()}")
    try:
        summary["K_fit"] = fit_pitchfork(branch).tolist()
    except ValueError:
        pass
    result.summary = summary
    return result


def cmd_shadow_branch(config: RunConfig) -> CommandResult:
    s = config.shadow
    sp_ = config.model.shadow_params(s.r, s.eps)
    eps_ref = epsilon_n(sp_, s.n_mode)
    span = None
    if s.eps_min is not None or s.eps_max is not None:
        span = (
            s.eps_min if s.eps_min is not None else 0.25 * eps_ref,
            s.eps_max if s.eps_max is not None else 2.0 * eps_ref,
        )
    branch = continue_shadow_branch(
        sp_, s.n_mode, eps_span=span, ds=s.ds, s0=s.s0, max_points=s.max_points, n=s.n
    )
    result = CommandResult()
    result.add("shadow_branch.csv", branch.rows(), ["eps"] + BRANCH_COLUMNS)
    summary: Dict[str, Any] = {"eps_n": eps_ref, "points": len(branch), "stop_reason": branch.stop_reason}
    try:
        report = shadow_K2(sp_, s.n_mode)
        summary.update(K2=report.K2, case=report.case, predicted_stable=report.stable)
    except LabError as e:
        logger.warning(f"Shadow K2 unavailable: {e.get_error_summary()}")
    result.summary = summary
    return result


def cmd_layer(config: RunConfig) -> CommandResult:
    lc = config.layer
    sp_ = config.model.shadow_params(lc.r, lc.eps)
    st, report = layer_solve(sp_, v_bar2=lc.v_bar2, n=lc.n, nz=lc.nz)
    profile = heteroclinic_profile(sp_, nz=lc.nz)
    result = CommandResult()
    result.add("layer.csv", _profile_frame(st.grid.x, v=st.v), ["x", "v"])
    result.add("heteroclinic.csv", pd.DataFrame({"z": profile.z, "V": profile.V}), ["z", "V"])
    result.summary = {
        "lambda_eps": report.lambda_eps,
        "x0_predicted": report.x0_predicted,
        "x0_measured": report.x0_measured,
        "eps": report.eps,
        "v_bar2": report.v_bar2_target,
        "v_bar2_requested": report.v_bar2_requested,
        "lambda_star": report.lambda_star,
        "interface_error": report.interface_error,
    }
    return result


def cmd_verify_shadow_limit(config: RunConfig) -> CommandResult:
    lc = config.limit
    p = config.params().replace(D2=lc.eps)
    table = shadow_limit_check(p, lc.r, lc.D1_list, n=lc.n, workers=lc.workers, relax_time=lc.relax_time)
    result = CommandResult()
    result.add("shadow_limit.csv", table, LIMIT_COLUMNS)
    osc = table["osc_w"].to_numpy()
    result.summary = {"osc_w_decreasing": bool(np.all(np.diff(osc) < 0)), "osc_w_final": float(osc[-1])}
    return result


def cmd_verify_all(config: RunConfig) -> CommandResult:
    results = run_acceptance(seed=config.seed)
    out = CommandResult()
    out.add("acceptance.csv", [r.row() for r in results], ACCEPTANCE_COLUMNS)
    out.summary = {r.check: {"passed": r.passed, "seconds": r.seconds, **r.notes} for r in results}
    if not all(r.passed for r in results):
        failed = [r.check for r in results if not r.passed]
        logger.error(f"Acceptance failures: {', '.join(failed)}")
        out.exit_code = EXIT_ACCEPTANCE_FAILED
    return out


HANDLERS: Dict[str, Callable[[RunConfig], CommandResult]] = {
    "equilibria": cmd_equilibria,
    "stability": cmd_stability,
    "simulate": cmd_simulate,
    "continue": cmd_continue,
    "shadow-branch": cmd_shadow_branch,
    "layer": cmd_layer,
    "verify-shadow-limit": cmd_verify_shadow_limit,
    "verify-all": cmd_verify_all,
}


def _error_manifest(manifest: RunManifest, error: LabError, out_dir: Path, start: float) -> int:
    manifest.status = "error"
    manifest.exit_code = error.exit_code
    manifest.error = error.to_dict()
    manifest.wall_time_s = time.perf_counter() - start
    write_manifest(out_dir, manifest)
    return error.exit_code


def _new_manifest(command: str, version: str) -> RunManifest:
    return RunManifest(run_id=generate_run_id(), version=version, command=command, status="ok", exit_code=0)


def run(command: str, config: RunConfig, out_dir: Path, seed: Optional[int] = None, version: str = "") -> int:
    """
    Execute a command and write its outputs under out_dir.

    Args:
        command: One of COMMANDS
        config: Resolved configuration
        out_dir: Output directory (created when missing)
        seed: Overrides config.seed when given
        version: Package version recorded in the manifest

    Returns:
        Process exit code: 0 success, 2 config or domain error, 3 numerical
        failure, 4 invariant violation, 1 failed acceptance checks or an
        unexpected internal error
    """
    if command not in HANDLERS:
        raise ValueError(f"Unknown command '{command}'; expected one of {', '.join(COMMANDS)}")
    return _execute(command, lambda: config, Path(out_dir), seed, version)


def run_file(
    command: str, config_path: Optional[Path], out_dir: Path, seed: Optional[int] = None, version: str = ""
) -> int:
    """
    Like run(), but parse the config file first so that a malformed file
    still ends in an error manifest.
    """
    if command not in HANDLERS:
        raise ValueError(f"Unknown command '{command}'; expected one of {', '.join(COMMANDS)}")

    def load() -> RunConfig:
        try:
            return config_loader.load_config(config_path)
        except FileNotFoundError as e:
            raise ConfigError(str(e), path=str(config_path)) from e

    return _execute(command, load, Path(out_dir), seed, version)


def _execute(
    command: str, load: Callable[[], RunConfig], out_dir: Path, seed: Optional[int], version: str
) -> int:
    start = time.perf_counter()
    manifest = _new_manifest(command, version)
    logger.info(f"Run {manifest.run_id}: {command}")
    try:
        config = load()
        if seed is not None:
            config = config.model_copy(update={"seed": seed})
        echo = config.echo()
        manifest.seed = config.seed
        manifest.config = echo
        manifest.config_fingerprint = config_fingerprint(echo)
        manifest.warnings = list(config.warnings)
        validate_run(command, config)
        result = HANDLERS[command](config)
        for f in result.files:
            manifest.files.append(write_csv(out_dir / f.name, f.frame, f.columns))
    except LabError as e:
        logger.error(f"{command} failed: {e.get_error_summary()}")
        return _error_manifest(manifest, e, out_dir, start)
    except Exception as e:
        logger.exception(f"{command} failed with an unexpected {type(e).__name__}")
        return _error_manifest(manifest, InternalError.wrap(e), out_dir, start)

    manifest.summary = result.summary
    manifest.invariants = result.invariants
    manifest.exit_code = result.exit_code
    manifest.wall_time_s = time.perf_counter() - start
    write_manifest(out_dir, manifest)
    logger.info(f"Run {manifest.run_id} finished in {manifest.wall_time_s:.2f}s with exit code {result.exit_code}")
    return result.exit_code
