"""
Experiment orchestration: load a config, run it, write its artifacts and summary.

Each experiment writes only into its own directory under the output root, so
independent configs can run concurrently.
"""

import asyncio
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Union

import numpy as np

from .artifacts import ArtifactError, library_versions, read_json, write_columns, write_csv, write_json
from .config import Config, NumericsConfig
from .control import (
    ControlConfig,
    ControlError,
    cost_law_sweep,
    observability_constant,
    run_lr_control,
    synthesize_hum_control,
    trajectory,
)
from .eigensolver import (
    EigenBasis,
    EigenSolverError,
    check_localization,
    count_eigenvalues,
    export_bundle,
    localization_radius,
    observed_order,
    solve_basis,
)
from .ghost_lift import (
    LiftedField,
    LiftError,
    energy_bounds,
    lift,
    residual_divergence,
    residual_nondivergence,
    solve_aux_ode,
)
from .potentials import PotentialError
from .schema import ConfigError, experiment_name, load_experiment
from .smallness_lab import (
    SmallnessError,
    SmallnessGeometry,
    collect_samples,
    fit_alpha,
    propagation_reference,
    samples_table,
    theoretical_band,
)
from .spectral_estimator import (
    SpectralEstimatorError,
    best_constant,
    gram_matrix,
    interlacing_holds,
    scaling_sweep,
)
from .thick_sets import (
    IntervalSet,
    ThickSetError,
    build_partition,
    build_profile_partition,
    generate_thick,
    is_thick_partitionwise,
    is_thick_pointwise,
    partition_asymptotics,
)

Status = Literal["PASS", "FAIL", "REPORT-ONLY"]

NUMERICAL_ERRORS = (PotentialError, ThickSetError, EigenSolverError, LiftError, SmallnessError,
                    SpectralEstimatorError, ControlError, ArtifactError)

MAX_CONTROL_COLUMNS = 201
TRAJECTORY_POINTS = 101


@dataclass(frozen=True)
class Check:
    name: str
    status: Status
    detail: str
    value: Optional[float] = None


@dataclass
class RunOutcome:
    """Result of one experiment config."""
    name: str
    kind: Optional[str]
    directory: Optional[Path]
    checks: List[Check] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    config_errors: List[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def exit_code(self) -> int:
        if self.config_errors:
            return 2
        if self.error or self.flags or any(c.status == "FAIL" for c in self.checks):
            return 1
        return 0

    def to_summary(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "checks": [asdict(c) for c in self.checks],
            "flags": self.flags,
            "warnings": self.warnings,
            "error": self.error,
            "exit_code": self.exit_code,
        }

    @classmethod
    def from_summary(cls, directory: Path, data: Dict[str, Any]) -> 'RunOutcome':
        checks = []
        for c in data.get("checks", []):
            value = c.get("value")
            checks.append(Check(c["name"], c["status"], c["detail"],
                                float(value) if value is not None else None))
        return cls(name=data.get("name", directory.name), kind=data.get("kind"), directory=directory,
                   checks=checks, flags=list(data.get("flags", [])),
                   warnings=list(data.get("warnings", [])), error=data.get("error"))


class RunContext:
    """Per-experiment output directory, shared tolerances and the collected checks."""

    def __init__(self, directory: Path, numerics: NumericsConfig, digits: int, metadata: Dict[str, Any]):
        self.directory = directory
        self.numerics = numerics
        self.digits = digits
        self.metadata = metadata
        self.checks: List[Check] = []
        self.flags: List[str] = []
        self.logger = logging.getLogger(__name__)

    def check(self, name: str, passed: Optional[bool], detail: str, value: Optional[float] = None) -> None:
        """Record a check; passed=None marks it report-only."""
        status: Status = "REPORT-ONLY" if passed is None else ("PASS" if passed else "FAIL")
        self.checks.append(Check(name, status, detail, None if value is None else float(value)))

    def flag(self, message: str) -> None:
        self.logger.warning(message)
        self.flags.append(message)

    def columns(self, filename: str, columns: Dict[str, Sequence[Any]]) -> None:
        write_columns(self.directory / filename, columns, self.digits)

    def json(self, filename: str, data: Dict[str, Any]) -> None:
        write_json(self.directory / filename, data)


def collect_seeds(data: Any) -> List[int]:
    """Every seed named in a resolved config, in document order."""
    seeds: List[int] = []
    if isinstance(data, dict):
        for key, value in data.items():
            if key == "seed" and isinstance(value, int):
                seeds.append(value)
            elif key == "seeds" and isinstance(value, list):
                seeds.extend(int(v) for v in value)
            else:
                seeds.extend(collect_seeds(value))
    elif isinstance(data, list):
        for item in data:
            seeds.extend(collect_seeds(item))
    return seeds


def _window(basis: EigenBasis):
    return (float(basis.grid.x_min), float(basis.grid.x_max))


def _unit_element(basis: EigenBasis, cutoff: float, seed: int):
    rng = np.random.default_rng(seed)
    count = basis.indices_below(cutoff).size
    if count == 0:
        raise EigenSolverError(f"No eigenvalue below λ={cutoff}")
    b = rng.standard_normal(count)
    return basis.element(b / np.linalg.norm(b), cutoff)


class ExperimentRunner:
    """Runs experiment configs under the lab configuration."""

    def __init__(self, config: Config):
        self.config = config
        self.output_root = Path(config.output.resolved_root())
        self.logger = logging.getLogger(__name__)
        self._handlers: Dict[str, Callable[[Any, RunContext], None]] = {
            "partition": self._run_partition,
            "thickness": self._run_thickness,
            "eigen": self._run_eigen,
            "lift": self._run_lift,
            "smallness": self._run_smallness,
            "spectral-sweep": self._run_sweep,
            "control": self._run_control,
            "costlaw": self._run_costlaw,
        }

    def validate(self, path: Union[str, Path]) -> RunOutcome:
        """Schema and semantic checks only."""
        try:
            experiment, warnings = load_experiment(path)
        except ConfigError as e:
            return RunOutcome(name=Path(path).stem, kind=None, directory=None, config_errors=e.diagnostics)
        return RunOutcome(name=experiment_name(experiment, path), kind=experiment.kind,
                          directory=None, warnings=warnings)

    def run(self, path: Union[str, Path]) -> RunOutcome:
        """Run one experiment config and write its artifacts."""
        try:
            experiment, warnings = load_experiment(path)
        except ConfigError as e:
            self.logger.error(f"Invalid config {path}: {e}")
            return RunOutcome(name=Path(path).stem, kind=None, directory=None, config_errors=e.diagnostics)

        name = experiment_name(experiment, path)
        directory = self.output_root / name
        resolved = experiment.model_dump(mode="json")
        metadata = {
            "config": resolved,
            "config_file": Path(path).name,
            "numerics": asdict(self.config.numerics),
            "seeds": collect_seeds(resolved),
            "versions": library_versions(),
        }
        outcome = RunOutcome(name=name, kind=experiment.kind, directory=directory, warnings=warnings)
        context = RunContext(directory, self.config.numerics, self.config.output.csv_digits, metadata)

        self.logger.info(f"Running {experiment.kind} experiment '{name}' into {directory}")
        try:
            write_json(directory / "metadata.json", metadata)
            self._handlers[experiment.kind](experiment, context)
        except NUMERICAL_ERRORS as e:
            self.logger.error(f"Experiment '{name}' failed: {e}")
            outcome.error = str(e)

        outcome.checks = context.checks
        outcome.flags = context.flags
        try:
            write_json(directory / "summary.json", outcome.to_summary())
        except ArtifactError as e:
            self.logger.error(f"Could not write summary for '{name}': {e}")
            outcome.error = outcome.error or str(e)
        return outcome

    async def run_all(self, paths: Sequence[Union[str, Path]], jobs: int = 1) -> List[RunOutcome]:
        """Run configs concurrently; configs that share an output directory are rejected."""
        owners: Dict[str, Union[str, Path]] = {}
        runnable, rejected = [], {}
        for path in paths:
            validated = self.validate(path)
            if validated.config_errors:
                rejected[str(path)] = validated
                continue
            if validated.name in owners:
                validated.config_errors = [f"output: directory '{validated.name}' is already used by {owners[validated.name]}"]
                rejected[str(path)] = validated
                continue
            owners[validated.name] = path
            runnable.append(path)

        loop = asyncio.get_running_loop()
        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            finished = await asyncio.gather(*(loop.run_in_executor(pool, self.run, p) for p in runnable))
        by_path = {str(p): o for p, o in zip(runnable, finished)}
        by_path.update(rejected)
        return [by_path[str(p)] for p in paths]

    def run_many(self, paths: Sequence[Union[str, Path]], jobs: int = 1) -> List[RunOutcome]:
        return asyncio.run(self.run_all(paths, jobs))

    # Bases

    def _basis(self, experiment, lam: float, context: RunContext, cover: float = 0.0) -> EigenBasis:
        potential = experiment.potential.build()
        if experiment.radius is None:
            certificate = localization_radius(potential, lam, experiment.tail_tol,
                                              self.config.numerics.safety_factor)
            if not certificate.certified:
                context.flag(f"Localization radius not certified: tail mass {certificate.tail_mass:.3e}")
            radius = certificate.radius
        else:
            radius = experiment.radius
        radius = max(radius, cover)
        basis = solve_basis(potential, radius, lam, experiment.grid_points,
                             self.config.numerics.eigen_tolerance)
        self._basis_flags(basis, context)
        return basis

    def _basis_flags(self, basis: EigenBasis, context: RunContext) -> None:
        if basis.coarse_grid:
            context.flag(f"Grid spacing {basis.grid.h:.3e} is coarse for λ={basis.lambda_max}")
        if basis.residual_flag:
            context.flag("Eigenpair residuals exceed tolerance")
        defect = basis.orthonormality_defect()
        if defect > self.config.numerics.orthonormality_tolerance:
            context.flag(f"Orthonormality defect {defect:.3e} exceeds tolerance")

    # Experiments

    def _run_partition(self, exp, context: RunContext) -> None:
        if exp.profile is not None:
            partition = build_profile_partition(exp.profile.build(), exp.N)
        else:
            partition = build_partition(exp.L, exp.s, exp.N)
        centers = partition.centers
        context.columns("partition.csv", {"n": list(range(centers.size)), "x_n": centers.tolist()})
        context.check("increasing", bool(np.all(np.diff(centers) > 0)), f"{centers.size} centers")
        if partition.degenerate:
            context.check("degenerate_pieces", None,
                          f"{len(partition.degenerate)} pieces with degenerate ρ (first n={partition.degenerate[0]})",
                          len(partition.degenerate))
        if partition.N >= 9:
            ratios = partition_asymptotics(partition)
            context.columns("asymptotics.csv", {"n": list(range(1, ratios.size + 1)), "ratio": ratios.tolist()})
            context.check("asymptotic_ratio", None, f"x_(N+1)/((s+1)L(N+1))^(1/(s+1)) = {ratios[-1]:.6g}",
                          ratios[-1])

    def _run_thickness(self, exp, context: RunContext) -> None:
        profile = exp.profile.build()
        partition = build_profile_partition(profile, exp.N)
        window = (-partition.extent, partition.extent)
        slack = self.config.numerics.threshold_slack
        xs = np.linspace(window[0], window[1], exp.pointwise_points)

        seeds = exp.seeds if exp.omega is None else [None]
        rows, sets = [], {}
        for seed in seeds:
            omega = generate_thick(profile, partition, seed) if seed is not None else exp.omega.build(window)
            pieces = is_thick_partitionwise(omega, partition, profile.gamma, profile.tau, slack)
            pointwise = is_thick_pointwise(omega, profile, xs, slack)
            rows.append([seed, pieces.holds, pieces.worst_margin, pieces.checked,
                         pointwise.holds, pointwise.worst_margin, pointwise.checked, pointwise.unchecked])
            sets["given" if seed is None else str(seed)] = {"intervals": omega.to_json(), "window": omega.window}
        write_csv(context.directory / "thickness.csv",
                  ["seed", "partition_holds", "partition_margin", "pieces_checked",
                   "pointwise_holds", "pointwise_margin", "points_checked", "points_unchecked"],
                  rows, context.digits)
        context.json("sets.json", sets)
        context.check("partitionwise", all(r[1] for r in rows), f"{len(rows)} set(s) on {partition.N} pieces per side")
        context.check("pointwise", None, f"{sum(1 for r in rows if r[4])}/{len(rows)} set(s) thick at every sample")

    def _run_eigen(self, exp, context: RunContext) -> None:
        potential = exp.potential.build()
        basis = self._basis(exp, exp.lambda_max, context)
        export_bundle(basis, context.directory, extra=context.metadata)
        defect = basis.orthonormality_defect()
        context.check("orthonormality", defect <= self.config.numerics.orthonormality_tolerance,
                      f"max|Gram - I| = {defect:.3e}", defect)
        try:
            count = count_eigenvalues(basis, exp.lambda_max)
            context.check("eigen_count", None,
                          f"N(λ) = {count.count}, reference (λ+1)^{count.exponent:.3g} = {count.reference:.6g}",
                          count.ratio)
        except EigenSolverError as e:
            self.logger.info(f"Eigenvalue count skipped: {e}")

        if exp.oracle == "harmonic":
            modes = min(exp.oracle_modes, basis.size)
            k = np.arange(modes)
            exact = 2.0 * k + 1.0
            error = float(np.max(np.abs(basis.eigenvalues[:modes] - exact) / exact)) if modes else math.inf
            context.check("harmonic_oracle", modes == exp.oracle_modes and error <= exp.oracle_rtol,
                          f"{modes} modes, max relative error {error:.3e}", error)

        rows = []
        for lam in exp.localization:
            certificate = localization_radius(potential, lam, exp.tail_tol, self.config.numerics.safety_factor)
            local_basis = solve_basis(potential, 2.0 * certificate.radius, lam,
                                      tol=self.config.numerics.eigen_tolerance)
            report = check_localization(local_basis, lam, certificate.radius, exp.samples, exp.seed, exp.norm)
            rows.append([lam, certificate.radius, certificate.tail_mass, certificate.certified,
                         report.modes, report.max_ratio])
            passed = (report.max_ratio <= 2.0) if exp.norm == "l2" else None
            context.check(f"localization_{lam:g}", passed,
                          f"{exp.norm} ratio {report.max_ratio:.6g} on [-{certificate.radius:.4g}, {certificate.radius:.4g}]",
                          report.max_ratio)
        if rows:
            write_csv(context.directory / "localization.csv",
                      ["lambda", "radius", "tail_mass", "certified", "modes", "max_ratio"], rows, context.digits)

    def _run_lift(self, exp, context: RunContext) -> None:
        potential = exp.potential.build()
        base = self._basis(exp, exp.lambda_max, context)
        n0 = base.grid.n
        radius = base.grid.radius
        coefficients = None
        rows, nondivergence, divergence = [], [], []
        fields = None
        for level in range(exp.levels):
            n = (n0 - 1) * 2 ** level + 1
            m = (exp.m - 1) * 2 ** level + 1
            basis = base if level == 0 else solve_basis(potential, radius, exp.lambda_max, n,
                                                        self.config.numerics.eigen_tolerance)
            if level:
                self._basis_flags(basis, context)
            if coefficients is None:
                coefficients = _unit_element(basis, exp.lambda_max, exp.seed).coefficients
            if basis.indices_below(exp.lambda_max).size != coefficients.size:
                raise LiftError(f"Mode count below λ={exp.lambda_max} changed at refinement level {level}")
            element = basis.element(coefficients, exp.lambda_max)
            fields = lift(element, exp.y_max, m, exp.lift_kind, self.config.numerics.overflow_guard)
            nd = residual_nondivergence(fields, potential)
            nondivergence.append(nd.relative)
            div_relative = math.nan
            if exp.aux_window is not None:
                cropped = _crop(fields, exp.aux_window)
                aux = solve_aux_ode(potential, float(cropped.x[0]), float(cropped.x[-1]),
                                    max(2001, 4 * cropped.x.size))
                if level == 0:
                    context.check("aux_bounds", aux.bounds_hold(),
                                  f"1 ≤ φ_aux ≤ {aux.boundary_value:.6g} on [{aux.a:.4g}, {aux.b:.4g}]")
                div_relative = residual_divergence(cropped, aux).relative
                divergence.append(div_relative)
            rows.append([level, n, m, fields.hx, fields.hy, nd.relative, div_relative])
            if exp.lift_kind == "sinh" and level == exp.levels - 1:
                bounds = energy_bounds(fields, element)
                context.check("energy_bounds", bounds.holds,
                              f"{bounds.lower:.6g} ≤ {bounds.energy:.6g} ≤ {bounds.upper:.6g}", bounds.energy)

        write_csv(context.directory / "lift.csv",
                  ["level", "nx", "ny", "hx", "hy", "nondivergence", "divergence"], rows, context.digits)
        context.columns("center_row.csv", {"x": fields.x.tolist(), "phi": fields.center_row.tolist()})
        self._order_check(context, "nondivergence_order", nondivergence, exp.min_order)
        if divergence:
            self._order_check(context, "divergence_order", divergence, exp.min_order)

    def _order_check(self, context: RunContext, name: str, errors: List[float], minimum: float) -> None:
        if any(e <= 0.0 or not math.isfinite(e) for e in errors):
            context.check(name, None, f"residuals {errors} include zero or non-finite values")
            return
        orders = observed_order(errors)
        worst = float(np.min(orders))
        context.check(name, worst >= minimum, f"observed orders {np.round(orders, 3).tolist()}", worst)

    def _run_smallness(self, exp, context: RunContext) -> None:
        geometry = SmallnessGeometry(exp.origin, exp.scale)
        lo, hi = geometry.outer_x
        lam_max = max(exp.lambda_list)
        basis = self._basis(exp, lam_max, context, cover=max(abs(lo), abs(hi)) + 0.1)
        omega_line = IntervalSet(tuple(exp.omega))
        samples = collect_samples(basis, exp.lambda_list, omega_line, geometry, exp.n_random, exp.seed)
        report = fit_alpha(samples, exp.c_budget)
        context.columns("samples.csv", samples_table(samples))

        fit = {"alpha": report.alpha, "constant": report.constant, "samples": report.samples,
               "violations": report.violations, "degenerate": report.degenerate,
               "infeasible": report.infeasible, "c_budget": report.c_budget}
        context.check("feasible_fit", not report.infeasible and report.violations == 0,
                      f"α = {report.alpha:.4g}, C = {report.constant:.4g}, {report.violations} violations",
                      report.alpha)
        ellipticity = samples[0].ellipticity if samples else math.nan
        if ellipticity > 1.0:
            band = theoretical_band(ellipticity, omega_line.measure, exp.d1, exp.d2)
            fit["band"] = asdict(band)
            context.check("alpha_band", None,
                          f"α within a factor 3 of [{band.alpha_low:.3g}, {band.alpha_high:.3g}]: "
                          f"{band.contains_alpha(report.alpha)}")
        if not report.infeasible:
            reference = propagation_reference(math.log(max(report.constant, 1.0)), 1.0,
                                              omega_line.measure, report.alpha)
            fit["propagation_reference"] = asdict(reference)
        context.json("fit.json", fit)

    def _run_sweep(self, exp, context: RunContext) -> None:
        lambdas = sorted(exp.lambda_list)
        basis = self._basis(exp, lambdas[-1], context)
        window = _window(basis)
        omega = exp.omega.build(window)
        floor = self.config.numerics.singular_floor
        fit = scaling_sweep(basis, lambdas, omega, exp.zeta, exp.with_log, floor)
        context.columns("sweep.csv", fit.table())
        context.json("fit.json", fit.summary())
        if fit.dropped:
            context.flag(f"Infinite K at λ = {list(fit.dropped)}")

        context.check("interlacing", interlacing_holds(basis, lambdas, omega),
                      "λ_min(G_λ) non-increasing in λ")
        if exp.subset is not None:
            subset = exp.subset.build(window)
            if subset.intersection(omega).measure < subset.measure * (1.0 - 1e-12):
                context.flag("subset is not contained in omega; monotonicity not checked")
            else:
                worst = max(best_constant(gram_matrix(basis, lam, subset), floor).lambda_min
                            - best_constant(gram_matrix(basis, lam, omega), floor).lambda_min for lam in lambdas)
                context.check("monotone_in_set", worst <= 1e-10,
                              f"max λ_min(G_sub) - λ_min(G_Ω) = {worst:.3e}", worst)
        if exp.zeta_band is not None:
            low, high = exp.zeta_band
            context.check("zeta_band", low <= fit.zeta_hat <= high,
                          f"ζ̂ = {fit.zeta_hat:.4g} against [{low:g}, {high:g}]", fit.zeta_hat)
        else:
            context.check("zeta_hat", None, f"ζ̂ = {fit.zeta_hat:.4g}", fit.zeta_hat)

    def _control_setup(self, exp, context: RunContext):
        basis = self._basis(exp, exp.cutoff, context)
        omega = exp.omega.build(_window(basis))
        m = exp.m if exp.m is not None else self.config.numerics.time_nodes
        cfg = ControlConfig(T=exp.T, cutoff=exp.cutoff, omega=omega, m=m, alpha0=exp.alpha0,
                            alpha1=exp.alpha1, zeta=exp.zeta, kappa1=exp.kappa1, kappa2=exp.kappa2,
                            kappa3=exp.kappa3, lambda_base=exp.lambda_base, max_stages=exp.max_stages,
                            refine_tol=self.config.numerics.gramian_stabilization,
                            flag_ratio=self.config.numerics.gramian_flag_ratio)
        return basis, cfg, _unit_element(basis, exp.cutoff, exp.seed)

    def _run_control(self, exp, context: RunContext) -> None:
        basis, cfg, u0 = self._control_setup(exp, context)
        result = run_lr_control(u0, cfg) if exp.staged else synthesize_hum_control(u0, cfg)
        if result.flagged:
            context.flag(f"Control Gramian flagged (condition {result.condition:.3e})")

        stride = max(1, int(math.ceil(result.x.size / MAX_CONTROL_COLUMNS)))
        columns = np.arange(0, result.x.size, stride)
        rows = ([t, result.x[j], result.control[i, j]] for i, t in enumerate(result.times) for j in columns)
        write_csv(context.directory / "control.csv", ["t", "x", "h"], rows, context.digits)
        context.columns("terminal.csv", {"k": list(range(result.terminal.size)),
                                         "b0": u0.coefficients.tolist(),
                                         "terminal": result.terminal.tolist()})
        if result.stages:
            write_csv(context.directory / "stages.csv",
                      ["stage", "start", "window", "cutoff", "dim", "cost", "skipped"],
                      ([s.index, s.start, s.window, s.cutoff, s.dim, s.cost, s.skipped] for s in result.stages),
                      context.digits)
        else:
            self._write_trajectory(basis, cfg, u0.coefficients, result.q, context)

        tolerance = exp.terminal_tolerance
        context.check("terminal_residual", result.residual <= tolerance,
                      f"‖u(T)‖/‖u₀‖ = {result.residual:.3e} (tolerance {tolerance:.0e})", result.residual)
        context.check("exact_residual", None, f"closed-form terminal residual {result.exact_residual:.3e}",
                      result.exact_residual)
        context.check("cost", None, f"control cost {result.cost:.6g}, C_obs = {observability_constant(cfg):.6g}",
                      result.cost)

    def _write_trajectory(self, basis: EigenBasis, cfg: ControlConfig, b0: np.ndarray, q: np.ndarray,
                          context: RunContext) -> None:
        """‖u(t)‖ of the controlled state from the closed-form coefficients."""
        indices = basis.indices_below(cfg.cutoff)
        G = gram_matrix(basis, cfg.cutoff, cfg.omega).matrix
        times = np.linspace(0.0, cfg.T, TRAJECTORY_POINTS)
        states = trajectory(b0, basis.frequencies[indices], G, q, cfg.T, times)
        context.columns("trajectory.csv", {"t": times.tolist(),
                                           "norm": np.linalg.norm(states, axis=1).tolist()})

    def _run_costlaw(self, exp, context: RunContext) -> None:
        basis, cfg, u0 = self._control_setup(exp, context)
        report = cost_law_sweep(u0, cfg, exp.horizons, staged=exp.staged)
        table = report.table()
        table["regressor"] = report.regressor.tolist()
        table["flagged"] = report.flags
        context.columns("costlaw.csv", table)
        if any(report.flags):
            context.flag("Control Gramian flagged on at least one horizon")
        context.json("fit.json", {"slope": report.slope, "intercept": report.intercept,
                                  "r_squared": report.r_squared, "monotone": report.monotone,
                                  "staged": report.staged})
        context.check("monotone_cost", report.monotone, "cost non-increasing in T")
        if report.slope <= 0:
            self.logger.warning(f"Cost-law slope {report.slope:.4g} is not positive")
        context.check("cost_law_slope", report.slope > 0, f"fitted slope {report.slope:.4g} > 0", report.slope)
        context.check("cost_law_fit", None,
                      f"log cost ≈ {report.intercept:.4g} + {report.slope:.4g}·T^(-ζ/(2-ζ)), R² = {report.r_squared:.4f}",
                      report.r_squared)


def _crop(fields: LiftedField, window) -> LiftedField:
    keep = (fields.x >= window[0]) & (fields.x <= window[1])
    if np.count_nonzero(keep) < 3:
        raise LiftError(f"Window {window} holds fewer than 3 grid columns")
    return LiftedField(x=fields.x[keep], y=fields.y, values=fields.values[keep], kind=fields.kind,
                       frequencies=fields.frequencies, coefficients=fields.coefficients)


def load_outcome(directory: Union[str, Path]) -> RunOutcome:
    """Re-read summary.json of a result directory."""
    directory = Path(directory)
    return RunOutcome.from_summary(directory, read_json(directory / "summary.json"))
