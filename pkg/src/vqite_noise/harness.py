"""Experiment driver: trajectories, seeded ensembles, sweeps and structure checks.

Everything is controlled by a flat :class:`RunConfig`, which round-trips
through a ``key = value`` text format and carries a short hash that is written
into every output file.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import multiprocessing
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg

from .allocator import COST_KINDS, InfeasibleBudget, allocate_shots, compute_weights
from .ansatz import AnsatzSpec, build_default_ansatz, initial_parameters, prepare_array
from .eom_exact import compute_eom, compute_SD, mclachlan_distance
from .shot_model import (
    SAMPLING_MODES,
    ConfigurationError,
    MeasurementLayout,
    ShotPlan,
    enumerate_measurements,
    measure_eom,
    raw_snapshot,
)
from .solver import (
    RegularizationPolicy,
    SolverError,
    StepControl,
    StepRejected,
    advance,
    regularized_inverse,
    solve_thetadot,
)
from .tfim import TfimParams, exact_ground_state

__all__ = [
    "TRAJECTORY_COLUMNS",
    "EnsembleResult",
    "EnsembleSummary",
    "RunConfig",
    "StructureReport",
    "SweepRow",
    "TrajectoryRecord",
    "load_config",
    "parse_config",
    "run_ensemble",
    "run_trajectory",
    "sweep_r",
    "sweep_shots",
    "verify_structure",
    "write_plot_recipe",
]

log = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = (
    "tau", "dt", "energy", "e_z", "e_x", "infidelity", "l2",
    "lambda_min", "lambda_max", "shots_used",
)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(float(x)) for x in str(text).split(",") if x.strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _cost(text) -> str:
    return str(text).strip().replace("-", "_")


@dataclass(frozen=True)
class RunConfig:
    """All knobs of an experiment.  Field names are the config-file keys."""

    # model
    n: int = 6
    j: float = 1.0
    delta: float = 1.0
    # ansatz
    p: int = 1
    init_mode: str = "uniform"
    init_scale: float = 0.01
    init_seed: int = -1  # negative: derive from the run seed
    # solver and stepping
    method: str = "tikhonov"
    epsilon: float = 1e-2
    dt_max: float = 0.02
    dtheta_max: float = 0.05
    tau_final: float = 5.5
    # measurement noise and allocation
    noise: str = "exact"  # exact | sampled
    sampling: str = "bernoulli"
    shots: int = 10_000  # average shots per circuit
    r: float = 1.0
    cost: str = "theta_dot"
    weights: str = "noisy"  # noisy | oracle
    # ensembles and sweeps
    runs: int = 1
    seed: int = 0
    workers: int = 1
    tau_step: float = 0.05
    snapshots: tuple[float, ...] = (1.0, 2.5, 4.0, 5.5)
    r_values: tuple[float, ...] = (0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0)
    shot_values: tuple[int, ...] = (5_000, 10_000, 20_000, 40_000)
    verify_sizes: tuple[int, ...] = (4, 5, 6)
    verify_samples: int = 50
    # output
    out: str = "results"
    dump_allocation: bool = False

    def __post_init__(self):
        checks = [
            (self.n >= 3, "n must be at least 3"),
            (self.p >= 1, "p must be positive"),
            (self.init_mode in ("uniform", "constant", "zero"), f"unknown init_mode {self.init_mode!r}"),
            (self.method in ("tikhonov", "eigencut"), f"unknown method {self.method!r}"),
            (self.epsilon > 0, "epsilon must be positive"),
            (self.dt_max > 0 and self.dtheta_max > 0, "step limits must be positive"),
            (self.tau_final > 0, "tau_final must be positive"),
            (self.noise in ("exact", "sampled"), f"noise must be exact or sampled, got {self.noise!r}"),
            (self.sampling in SAMPLING_MODES, f"sampling must be one of {SAMPLING_MODES}"),
            (self.shots >= 1, "shots must be positive"),
            (0 < self.r <= 1, "r must lie in (0, 1]"),
            (self.cost in COST_KINDS, f"cost must be one of {COST_KINDS}"),
            (self.weights in ("noisy", "oracle"), "weights must be noisy or oracle"),
            (self.runs >= 1, "runs must be at least 1"),
            (self.workers >= 1, "workers must be at least 1"),
            (self.tau_step > 0, "tau_step must be positive"),
            (self.verify_samples >= 1, "verify_samples must be positive"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigurationError(message)

    # structured views
    @property
    def model(self) -> TfimParams:
        return TfimParams(self.n, self.j, self.delta)

    @property
    def policy(self) -> RegularizationPolicy:
        return RegularizationPolicy(self.method, self.epsilon)

    @property
    def control(self) -> StepControl:
        return StepControl(self.dt_max, self.dtheta_max, self.tau_final)

    def ansatz(self) -> AnsatzSpec:
        return build_default_ansatz(self.n, self.p)

    @property
    def m_min(self) -> int:
        return max(1, int(round(self.r * self.shots)))

    def with_overrides(self, **changes) -> RunConfig:
        """Copy with some keys replaced; ``None`` values are ignored."""
        changes = {k: v for k, v in changes.items() if v is not None}
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return replace(self, **{k: _convert(k, v) for k, v in changes.items()})

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(repr(v) for v in value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        """Short digest of every setting except the output directory."""
        text = "\n".join(line for line in self.to_text().splitlines() if not line.startswith("out ="))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


_CONVERTERS = {
    "snapshots": _floats,
    "r_values": _floats,
    "shot_values": _ints,
    "verify_sizes": _ints,
    "dump_allocation": _bool,
    "cost": _cost,
}


def _convert(key: str, value):
    if key in _CONVERTERS:
        return value if isinstance(value, tuple) else _CONVERTERS[key](value)
    default = getattr(RunConfig, key)
    if isinstance(default, bool):
        return _bool(value)
    if isinstance(default, int):
        return int(float(value)) if isinstance(value, str) else int(value)
    if isinstance(default, float):
        return float(value)
    return str(value).strip()


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment, unknown keys are errors."""
    values = {}
    known = {f.name for f in fields(RunConfig)}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _convert(key, value)
        except ValueError as exc:
            raise ConfigurationError(f"line {lineno}: bad value for {key}: {exc}") from None
    return replace(base or RunConfig(), **values)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------- trajectories


def _fmt(x) -> str:
    return format(float(x), ".12g")


@dataclass
class TrajectoryRecord:
    """One trajectory; ``rows`` follows :data:`TRAJECTORY_COLUMNS`.

    ``status`` is ``"ok"``, ``"solver_failure"`` (the last row is the error
    row) or ``"aborted"``.
    """

    rows: np.ndarray
    seed: int
    status: str = "ok"
    message: str = ""
    allocations: list = field(default_factory=list, repr=False)
    thetas: np.ndarray | None = field(default=None, repr=False)  # one row per record row, if kept

    def __getitem__(self, column: str) -> np.ndarray:
        return self.rows[:, TRAJECTORY_COLUMNS.index(column)]

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def final_infidelity(self) -> float:
        return float(self["infidelity"][-1])

    def to_csv(self, config_hash: str = "") -> str:
        buf = io.StringIO()
        buf.write(f"# config_hash={config_hash} seed={self.seed} status={self.status}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def allocation_csv(self, labels: list[str], kinds: list[str], config_hash: str = "") -> str:
        buf = io.StringIO()
        buf.write(f"# config_hash={config_hash} seed={self.seed}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("step", "kappa", "kind", "label", "p", "shots"))
        for step, p, shots in self.allocations:
            for k, (lab, kind) in enumerate(zip(labels, kinds)):
                writer.writerow((step, k, kind, lab, _fmt(p[k]), int(shots[k])))
        return buf.getvalue()


@lru_cache(maxsize=8)
def _ground_state(params: TfimParams) -> np.ndarray:
    return exact_ground_state(params)[1].amplitudes


def _infidelity(psi, gs) -> float:
    return float(1.0 - abs(np.vdot(gs, psi)) ** 2)


def run_trajectory(config: RunConfig, seed: int | None = None, keep_theta: bool = False) -> TrajectoryRecord:
    """Integrate one trajectory from ``tau = 0`` to ``tau_final``.

    Each row is one EOM evaluation at the current angles: the exact energy
    split, the infidelity to the exact ground state, the McLachlan distance of
    the velocity actually applied (measured against the exact ``M`` and ``V``),
    the extreme eigenvalues of the matrix that was inverted, the step taken
    from this row (0 on the last row) and the shots spent on the evaluation.
    ``keep_theta=True`` also stores the angles of every row.

    In sampled mode the first step uses a uniform plan; afterwards the plan
    for the next step is re-optimized from the current estimates when
    ``r < 1``.
    """
    seed = config.seed if seed is None else seed
    spec, params = config.ansatz(), config.model
    policy, control = config.policy, config.control
    gs = _ground_state(params)
    init_ss, sample_ss = np.random.SeedSequence(seed).spawn(2)
    init_seed = init_ss if config.init_seed < 0 else config.init_seed
    theta = initial_parameters(spec, config.init_mode, config.init_scale, seed=init_seed)
    rng = np.random.default_rng(sample_ss)

    sampled = config.noise == "sampled"
    n_meas = MeasurementLayout(spec.n_params).size
    plan = ShotPlan(np.full(n_meas, config.shots), config.shots, config.r)
    m_tot = config.shots * n_meas
    rows, allocations, thetas = [], [], []
    tau, status, message = 0.0, "ok", ""

    while True:
        if keep_theta:
            thetas.append(theta.copy())
        psi = prepare_array(spec, theta)
        infid = _infidelity(psi, gs)
        if sampled:
            snap = raw_snapshot(spec, theta, params)
            exact = snap.eom
            eom, variances = measure_eom(spec, theta, params, plan, rng, config.sampling, snapshot=snap)
            used = plan.m_tot
        else:
            exact = eom = compute_eom(spec, theta, params, shifts=False)
            used = 0
        base = [tau, 0.0, exact.energy, exact.E_Z, exact.E_X, infid]
        if not np.isfinite(infid):
            status, message = "aborted", f"non-finite infidelity at tau={tau:.6g}"
            break
        try:
            theta_dot, diag = solve_thetadot(eom.M, eom.V, policy)
        except SolverError as exc:
            lam = np.linalg.eigvalsh(eom.M)
            rows.append(base[:1] + [np.nan] + base[2:] + [np.nan, lam[0], lam[-1], used])
            status, message = "solver_failure", str(exc)
            break
        row = base + [mclachlan_distance(exact, theta_dot), diag["lambda_min"], diag["lambda_max"], used]
        remaining = config.tau_final - tau
        if remaining <= 1e-12 * max(1.0, config.tau_final):
            rows.append(row)
            break
        try:
            theta_next, dt = advance(theta, theta_dot, control, dt_limit=remaining)
        except StepRejected as exc:
            rows.append(row)
            status, message = "aborted", str(exc)
            break
        row[1] = dt
        rows.append(row)

        if sampled and config.r < 1.0:
            step = len(rows) - 1
            if config.weights == "oracle":
                source = exact
                a_inv = regularized_inverse(source.M, policy)
                td = a_inv @ source.V
            else:
                source, td = eom, theta_dot
                a_inv = regularized_inverse(eom.M, policy)
            sd = compute_SD(spec, theta_next) if config.cost == "wavefunction" else None
            p = compute_weights(config.cost, source, td, a_inv, variances, sd)
            shots = allocate_shots(p, config.m_min, m_tot)
            plan = ShotPlan(shots, config.shots, config.r)
            if config.dump_allocation:
                allocations.append((step, p, shots))
        theta = theta_next
        # accumulate in the exact same way for every run so grids line up
        tau = config.tau_final if dt >= remaining else tau + dt

    kept = np.array(thetas[: len(rows)]) if keep_theta else None
    return TrajectoryRecord(np.array(rows, dtype=float), seed, status, message, allocations, kept)


# ---------------------------------------------------------------- ensembles


@dataclass(frozen=True)
class EnsembleSummary:
    tau: np.ndarray
    mean_infidelity: np.ndarray
    sem_infidelity: np.ndarray
    mean_energy: np.ndarray
    runs: int
    excluded: int = 0

    def at(self, tau: float) -> tuple[float, float]:
        """``(mean, standard error)`` of the infidelity at ``tau`` (interpolated)."""
        return (
            float(np.interp(tau, self.tau, self.mean_infidelity)),
            float(np.interp(tau, self.tau, self.sem_infidelity)),
        )

    def to_csv(self, config_hash: str = "") -> str:
        buf = io.StringIO()
        buf.write(f"# config_hash={config_hash} runs={self.runs} excluded={self.excluded}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("tau", "mean_infidelity", "sem_infidelity", "mean_energy", "runs"))
        for row in zip(self.tau, self.mean_infidelity, self.sem_infidelity, self.mean_energy):
            writer.writerow([_fmt(v) for v in row] + [self.runs])
        return buf.getvalue()


@dataclass
class EnsembleResult:
    config: RunConfig
    summary: EnsembleSummary
    records: list[TrajectoryRecord]

    def final_values(self) -> np.ndarray:
        return np.array([rec.final_infidelity for rec in self.records if rec.ok])


def tau_grid(config: RunConfig) -> np.ndarray:
    count = int(np.floor(config.tau_final / config.tau_step + 1e-9))
    grid = np.arange(count + 1) * config.tau_step
    if config.tau_final - grid[-1] > 1e-9:
        grid = np.append(grid, config.tau_final)
    return grid


def summarize(records: list[TrajectoryRecord], config: RunConfig) -> EnsembleSummary:
    """Average trajectories on the common grid after linear interpolation."""
    good = [rec for rec in records if rec.ok]
    excluded = len(records) - len(good)
    if excluded:
        log.warning("%d of %d runs aborted and excluded from the summary", excluded, len(records))
    grid = tau_grid(config)
    if not good:
        nan = np.full(grid.shape, np.nan)
        return EnsembleSummary(grid, nan, nan, nan, 0, excluded)
    infid = np.array([np.interp(grid, rec["tau"], rec["infidelity"]) for rec in good])
    energy = np.array([np.interp(grid, rec["tau"], rec["energy"]) for rec in good])
    k = len(good)
    sem = infid.std(axis=0, ddof=1) / np.sqrt(k) if k > 1 else np.zeros(grid.shape)
    return EnsembleSummary(grid, infid.mean(axis=0), sem, energy.mean(axis=0), k, excluded)


def _run_one(args):
    config, seed = args
    return run_trajectory(config, seed)


def run_ensemble(config: RunConfig) -> EnsembleResult:
    """Run ``config.runs`` trajectories with seeds ``seed, seed+1, ...``."""
    jobs = [(config, config.seed + i) for i in range(config.runs)]
    if config.workers > 1 and config.runs > 1:
        with multiprocessing.Pool(min(config.workers, config.runs)) as pool:
            records = pool.map(_run_one, jobs)
    else:
        records = [_run_one(job) for job in jobs]
    return EnsembleResult(config, summarize(records, config), records)


# ---------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepRow:
    label: str
    shots: int
    r: float
    tau: float
    mean: float
    sem: float
    runs: int
    feasible: bool = True


def _sweep_csv(rows: list[SweepRow], config_hash: str) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("label", "shots", "r", "tau", "mean_infidelity", "sem_infidelity", "runs", "feasible"))
    for row in rows:
        writer.writerow((row.label, row.shots, _fmt(row.r), _fmt(row.tau), _fmt(row.mean),
                         _fmt(row.sem), row.runs, int(row.feasible)))
    return buf.getvalue()


def sweep_csv(rows: list[SweepRow], config: RunConfig) -> str:
    return _sweep_csv(rows, config.config_hash())


def sweep_r(config: RunConfig, r_values=None, snapshots=None) -> tuple[list[SweepRow], dict]:
    """One sampled ensemble per ``r``; returns table rows and the ensembles by ``r``."""
    r_values = config.r_values if r_values is None else tuple(r_values)
    snapshots = config.snapshots if snapshots is None else tuple(snapshots)
    rows, ensembles = [], {}
    for r in r_values:
        try:
            cfg = config.with_overrides(noise="sampled", r=r)
            result = run_ensemble(cfg)
        except (ConfigurationError, InfeasibleBudget) as exc:
            log.warning("r=%s infeasible: %s", r, exc)
            rows += [SweepRow("allocated", config.shots, r, t, np.nan, np.nan, 0, False) for t in snapshots]
            continue
        ensembles[r] = result
        for t in snapshots:
            mean, sem = result.summary.at(t)
            rows.append(SweepRow("allocated", cfg.shots, r, t, mean, sem, result.summary.runs))
    return rows, ensembles


def sweep_shots(config: RunConfig, shot_values=None, allocated=(10_000, 0.4)) -> tuple[list[SweepRow], dict]:
    """Uniform ensembles over average budgets plus one allocated reference point."""
    shot_values = config.shot_values if shot_values is None else tuple(shot_values)
    rows, ensembles = [], {}
    tau = config.tau_final
    points = [("uniform", int(m), 1.0) for m in shot_values]
    if allocated is not None:
        points.append(("allocated", int(allocated[0]), float(allocated[1])))
    for label, shots, r in points:
        cfg = config.with_overrides(noise="sampled", shots=shots, r=r)
        result = run_ensemble(cfg)
        ensembles[(label, shots)] = result
        mean, sem = result.summary.at(tau)
        rows.append(SweepRow(label, shots, r, tau, mean, sem, result.summary.runs))
    return rows, ensembles


# ---------------------------------------------------------------- structure


@dataclass
class StructureReport:
    """Outcome of the singular-column checks for each chain length."""

    entries: list[dict]

    @property
    def all_claims_pass(self) -> bool:
        return all(c["passed"] for e in self.entries for c in e["claims"])

    def to_text(self) -> str:
        out = []
        for e in self.entries:
            out.append(f"N={e['n']}  unpruned parameters={e['n_full']}  samples={e['samples']}")
            for c in e["claims"]:
                mark = "PASS" if c["passed"] else "FAIL"
                out.append(f"  [{mark}] {c['claim']}  (max deviation {c['deviation']:.2e})")
            out.append(
                f"  rank deficiency of unpruned M: min {e['deficiency_min']}, max {e['deficiency_max']}"
            )
            out.append(f"  theta-independent null vectors ({len(e['null_vectors'])}):")
            for vec in e["null_vectors"]:
                out.append(f"    {vec}")
            mark = "PASS" if e["pruned_nonsingular"] else "FAIL"
            out.append(
                f"  [{mark}] pruned M nonsingular: min eigenvalue {e['pruned_lambda_min']:.4g} "
                f"({e['n_pruned']} parameters)"
            )
        return "\n".join(out) + "\n"


def _direction_gap(a, b, sign: float) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        return float("inf")
    return float(np.linalg.norm(a / na - sign * b / nb))


def _describe_null(vec, labels) -> str:
    keep = np.flatnonzero(np.abs(vec) > 1e-6)
    return " ".join(f"{vec[k]:+.4f}*{labels[k]}" for k in keep)


def verify_structure(config: RunConfig, sizes=None, samples=None, tol: float = 1e-10) -> StructureReport:
    """Check the metric-column relations that motivate the pruned gate set.

    For each chain length the unpruned first-layer ansatz is evaluated at
    random angles in ``[-pi, pi]``.  The claims checked are: the columns of
    ``Y_N Y_{N-1}`` and ``Z_N Z_{N-1}`` are anti-parallel, the columns of
    ``X_{N-1} Y_{N-2}`` and ``X_N`` are parallel, and the column of
    ``X_N X_{N-1}`` vanishes.  The report also lists the common null space
    actually found (so a failed claim comes with the true dependency set)
    and the smallest eigenvalue of the pruned metric.
    """
    sizes = config.verify_sizes if sizes is None else tuple(sizes)
    samples = config.verify_samples if samples is None else int(samples)
    rng = np.random.default_rng(config.seed)
    entries = []
    for n in sizes:
        full = build_default_ansatz(n, removed=())
        pruned = build_default_ansatz(n)
        labels = full.labels()
        yy, zz = full.index(f"Y{n}Y{n - 1}"), full.index(f"Z{n}Z{n - 1}")
        xy, xn = full.index(f"X{n - 1}Y{n - 2}"), full.index(f"X{n}")
        xx = full.index(f"X{n}X{n - 1}")
        params = TfimParams(n)
        gaps = {"anti": 0.0, "par": 0.0, "zero": 0.0}
        deficiencies, stack, pruned_min = [], [], np.inf
        for _ in range(samples):
            theta = rng.uniform(-np.pi, np.pi, full.n_params)
            m = compute_eom(full, theta, params, shifts=False).M
            gaps["anti"] = max(gaps["anti"], _direction_gap(m[:, yy], m[:, zz], -1.0))
            gaps["par"] = max(gaps["par"], _direction_gap(m[:, xy], m[:, xn], 1.0))
            gaps["zero"] = max(gaps["zero"], float(np.abs(m[:, xx]).max()))
            lam = np.linalg.eigvalsh(m)
            deficiencies.append(int(np.sum(lam < 1e-10 * max(1.0, lam[-1]))))
            stack.append(m)
            keep = [k for k, g in enumerate(full.generators) if g not in pruned.removed]
            pruned_min = min(pruned_min, float(np.linalg.eigvalsh(m[np.ix_(keep, keep)])[0]))
        null = scipy.linalg.null_space(np.vstack(stack), rcond=1e-9)
        if null.shape[1]:
            # reduced row echelon form for readable, sparse combinations
            _, _, piv = scipy.linalg.qr(null.T, pivoting=True)
            basis = np.linalg.solve(null.T[:, piv[: null.shape[1]]], null.T)
            basis /= np.linalg.norm(basis, axis=1, keepdims=True)
            null_desc = [_describe_null(v, labels) for v in basis]
        else:
            null_desc = []
        claims = [
            {"claim": f"columns Y{n}Y{n - 1} and Z{n}Z{n - 1} anti-parallel",
             "deviation": gaps["anti"], "passed": gaps["anti"] < tol},
            {"claim": f"columns X{n - 1}Y{n - 2} and X{n} parallel",
             "deviation": gaps["par"], "passed": gaps["par"] < tol},
            {"claim": f"column X{n}X{n - 1} is zero",
             "deviation": gaps["zero"], "passed": gaps["zero"] < tol},
        ]
        entries.append({
            "n": n, "n_full": full.n_params, "n_pruned": pruned.n_params, "samples": samples,
            "claims": claims, "deficiency_min": min(deficiencies), "deficiency_max": max(deficiencies),
            "null_vectors": null_desc, "pruned_lambda_min": pruned_min,
            "pruned_nonsingular": pruned_min > 1e-8,
        })
    return StructureReport(entries)


# ---------------------------------------------------------------- output helpers


def write_plot_recipe(path, config: RunConfig, kind: str = "trajectory") -> Path:
    """Write a JSON plotting recipe (columns, axes, scales) next to CSV output."""
    recipes = {
        "trajectory": {"x": "tau", "y": ["infidelity"], "yscale": "log",
                       "secondary": {"y": ["energy", "l2"], "yscale": "linear"}},
        "summary": {"x": "tau", "y": ["mean_infidelity"], "yerr": "sem_infidelity", "yscale": "log"},
        "sweep-r": {"x": "r", "y": ["mean_infidelity"], "yerr": "sem_infidelity",
                    "group_by": "tau", "yscale": "log"},
        "sweep-shots": {"x": "shots", "y": ["mean_infidelity"], "yerr": "sem_infidelity",
                        "group_by": "label", "xscale": "log", "yscale": "log"},
    }
    recipe = {"config_hash": config.config_hash(), "kind": kind, **recipes[kind]}
    path = Path(path)
    path.write_text(json.dumps(recipe, indent=2, sort_keys=True) + "\n")
    return path


def measurement_labels(spec: AnsatzSpec) -> tuple[list[str], list[str]]:
    ids = enumerate_measurements(spec)
    return [m.describe() for m in ids], [m.kind for m in ids]
