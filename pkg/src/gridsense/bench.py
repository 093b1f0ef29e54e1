"""Monte Carlo harness: scenario loading, trial dispatch, aggregation, reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import gamp
from .baselines import compute_metrics, lmmse_estimate
from .exceptions import ConfigParseError, GridSenseError, NetworkError, NumericBlowup
from .measurements import Scenario, StatePrior, apply_resolution_profile, sample_state, simulate_measurements, trial_streams
from .network import assemble_topology, builtin_network, load_network, validate_network
from .quantization import Quantized

log = logging.getLogger(__name__)

ESTIMATORS = ("emswgamp", "lmmse")
FORMATS = ("csv", "json", "pretty")
CSV_COLUMNS = [
    "estimator", "trials", "mse", "mse_magn", "mse_phase", "secs_per_trial",
    "nu_x_re", "nu_x_im", "sigma_x2", "bits_total", "bits_saved_pct", "seed",
]
FULL_WORD_BITS = 16


# -- configuration --------------------------------------------------------------


def _require(d, key, where):
    if key not in d:
        raise ConfigParseError(f"{where}: missing key {key!r}")
    return d[key]


def _resolve_network(ref: str, base: Path):
    path = Path(ref)
    if not path.is_absolute():
        path = base / path
    try:
        if path.is_file():
            return load_network(path), str(path)
        return builtin_network(ref), f"builtin:{ref}"
    except KeyError:
        raise ConfigParseError(f"network {ref!r} is neither a readable file nor a built-in fixture") from None
    except (OSError, NetworkError) as exc:
        raise ConfigParseError(f"network {ref!r}: {exc}") from exc


def scenario_from_dict(d: dict, base: Path | str = ".") -> Scenario:
    """Build a Scenario from its JSON form; raises ConfigParseError on bad input."""
    if not isinstance(d, dict):
        raise ConfigParseError("scenario must be a JSON object")
    try:
        network, net_path = _resolve_network(str(_require(d, "network", "scenario")), Path(base))
        p = _require(d, "prior", "scenario")
        if isinstance(p, str):
            from .measurements import PRIORS
            if p not in PRIORS:
                raise ConfigParseError(f"unknown prior label {p!r}; known: {sorted(PRIORS)}")
            prior = PRIORS[p]
        else:
            prior = StatePrior(
                float(_require(p, "magnitude_mean", "prior")),
                float(_require(p, "phase_mean", "prior")),
                float(_require(p, "variance", "prior")),
            )
        profile = dict(d.get("profile", {"mode": "full"}))
        mode = profile.setdefault("mode", "full")
        if mode not in ("full", "k_ladder", "explicit"):
            raise ConfigParseError(f"unknown profile mode {mode!r}")
        if mode == "k_ladder":
            _require(profile, "k", "profile")
        if mode == "explicit":
            _require(profile, "channels", "profile")
        if mode != "full":
            bits = profile.setdefault("bits", 1)
            if int(bits) != bits or not 1 <= int(bits) <= 16:
                raise ConfigParseError(f"bits must be an integer in 1..16, got {bits!r}")
        fs = profile.setdefault("full_scale", "auto")
        if fs != "auto" and not (isinstance(fs, (int, float)) and fs > 0):
            raise ConfigParseError(f"full_scale must be 'auto' or a positive number, got {fs!r}")
        return Scenario(
            network=network,
            prior=prior,
            noise_variance=float(_require(d, "noise_variance", "scenario")),
            profile=profile,
            trials=int(d.get("trials", 1)),
            seed=int(d.get("seed", 0)),
            network_path=net_path,
        )
    except ConfigParseError:
        raise
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigParseError(f"invalid scenario: {exc}") from exc


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(d, path.parent)


@dataclass
class RunConfig:
    scenario: Scenario
    estimators: tuple = ESTIMATORS
    output: str | None = None
    format: str = "csv"
    options: gamp.SolverOptions = field(default_factory=gamp.SolverOptions)

    def __post_init__(self):
        self.estimators = tuple(self.estimators)
        if not self.estimators:
            raise ConfigParseError("at least one estimator is required")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad:
            raise ConfigParseError(f"unknown estimators {bad}; choose from {ESTIMATORS}")
        if self.format not in FORMATS:
            raise ConfigParseError(f"unknown format {self.format!r}; choose from {FORMATS}")


# -- data volume ----------------------------------------------------------------


@dataclass(frozen=True)
class BitAccount:
    """Bits per snapshot, one word per complex measurement.

    ``saved_pct`` is truncated (not rounded) to hundredths of a percent,
    which reproduces the published figures. ``component_bits`` counts the
    real and imaginary words separately.
    """

    channels: int
    bits_total: int
    baseline_bits: int
    saved_pct: float
    saved_fraction: float
    component_bits: int
    component_baseline: int


def bit_account(tags) -> BitAccount:
    words = [t.spec.bits if isinstance(t, Quantized) else FULL_WORD_BITS for t in tags]
    P = len(words)
    total = int(sum(words))
    base = FULL_WORD_BITS * P
    hundredths = ((base - total) * 10000) // base
    return BitAccount(
        channels=P,
        bits_total=total,
        baseline_bits=base,
        saved_pct=hundredths / 100,
        saved_fraction=(base - total) / base,
        component_bits=2 * total,
        component_baseline=2 * base,
    )


# -- trials ---------------------------------------------------------------------


@dataclass
class TrialOutcome:
    estimator: str
    mse: float = np.nan
    mse_magn: float = np.nan
    mse_phase: float = np.nan
    seconds: float = 0.0
    nu_x: complex = complex(np.nan, np.nan)
    sigma_x2: float = np.nan
    iterations: int = 0
    converged: bool = True
    diverged: bool = False


def _solver_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**63 - 1))


def run_trial(scenario: Scenario, H, profile, trial: int, estimators, options: gamp.SolverOptions):
    """One Monte Carlo trial for every requested estimator."""
    state_rng, noise_rng, solver_rng = trial_streams(scenario.seed, trial)
    N = H.shape[1]
    x = sample_state(scenario.prior, N, state_rng)
    y = simulate_measurements(H, x, scenario.noise_variance, noise_rng)
    meas = apply_resolution_profile(y, profile)
    out = []
    for name in estimators:
        res = TrialOutcome(name)
        t0 = time.perf_counter()
        try:
            if name == "emswgamp":
                opts = gamp.SolverOptions(**{**asdict(options), "seed": _solver_seed(solver_rng)})
                est = gamp.run(meas, H, scenario.noise_variance, opts)
                xh = est.x
                res.nu_x, res.sigma_x2 = est.hyper.prior_mean, est.hyper.prior_variance
                res.iterations, res.converged = est.iterations, est.converged
            else:
                xh = lmmse_estimate(H, meas.values, scenario.noise_variance)
        except NumericBlowup as exc:
            log.warning("trial %d: %s diverged: %s", trial, name, exc)
            res.seconds = time.perf_counter() - t0
            res.diverged, res.converged = True, False
            out.append(res)
            continue
        res.seconds = time.perf_counter() - t0
        m = compute_metrics(x, xh)
        res.mse, res.mse_magn, res.mse_phase = m.mse, m.mse_magnitude, m.mse_phase
        out.append(res)
    return out


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("GRIDSENSE_THREADS")
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigParseError(f"GRIDSENSE_THREADS must be an integer, got {cap!r}") from None
    return max(1, n)


# -- aggregation ----------------------------------------------------------------


@dataclass
class EstimatorSummary:
    estimator: str
    trials: int
    mse: float
    mse_magn: float
    mse_phase: float
    secs_per_trial: float
    nu_x_re: float
    nu_x_im: float
    sigma_x2: float
    diverged: int = 0
    unconverged: int = 0
    mean_iterations: float = 0.0
    mse_stderr: float = 0.0


@dataclass
class AggregateReport:
    rows: list
    bits: BitAccount
    seed: int
    trials: int
    config: dict
    per_trial: dict = field(default_factory=dict, repr=False)

    @property
    def diverged(self) -> int:
        return sum(r.diverged for r in self.rows)

    def row(self, estimator: str) -> EstimatorSummary:
        for r in self.rows:
            if r.estimator == estimator:
                return r
        raise KeyError(estimator)


def _summarise(name: str, outcomes: list[TrialOutcome], trials: int) -> EstimatorSummary:
    ok = [o for o in outcomes if not o.diverged]

    def mean(attr):
        return float(np.mean([getattr(o, attr) for o in ok])) if ok else float("nan")

    mses = np.array([o.mse for o in ok])
    stderr = float(mses.std(ddof=1) / np.sqrt(len(mses))) if len(mses) > 1 else 0.0
    if name == "emswgamp" and ok:
        nu = complex(np.mean([o.nu_x for o in ok]))
        s2x = mean("sigma_x2")
    else:
        nu, s2x = complex(np.nan, np.nan), float("nan")
    return EstimatorSummary(
        estimator=name,
        trials=trials,
        mse=mean("mse"),
        mse_magn=mean("mse_magn"),
        mse_phase=mean("mse_phase"),
        secs_per_trial=float(np.mean([o.seconds for o in outcomes])),
        nu_x_re=nu.real,
        nu_x_im=nu.imag,
        sigma_x2=s2x,
        diverged=sum(o.diverged for o in outcomes),
        unconverged=sum((not o.converged) and not o.diverged for o in outcomes),
        mean_iterations=mean("iterations") if name == "emswgamp" else 0.0,
        mse_stderr=stderr,
    )


def run_scenario(config: RunConfig, workers: int | None = None) -> AggregateReport:
    """Run every trial of the scenario for each requested estimator and average."""
    sc = config.scenario
    validate_network(sc.network)
    H = assemble_topology(sc.network).H
    profile = sc.resolution_profile(H)
    steps = [t.spec.step if isinstance(t, Quantized) else None for t in profile]

    def job(t):
        return run_trial(sc, H, profile, t, config.estimators, config.options)

    n = worker_count(workers)
    if n == 1 or sc.trials == 1:
        results = [job(t) for t in range(sc.trials)]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(job, range(sc.trials)))

    per_trial = {name: [r[k] for r in results] for k, name in enumerate(config.estimators)}
    rows = [_summarise(name, per_trial[name], sc.trials) for name in config.estimators]
    echo = {
        "network": sc.network_path or sc.network.name,
        "prior": asdict(sc.prior),
        "noise_variance": sc.noise_variance,
        "profile": sc.profile,
        "quantized_channels": [int(c) for c in sc.quantized_channels()],
        "step_per_channel": steps,
        "phase_error": "wrapped to (-pi, pi]",
        "bit_convention": "one word per complex measurement; component_bits doubles it",
        "solver": asdict(config.options),
    }
    return AggregateReport(rows, bit_account(profile), sc.seed, sc.trials, echo, per_trial)


# -- output ---------------------------------------------------------------------


def report_records(report: AggregateReport) -> list[dict]:
    recs = []
    for r in report.rows:
        recs.append({
            "estimator": r.estimator,
            "trials": r.trials,
            "mse": r.mse,
            "mse_magn": r.mse_magn,
            "mse_phase": r.mse_phase,
            "secs_per_trial": r.secs_per_trial,
            "nu_x_re": r.nu_x_re,
            "nu_x_im": r.nu_x_im,
            "sigma_x2": r.sigma_x2,
            "bits_total": report.bits.bits_total,
            "bits_saved_pct": report.bits.saved_pct,
            "seed": report.seed,
        })
    return recs


def _json_safe(v):
    if isinstance(v, float) and not np.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _fmt(v):
    if isinstance(v, float):
        return "-" if not np.isfinite(v) else f"{v:.3e}"
    return str(v)


def render_report(report: AggregateReport, fmt: str = "csv") -> str:
    recs = report_records(report)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in recs:
            w.writerow({k: ("" if isinstance(v, float) and not np.isfinite(v) else repr(v) if isinstance(v, float) else v)
                        for k, v in r.items()})
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "columns": CSV_COLUMNS,
            "rows": recs,
            "bits": asdict(report.bits),
            "diverged": {r.estimator: r.diverged for r in report.rows},
            "unconverged": {r.estimator: r.unconverged for r in report.rows},
            "config": report.config,
        }
        return json.dumps(_json_safe(doc), indent=2) + "\n"
    if fmt == "pretty":
        return pretty_table(recs)
    raise ConfigParseError(f"unknown format {fmt!r}")


def pretty_table(recs: list[dict], key_columns=("estimator",)) -> str:
    cols = list(key_columns) + ["mse", "mse_magn", "mse_phase", "secs_per_trial"]
    cells = [[_fmt(r[c]) for c in cols] for r in recs]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    line = "-+-".join("-" * w for w in widths)
    out = [" | ".join(c.ljust(w) for c, w in zip(cols, widths)), line]
    out += [" | ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(out) + "\n"


def emit_report(report: AggregateReport, fmt: str = "csv", path=None) -> str:
    """Render the report and write it to ``path`` (or return it only when None)."""
    text = render_report(report, fmt)
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv_report(text: str) -> list[dict]:
    """Parse CSV produced by :func:`emit_report` back into typed records."""
    ints = {"trials", "bits_total", "seed"}
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        rec = {}
        for k, v in row.items():
            if k == "estimator":
                rec[k] = v
            elif k in ints:
                rec[k] = int(v)
            else:
                rec[k] = float(v) if v != "" else float("nan")
        out.append(rec)
    return out


# -- sweeps ---------------------------------------------------------------------


def sweep_k(config: RunConfig, ks, workers: int | None = None) -> list[tuple[int, AggregateReport]]:
    """Re-run the scenario once per K of the selection ladder."""
    out = []
    for k in ks:
        prof = {**config.scenario.profile, "mode": "k_ladder", "k": int(k)}
        prof.setdefault("bits", 1)
        sc = Scenario(**{**config.scenario.__dict__, "profile": prof})
        cfg = RunConfig(sc, config.estimators, None, config.format, config.options)
        out.append((int(k), run_scenario(cfg, workers)))
    return out


def render_sweep(results, fmt: str = "csv") -> str:
    recs = []
    for k, rep in results:
        for r in report_records(rep):
            recs.append({"k": k, **r})
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["k"] + CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in recs:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
        return buf.getvalue()
    if fmt == "json":
        return json.dumps(_json_safe({"columns": ["k"] + CSV_COLUMNS, "rows": recs}), indent=2) + "\n"
    return pretty_table(recs, key_columns=("k", "estimator"))


__all__ = [
    "AggregateReport", "BitAccount", "CSV_COLUMNS", "EstimatorSummary", "RunConfig",
    "bit_account", "emit_report", "load_scenario", "read_csv_report", "render_report",
    "render_sweep", "run_scenario", "run_trial", "scenario_from_dict", "sweep_k", "worker_count",
    "GridSenseError",
]
