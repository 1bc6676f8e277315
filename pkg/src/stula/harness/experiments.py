"""Experiment kinds and the result record.

Each ``run_<kind>`` returns an :class:`Outcome` (summary, metric reports,
tables); :func:`run_experiment` writes the tables as CSV next to a JSON
result file.  Wall-clock time goes to a separate ``.timing.json`` so that the
result file itself is a deterministic function of the configuration.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from .._accel import BACKEND
from ..errors import BoxTooSmallError, ConfigError, InvalidInputError, MissingMetadataError
from ..isoperimetry import log_gap_slope, spectrum
from ..metrics import (
    MetricReport,
    excess_risk,
    excess_risk_quadrature,
    histogram,
    kl_divergence,
    moment_summary,
    sliced_w2,
    tv_distance,
    w2_1d,
)
from ..potentials import (
    PotentialSpec,
    get_potential,
    values,
    verify_convexity_at_infinity,
    verify_dissipativity,
    verify_growth,
    verify_local_lipschitz,
)
from ..reference import GridDensity, auto_box, grid_reference
from ..samplers import ChainConfig, InitialLaw, check_drift_bounds, lambda_max, run_chains, second_moment_bound
from .config import ExperimentConfig
from .tables import SCHEMA_VERSION, SCHEMAS, spectrum_columns, write_csv

DEFAULT_CELLS = {1: 512, 2: 128}
PLATEAU_WINDOW = 0.1
PLATEAU_TOL = 0.1


@dataclass
class Table:
    schema: str
    columns: tuple[str, ...]
    rows: list


@dataclass
class Outcome:
    summary: dict = field(default_factory=dict)
    metrics: list[MetricReport] = field(default_factory=list)
    moments: dict = field(default_factory=dict)
    tables: dict[str, Table] = field(default_factory=dict)


@dataclass
class ResultRecord:
    config: dict
    config_hash: str
    kind: str
    potential: str
    library_version: str
    backend: str
    summary: dict
    metrics: list[dict]
    moments: dict
    files: dict[str, str]
    wall_clock_s: float = float("nan")

    def to_dict(self) -> dict:
        """JSON body of the result file (wall-clock excluded, see module docstring)."""
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "potential": self.potential,
            "config_hash": self.config_hash,
            "config": self.config,
            "library_version": self.library_version,
            "backend": self.backend,
            "summary": self.summary,
            "metrics": self.metrics,
            "moments": self.moments,
            "files": self.files,
        }


# --------------------------------------------------------------------------
# shared pieces


def reference_for(p: PotentialSpec, cfg: ExperimentConfig, beta: float) -> GridDensity:
    if p.dim > 2:
        raise InvalidInputError("grid references (and KL/TV) need dim <= 2")
    if cfg.box is None and p.non_confining:
        raise ConfigError(f"field 'box': potential {p.name!r} is not confining, give an explicit box")
    box = cfg.box if cfg.box is not None else auto_box(p, beta)
    n = cfg.n_cells or DEFAULT_CELLS[p.dim]
    return grid_reference(p, beta, box, n, require_tail_containment=not p.non_confining)


def initial_law(cfg: ExperimentConfig) -> InitialLaw:
    if cfg.init == "gaussian":
        return InitialLaw.gaussian(cfg.x0, cfg.init_scale)
    return InitialLaw.point(cfg.x0)


def chain_config(cfg: ExperimentConfig, beta: float, lam: float, n_steps: int | None = None,
                 burn_in: int | None = None, thin: int | None = None) -> ChainConfig:
    return ChainConfig(
        beta=beta, lam=lam, n_steps=n_steps or cfg.n_steps, n_chains=cfg.n_chains, seed=cfg.seed,
        burn_in=cfg.burn_in if burn_in is None else burn_in, thin=thin or cfg.thin, init=initial_law(cfg),
        scheme=cfg.scheme, allow_large_step=cfg.allow_large_step,
    )


def sample_metrics(samples: np.ndarray, p: PotentialSpec, cfg: ExperimentConfig, beta: float,
                   grid: GridDensity | None) -> list[MetricReport]:
    out = []
    if grid is not None:
        h = histogram(samples, grid)
        if "kl" in cfg.metrics:
            out.append(kl_divergence(h, grid))
        if "tv" in cfg.metrics:
            out.append(tv_distance(h, grid))
        if "w2" in cfg.metrics:
            if p.dim == 1:
                out.append(w2_1d(samples, grid))
            else:
                ref = grid.sample(min(samples.shape[0], 200000), cfg.seed)
                out.append(sliced_w2(samples, ref, cfg.n_projections, cfg.seed))
    if "excess_risk" in cfg.metrics and p.known_minimum is not None:
        out.append(excess_risk(samples, p))
    return out


def _trace_rows(trace: np.ndarray, max_rows: int = 1000) -> list:
    every = max(1, (trace.shape[0] - 1) // max_rows)
    steps = np.arange(0, trace.shape[0], every)
    return [[int(s), trace[s, 0], trace[s, 1]] for s in steps]


# --------------------------------------------------------------------------
# sample


def run_sample(cfg: ExperimentConfig, p: PotentialSpec) -> Outcome:
    cc = chain_config(cfg, cfg.beta, cfg.lam)
    batch = run_chains(p, cc)
    grid = None
    if p.dim <= 2 and (cfg.box is not None or not p.non_confining) and any(m in cfg.metrics for m in ("kl", "tv", "w2")):
        grid = reference_for(p, cfg, cfg.beta)
    out = Outcome()
    out.metrics = sample_metrics(batch.samples, p, cfg, cfg.beta, grid)
    out.moments = moment_summary(batch.samples)
    ms = batch.mean_sq
    out.summary = {
        "lambda_max": _maybe(lambda: lambda_max(p)),
        "diverged": batch.diverged,
        "n_diverged": batch.n_diverged,
        "first_nonfinite_step": batch.first_nonfinite_step,
        "max_running_mean_sq": float(np.nanmax(ms)),
        "second_moment_bound": _maybe(lambda: second_moment_bound(p, cfg.beta, cc.init.second_moment(p.dim))),
        "n_samples": int(batch.samples.shape[0]),
    }
    out.tables["metrics"] = Table("metrics", SCHEMAS["metrics"],
                                  [[m.metric, m.variant, m.value, m.n_samples] for m in out.metrics])
    out.tables["trace"] = Table("moment_trace", SCHEMAS["moment_trace"], _trace_rows(batch.moment_trace))
    return out


def _maybe(fn):
    try:
        return float(fn())
    except MissingMetadataError:
        return None


# --------------------------------------------------------------------------
# lambda sweep


def plateau_windows(kl_window: callable, n_collect: int, frac: float = PLATEAU_WINDOW):
    """KL over the trailing ``frac`` of collection points and over the ``frac`` before it."""
    w = max(1, int(round(frac * n_collect)))
    if 2 * w > n_collect:
        raise InvalidInputError("too few collection points for plateau windows")
    last = kl_window(n_collect - w, n_collect)
    prev = kl_window(n_collect - 2 * w, n_collect - w)
    plateaued = abs(last - prev) <= PLATEAU_TOL * max(abs(prev), 1e-300)
    return prev, last, bool(plateaued)


def lambda_sweep(p: PotentialSpec, beta: float, lambdas, cfg: ExperimentConfig, grid: GridDensity) -> tuple[list, list]:
    """Plateau KL/TV per stepsize and the ratio table ``plateau(lam_i)/plateau(lam_{i+1})``.

    Every stepsize covers the same continuous horizon; samples are pooled
    across chains over the post-burn-in part of the run.
    """
    if len(lambdas) < 2:
        raise InvalidInputError("a lambda sweep needs at least 2 stepsizes")
    rows = []
    for lam in lambdas:
        n_steps = max(1, int(round(cfg.horizon / lam)))
        burn_t = cfg.burn_in_time if cfg.burn_in_time is not None else 0.5 * cfg.horizon
        burn = min(n_steps, int(round(burn_t / lam)))
        if cfg.thin_time is not None:
            thin = max(1, int(round(cfg.thin_time / lam)))
        else:
            thin = max(1, (n_steps - burn) // 1000)
        batch = run_chains(p, chain_config(cfg, beta, lam, n_steps=n_steps, burn_in=burn, thin=thin))
        S = batch.samples.reshape(-1, int(batch.chain_alive.sum()), p.dim)
        h = histogram(batch.samples, grid)
        kl = kl_divergence(h, grid)
        tv = tv_distance(h, grid)
        prev, last, ok = plateau_windows(
            lambda i, j: kl_divergence(histogram(S[i:j].reshape(-1, p.dim), grid), grid).value, S.shape[0])
        rows.append({
            "lam": lam, "n_steps": n_steps, "plateau_kl": kl.value, "plateau_tv": tv.value,
            "kl_window_prev": prev, "kl_window_last": last, "plateaued": ok,
            "n_samples": int(batch.samples.shape[0]), "n_diverged": batch.n_diverged,
            "kl_bias_estimate": kl.diagnostics.get("bias_estimate"),
        })
    ratios = []
    for a, b in zip(rows[:-1], rows[1:]):
        ratios.append({
            "lam": a["lam"], "lam_next": b["lam"],
            "kl_ratio": a["plateau_kl"] / b["plateau_kl"] if b["plateau_kl"] > 0 else float("inf"),
            "tv_ratio": a["plateau_tv"] / b["plateau_tv"] if b["plateau_tv"] > 0 else float("inf"),
        })
    return rows, ratios


def run_lambda_sweep(cfg: ExperimentConfig, p: PotentialSpec) -> Outcome:
    grid = reference_for(p, cfg, cfg.beta)
    rows, ratios = lambda_sweep(p, cfg.beta, cfg.lambdas, cfg, grid)
    cols = SCHEMAS["lambda_sweep"]
    out = Outcome()
    out.summary = {
        "rows": rows,
        "ratios": ratios,
        "all_plateaued": all(r["plateaued"] for r in rows),
        "flagged": [r["lam"] for r in rows if not r["plateaued"]],
    }
    out.tables["lambda_sweep"] = Table("lambda_sweep", cols, [{c: r[c] for c in cols} for r in rows])
    out.tables["ratios"] = Table("lambda_ratios", SCHEMAS["lambda_ratios"], ratios)
    return out


# --------------------------------------------------------------------------
# KL decay


@dataclass
class DecayFit:
    rate: float
    plateau: float
    n_fit: int
    ok: bool
    message: str = ""

    def to_dict(self) -> dict:
        return {"rate": self.rate, "plateau": self.plateau, "n_fit": self.n_fit, "fit_ok": self.ok,
                "message": self.message}


def kl_decay_rate_fit(kl, lam: float, steps=None, plateau: float | None = None) -> DecayFit:
    """Exponential rate of ``KL(n) - plateau`` in continuous time ``n * lam``.

    The plateau defaults to the mean of the trailing 10% of the trace.  The
    fit is least squares on ``log(KL - plateau)`` over the leading run of
    points with ``KL > 3 * plateau``; fewer than 3 such points is a fit
    failure (``ok=False``, rate NaN).
    """
    kl = np.asarray(kl, dtype=float)
    steps = np.arange(kl.size) if steps is None else np.asarray(steps, dtype=float)
    if kl.shape != steps.shape or kl.ndim != 1:
        raise InvalidInputError("kl and steps must be 1-D arrays of equal length")
    if plateau is None:
        w = max(1, int(round(PLATEAU_WINDOW * kl.size)))
        plateau = float(np.mean(kl[-w:]))
    above = kl > 3.0 * plateau
    n = int(np.argmin(above)) if not above.all() else kl.size
    if n < 3:
        return DecayFit(float("nan"), plateau, n, False, "no decaying segment above 3x plateau")
    t = steps[:n] * lam
    y = np.log(kl[:n] - plateau)
    slope = float(np.polyfit(t, y, 1)[0])
    if not slope < 0:
        return DecayFit(float("nan"), plateau, n, False, "segment is not decaying")
    return DecayFit(-slope, plateau, n, True)


def kl_trace(p: PotentialSpec, cfg: ExperimentConfig, beta: float, grid: GridDensity):
    """KL of the across-chain law at every ``record_every`` steps."""
    rec = np.arange(cfg.record_every, cfg.n_steps + 1, cfg.record_every)
    cc = chain_config(cfg, beta, cfg.lam, burn_in=cfg.n_steps)
    batch = run_chains(p, cc, record_at=rec)
    kl = np.array([kl_divergence(histogram(batch.snapshot(s), grid), grid).value for s in rec])
    return rec, kl, batch


def run_beta_sweep_sampling(cfg: ExperimentConfig, p: PotentialSpec) -> Outcome:
    out = Outcome()
    trace_rows, rate_rows, fits = [], [], {}
    for beta in cfg.betas:
        grid = reference_for(p, cfg, beta)
        rec, kl, _ = kl_trace(p, cfg, beta, grid)
        fit = kl_decay_rate_fit(kl, cfg.lam, rec)
        fits[repr(beta)] = fit.to_dict()
        trace_rows += [[beta, int(s), s * cfg.lam, v] for s, v in zip(rec, kl)]
        rate_rows.append([beta, fit.rate, fit.plateau, fit.n_fit, fit.ok])
    rates = [r[1] for r in rate_rows]
    out.summary = {
        "fits": fits,
        "rate_decreasing_in_beta": bool(all(np.diff(rates) < 0)) if len(rates) > 1 else None,
    }
    out.tables["kl_trace"] = Table("kl_trace", SCHEMAS["kl_trace"], trace_rows)
    out.tables["rates"] = Table("decay_rates", SCHEMAS["decay_rates"], rate_rows)
    return out


# --------------------------------------------------------------------------
# spectrum sweep


def run_spectrum_sweep(cfg: ExperimentConfig, p: PotentialSpec) -> Outcome:
    rows, gaps = [], []
    for beta in cfg.betas:
        r = spectrum(p, beta, box=cfg.box, n_cells=cfg.n_cells, k=cfg.k, refine=cfg.refine)
        eig = list(r.eigenvalues) + [float("nan")] * (cfg.k - len(r.eigenvalues))
        rows.append([beta, "x".join(map(str, r.n_cells)), r.gap, *eig, r.converged])
        gaps.append(r.gap)
    out = Outcome()
    out.summary = {
        "gaps": gaps,
        "log_gap_slope": log_gap_slope(cfg.betas, gaps) if len(gaps) > 1 and min(gaps) > 0 else None,
        "gap_ratio": max(gaps) / min(gaps) if min(gaps) > 0 else None,
        "all_converged": all(r[-1] for r in rows),
    }
    out.tables["spectrum"] = Table("spectrum", spectrum_columns(cfg.k), rows)
    return out


# --------------------------------------------------------------------------
# validation


def validate_potential(p: PotentialSpec, n_samples: int, radius: float, seed: int) -> list[dict]:
    """Sampled checks of the growth, dissipativity, Lipschitz and drift inequalities.

    Checks needing undeclared constants are reported with a ``skipped`` status.
    """
    rows = []

    def add(name, lam, fn):
        try:
            r = fn()
        except MissingMetadataError as exc:
            rows.append({"check": name, "lam": lam, "holds": None, "worst_margin": None, "n_tested": 0,
                         "status": f"skipped: {exc}"})
            return
        rows.append({"check": r.name, "lam": lam, "holds": r.holds, "worst_margin": r.worst_margin,
                     "n_tested": r.n_tested, "status": "pass" if r.holds else "fail"})

    add("growth", None, lambda: verify_growth(p, n_samples, radius, seed))
    add("dissipativity", None, lambda: verify_dissipativity(p, n_samples, radius, seed))
    add("local_lipschitz", None, lambda: verify_local_lipschitz(p, n_samples, radius, seed))
    conv = p.metadata.get("convexity_at_infinity")
    if conv is not None:
        add("convexity_at_infinity", None,
            lambda: verify_convexity_at_infinity(p, conv["c1"], conv["c2"], conv["c3"], conv["r"], conv["l"],
                                                 n_samples, seed, radius=radius))
    try:
        lm = lambda_max(p)
    except MissingMetadataError as exc:
        for name in ("tamed_growth", "tamed_dissipativity", "taming_error"):
            rows.append({"check": name, "lam": None, "holds": None, "worst_margin": None, "n_tested": 0,
                         "status": f"skipped: {exc}"})
        return rows
    for lam in (lm, lm / 10, lm / 100):
        for r in check_drift_bounds(p, lam, n_samples, radius, seed):
            rows.append({"check": r.name, "lam": lam, "holds": r.holds, "worst_margin": r.worst_margin,
                         "n_tested": r.n_tested, "status": "pass" if r.holds else "fail"})
    return rows


def run_validate(cfg: ExperimentConfig, p: PotentialSpec) -> Outcome:
    rows = validate_potential(p, cfg.n_samples, cfg.radius, cfg.seed)
    tested = [r for r in rows if r["holds"] is not None]
    out = Outcome()
    out.summary = {"checks": rows, "all_pass": bool(tested) and all(r["holds"] for r in tested),
                   "n_skipped": len(rows) - len(tested), "label": "sampled evidence"}
    out.tables["checks"] = Table("checks", SCHEMAS["checks"], rows)
    return out


# --------------------------------------------------------------------------
# excess risk


def excess_risk_vs_beta(p: PotentialSpec, betas, cfg: ExperimentConfig) -> tuple[list, dict]:
    """Per-beta excess risk with batch-means standard errors and a monotone-trend check.

    The standard error treats each chain's time average as one observation.
    The trend passes when no increase between consecutive betas exceeds one
    standard error of the difference.
    """
    if p.known_minimum is None:
        raise MissingMetadataError(f"potential {p.name!r} has no known minimum")
    u_star = float(p.known_minimum[1])
    rows = []
    for beta in betas:
        batch = run_chains(p, chain_config(cfg, beta, cfg.lam))
        n_alive = int(batch.chain_alive.sum())
        u = values(p, batch.samples).reshape(-1, n_alive)
        risk = float(u.mean() - u_star)
        if n_alive > 1:
            se = float(u.mean(axis=0).std(ddof=1) / math.sqrt(n_alive))
        else:
            se = excess_risk(batch.samples, p).diagnostics["std_error"]
        try:
            quad = excess_risk_quadrature(reference_for(p, cfg, beta), p)
        except (BoxTooSmallError, InvalidInputError, ConfigError):
            quad = None
        rows.append({"beta": beta, "lam": cfg.lam, "excess_risk": risk, "std_error": se, "quadrature": quad,
                     "n_samples": int(batch.samples.shape[0])})
    z = []
    for a, b in zip(rows[:-1], rows[1:]):
        sd = math.hypot(a["std_error"], b["std_error"])
        z.append((b["excess_risk"] - a["excess_risk"]) / sd if sd > 0 else math.copysign(math.inf, b["excess_risk"] - a["excess_risk"]))
    trend = {"increase_over_se": z, "max_increase_over_se": max(z) if z else None,
             "non_increasing_within_1se": all(v <= 1.0 for v in z)}
    return rows, trend


def run_excess_risk_vs_beta(cfg: ExperimentConfig, p: PotentialSpec) -> Outcome:
    rows, trend = excess_risk_vs_beta(p, cfg.betas, cfg)
    out = Outcome()
    out.summary = {"rows": rows, "trend": trend}
    out.tables["excess_risk"] = Table("excess_risk", SCHEMAS["excess_risk"], rows)
    return out


# --------------------------------------------------------------------------
# dispatch


RUNNERS = {
    "sample": run_sample,
    "lambda_sweep": run_lambda_sweep,
    "beta_sweep_sampling": run_beta_sweep_sampling,
    "spectrum_sweep": run_spectrum_sweep,
    "validate": run_validate,
    "excess_risk_vs_beta": run_excess_risk_vs_beta,
}


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no NaN/inf; strings keep the file valid
        return v if math.isfinite(v) else repr(v)
    return v


def run_experiment(cfg: ExperimentConfig, out_dir) -> ResultRecord:
    """Run ``cfg`` and write ``<prefix>.json``, ``<prefix>_<table>.csv`` and ``<prefix>.timing.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    p = get_potential(cfg.potential)
    t0 = time.perf_counter()
    outcome = RUNNERS[cfg.kind](cfg, p)
    elapsed = time.perf_counter() - t0

    files = {}
    for name, table in outcome.tables.items():
        fname = f"{cfg.prefix}_{name}.csv"
        write_csv(out_dir / fname, table.columns, table.rows)
        files[name] = fname
    record = ResultRecord(
        config=cfg.to_dict(), config_hash=cfg.config_hash, kind=cfg.kind, potential=cfg.potential,
        library_version=__version__, backend=BACKEND, summary=_jsonable(outcome.summary),
        metrics=[_jsonable(m.to_dict()) for m in outcome.metrics], moments=_jsonable(outcome.moments),
        files=files, wall_clock_s=elapsed,
    )
    (out_dir / f"{cfg.prefix}.json").write_text(json.dumps(record.to_dict(), indent=2) + "\n")
    (out_dir / f"{cfg.prefix}.timing.json").write_text(
        json.dumps({"config_hash": cfg.config_hash, "wall_clock_s": elapsed}, indent=2) + "\n")
    return record
