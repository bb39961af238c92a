"""Scenario execution, report assembly and suite orchestration."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import diagnostics as D
from ..damping import build_h_table
from ..errors import ConfigurationError, NumericFailure
from ..integrate import integrate
from . import oracles
from .config import ScenarioConfig, config_from_dict, load_config
from .scenarios import SUITES, builtin_scenarios

log = logging.getLogger(__name__)

OUT_ENV = "INERTIA_LAB_OUT"
DEFAULT_OUT = "inertia-lab-out"
H_TABLE_FACTOR = 4.0
N_MINIMIZERS = 3


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV) or DEFAULT_OUT)


@dataclass
class ScenarioResult:
    report: D.DiagnosticsReport
    samples: list = field(default_factory=list, repr=False)
    context: D.RunContext | None = field(default=None, repr=False)


def _checks_for(tag, samples, ctx, cfg):
    if tag.kind == "T1":
        return D.theorem1_checks(samples, ctx)
    if tag.kind == "T2":
        return D.theorem2_checks(samples, ctx, tag.nu)
    if tag.kind == "T3":
        return D.theorem3_checks(samples, ctx)
    if tag.kind == "T4":
        return D.theorem4_checks(samples, ctx)
    return [oracles.oracle_check(cfg, samples)]


def _invariants(samples, cfg, accs):
    t, w = D.series(samples, "w")
    out = [D.accumulators_monotone(samples, accs), D.energy_balance_check(samples)]
    if cfg.source.is_zero:
        out.append(D.energy_monotone_check(t, w))
    else:
        out.append(D.forcing_bound_check(samples))
    return out


def run_scenario(cfg: ScenarioConfig, out_dir=None, write: bool = True) -> ScenarioResult:
    """Integrate ``cfg``, evaluate its declared verdicts and write trace and report.

    A solver failure yields a report with status ``"aborted"`` and the last
    good time; the partial trace is still written.
    """
    start = time.perf_counter()
    report = D.DiagnosticsReport(scenario=cfg.name)
    sched, pot, src = cfg.damping, cfg.potential, cfg.source
    ht = build_h_table(sched, H_TABLE_FACTOR * cfg.t_end)
    x_star = np.array(pot.canonical_minimizer)
    accs = D.standard_accumulators(sched.alpha, cfg.velocity_nu)
    bank = D.AccumulatorBank(accs, sched, pot, src, ht, x_star)
    ctx = D.RunContext(sched, pot, src, ht, x_star, N_MINIMIZERS)
    try:
        samples = integrate(sched, pot, src, cfg.x0, cfg.v0, cfg.settings(), bank)
    except NumericFailure as exc:
        samples = list(getattr(exc, "samples", []))
        report.status = "aborted"
        report.last_t = float(exc.state.t) if exc.state is not None else (samples[-1].t if samples else 0.0)
        report.message = str(exc)
        log.warning("%s: aborted at t=%g: %s", cfg.name, report.last_t, exc)
    D.attach_lyapunov(samples, ht, pot, x_star)

    for tag in cfg.tags:
        if tag.kind == "EXPLORATORY":
            continue
        if report.status == "ok":
            verdict = D.combine(str(tag), _checks_for(tag, samples, ctx, cfg), cfg.exploratory)
        else:
            verdict = D.TheoremVerdict(str(tag), D.NA, [])
        report.verdicts.append(verdict)
    if report.status == "ok":
        report.last_t = float(samples[-1].t)
        _fill_measurements(report, samples, ctx, cfg, accs)
    report.wall_clock = time.perf_counter() - start
    if write:
        write_outputs(report, samples, ctx, out_dir)
    return ScenarioResult(report, samples, ctx)


def _fill_measurements(report, samples, ctx, cfg, accs):
    t, w = D.series(samples, "w")
    _, xs = D.positions(samples)
    report.exponent_fits.append(D.fit_power_law(t, w, "W"))
    report.exponent_fits.append(D.fit_power_law(t, np.linalg.norm(xs - ctx.x_star, axis=1), "dist_xstar"))
    for acc in accs:
        _, vals = D.series(samples, acc.name)
        entry = {"name": acc.name, "weight": acc.weight, "integrand": acc.integrand, "final": float(vals[-1])}
        if acc.nonnegative:
            flat = D.accumulator_flatness(t, vals, acc.name)
            entry.update(flatness=flat.statistic, finite=flat.passed)
        report.accumulators.append(entry)
    opial = D.opial_distance_check(t, xs, ctx.pot.minimizers(N_MINIMIZERS).points)
    report.oscillations = opial.details["minimizers"]
    report.cauchy_tail = D.cauchy_tail(t, xs, t[-1] / 10.0)
    report.invariants = _invariants(samples, cfg, accs)


# --------------------------------------------------------------------------
# output

def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_csv(samples, ctx) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(D.TRACE_COLUMNS)
    for row in D.trace_rows(samples, ctx):
        writer.writerow([repr(float(v)) for v in row])  # repr round-trips exactly
    return buf.getvalue()


def write_outputs(report, samples, ctx, out_dir=None):
    out = Path(out_dir) if out_dir is not None else default_out_dir()
    _atomic_write(out / f"{report.scenario}.trace.csv", trace_csv(samples, ctx))
    _atomic_write(out / f"{report.scenario}.report.json", json.dumps(report.to_dict(), indent=2) + "\n")


# --------------------------------------------------------------------------
# suites

@dataclass
class SuiteEntry:
    name: str
    status: str
    verdicts: dict
    wall_clock: float
    error: str = ""
    report: D.DiagnosticsReport | None = field(default=None, repr=False)

    @property
    def failed(self) -> bool:
        return self.status in ("aborted", "errored") or D.FAIL in self.verdicts.values()


@dataclass
class SuiteResult:
    entries: list
    warnings: list = field(default_factory=list)

    @property
    def counts(self) -> dict:
        out = {"scenarios": len(self.entries), "errored": 0, "aborted": 0}
        for key in (D.PASS, D.FAIL, D.NA, D.EXPLORATORY):
            out[key] = 0
        for e in self.entries:
            if e.status in ("errored", "aborted"):
                out[e.status] += 1
            for status in e.verdicts.values():
                out[status] += 1
        return out

    @property
    def exit_code(self) -> int:
        return int(any(e.failed for e in self.entries))

    def to_dict(self) -> dict:
        return {
            "scenarios": [
                {"name": e.name, "status": e.status, "verdicts": e.verdicts,
                 "wall_clock": e.wall_clock, "error": e.error}
                for e in self.entries
            ],
            "counts": self.counts,
            "exit_code": self.exit_code,
            "warnings": self.warnings,
        }


def _entry(report: D.DiagnosticsReport) -> SuiteEntry:
    return SuiteEntry(
        report.scenario, report.status, {v.tag: v.status for v in report.verdicts},
        report.wall_clock, report.message, report,
    )


def _run_doc(doc: dict, out_dir) -> D.DiagnosticsReport:
    # worker entry point: configs travel as plain documents
    return run_scenario(config_from_dict(doc), out_dir).report


def resolve_suite(items) -> tuple[list, list]:
    """Expand builtin names, files and directories into ``(configs, errored entries)``.

    A directory contributes its ``*.toml`` and ``*.json`` files.  Configs
    that fail to load become errored entries instead of aborting the suite.
    """
    configs, errors = [], []
    for item in items:
        if item in SUITES and not Path(item).exists():
            configs.extend(builtin_scenarios(item))
            continue
        path = Path(item)
        if path.is_dir():
            paths = sorted(p for p in path.iterdir() if p.suffix in (".toml", ".json"))
        else:
            paths = [path]
        for p in paths:
            try:
                configs.append(load_config(p))
            except (ConfigurationError, OSError) as exc:
                errors.append(SuiteEntry(p.stem, "errored", {}, 0.0, str(exc)))
    names = [c.name for c in configs]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ConfigurationError(f"duplicate scenario names in suite: {dupes}")
    return configs, errors


def run_suite(items, workers: int = 1, out_dir=None) -> SuiteResult:
    """Run every scenario named by ``items`` and write ``suite.summary.json``."""
    out = Path(out_dir) if out_dir is not None else default_out_dir()
    configs, entries = resolve_suite(items)
    warnings = []
    if not configs and not entries:
        warnings.append("suite is empty: nothing to run")
        log.warning(warnings[-1])
    if workers < 1:
        raise ConfigurationError("workers must be >= 1")
    docs = [c.to_dict() for c in configs]
    if workers == 1 or len(docs) <= 1:
        reports = [_safe_run(doc, out) for doc in docs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(docs))) as pool:
            futures = [pool.submit(_run_doc, doc, out) for doc in docs]
            reports = []
            for doc, fut in zip(docs, futures):
                try:
                    reports.append(fut.result())
                except Exception as exc:  # one scenario's crash must not sink the suite
                    reports.append(_errored(doc["name"], exc))
    entries.extend(_entry(r) if isinstance(r, D.DiagnosticsReport) else r for r in reports)
    entries.sort(key=lambda e: e.name)
    result = SuiteResult(entries, warnings)
    _atomic_write(out / "suite.summary.json", json.dumps(D._jsonable(result.to_dict()), indent=2) + "\n")
    return result


def _errored(name, exc) -> SuiteEntry:
    log.error("%s: %s", name, exc)
    return SuiteEntry(name, "errored", {}, 0.0, f"{type(exc).__name__}: {exc}")


def _safe_run(doc, out):
    try:
        return _run_doc(doc, out)
    except Exception as exc:
        return _errored(doc["name"], exc)


def report_lines(report: D.DiagnosticsReport) -> list[str]:
    """Human-readable verdict lines for the console."""
    lines = [f"{report.scenario}: {report.status} ({report.wall_clock:.1f}s)"]
    if report.status != "ok":
        lines.append(f"  last good t = {report.last_t:g}: {report.message}")
    for v in report.verdicts:
        lines.append(f"  {v.tag}: {v.status}")
        for c in v.checks:
            stat = "nan" if not math.isfinite(c.statistic) else f"{c.statistic:.4g}"
            lines.append(f"    {c.name}: {c.status} (statistic {stat}, threshold {c.threshold:g})")
    return lines
