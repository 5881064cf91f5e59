"""Experiment runner: build a problem, run a solver over seeds, write CSV
traces and a key=value summary, compare solvers, and sweep one parameter.

Output files per run directory::

    trace_<solver>_<seed>.csv       Iteration,GradNorm
    trace_full_<solver>_<seed>.csv  every IterationRecord field
    summary.txt                     key=value lines
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .data import LabelConvention, load_libsvm, map_labels, synthetic_classification
from .losses import LeastSquaresLoss, LogisticLoss, RidgeLoss
from .sketch import SketchKind
from .solvers import (IterationRecord, RunTrace, SubspaceConfig, TrConfig, sn_solve,
                      tltr_solve, tr_solve)

LOSSES = {"logistic": LogisticLoss, "ls": LeastSquaresLoss, "ridge": RidgeLoss}
SOLVERS = ("tr", "tltr", "sn")
SWEEP_PARAMS = ("ell", "ell_frac", "s", "s_frac", "stcg_cap")

# the desk-scale instance used by the acceptance checks
SYNTHETIC_DEFAULTS = {"n_samples": 500, "n_features": 50, "seed": 0,
                      "noise": 0.1, "scale_decay": 0.5}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    loss: str = "logistic"
    data: str | None = None  # LIBSVM path; None means the synthetic instance
    synthetic: dict = field(default_factory=lambda: dict(SYNTHETIC_DEFAULTS))
    lam: float | None = None
    n_features: int | None = None
    solver: str = "tltr"
    tr: TrConfig = field(default_factory=TrConfig)
    ell: int | None = None
    ell_frac: float | None = None
    sketch: str = "gaussian"
    s: int | None = None
    s_frac: float | None = None
    sub_stcg_cap: int | None = None
    alpha_max_backtracks: int = 10
    redraw_on_reject: bool = True
    subspace: bool = True
    armijo_c: float = 1e-4
    sn_backtracks: int = 50
    seeds: list[int] = field(default_factory=lambda: [0])
    out: str | None = None
    label: str | None = None

    def problem_key(self) -> tuple:
        src = (("data", os.path.abspath(self.data)) if self.data
               else ("synthetic", tuple(sorted(self.synthetic.items()))))
        return (self.loss, src, self.lam, self.n_features)

    def name(self) -> str:
        if self.label:
            return self.label
        parts = [self.solver]
        if self.solver != "sn":
            parts.append(self.tr.fine_solver)
        if self.solver in ("tltr", "sn") and self.subspace:
            parts.append(self.sketch)
        if self.solver == "tltr" and not self.subspace:
            parts.append("nosub")
        return "-".join(parts)


def validate(spec: ExperimentSpec, n: int) -> SubspaceConfig | None:
    """Resolve the subspace configuration against dimension ``n``.

    Raises ``ConfigError`` before any computation is done.
    """
    if spec.loss not in LOSSES:
        raise ConfigError(f"unknown loss {spec.loss!r}")
    if spec.solver not in SOLVERS:
        raise ConfigError(f"unknown solver {spec.solver!r}")
    if not spec.seeds:
        raise ConfigError("at least one seed is required")
    if spec.solver == "tr" or (spec.solver == "tltr" and not spec.subspace):
        return None
    if spec.ell is not None and spec.ell_frac is not None:
        raise ConfigError("give ell or ell_frac, not both")
    if spec.ell is not None:
        ell = spec.ell
    else:
        frac = 0.25 if spec.ell_frac is None else spec.ell_frac
        if not 0 < frac <= 1:
            raise ConfigError(f"ell_frac must lie in (0, 1], got {frac}")
        ell = max(1, math.ceil(frac * n))
    if not 1 <= ell <= n:
        raise ConfigError(f"subspace size ell={ell} must lie in [1, n={n}]")
    kind = SketchKind(spec.sketch)
    s = None
    if kind is SketchKind.SHASH:
        if spec.s is not None and spec.s_frac is not None:
            raise ConfigError("give s or s_frac, not both")
        if spec.s is not None:
            s = spec.s
        elif spec.s_frac is not None:
            s = max(1, math.ceil(spec.s_frac * ell))
        if s is not None and not 1 <= s <= ell:
            raise ConfigError(f"hashing parameter s={s} must lie in [1, ell={ell}]")
    try:
        return SubspaceConfig(ell=ell, kind=kind, s=s, stcg_cap=spec.sub_stcg_cap,
                              alpha_max_backtracks=spec.alpha_max_backtracks,
                              redraw_on_reject=spec.redraw_on_reject)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


@lru_cache(maxsize=8)
def _load_dataset(path, n_features, synthetic_items, convention):
    if path is None:
        d = synthetic_classification(**dict(synthetic_items))
    else:
        try:
            d = load_libsvm(path, n_features=n_features)
        except OSError as exc:
            raise ConfigError(f"cannot read dataset {path}: {exc}") from None
    return map_labels(d, convention)


def build_objective(spec: ExperimentSpec):
    if spec.loss not in LOSSES:
        raise ConfigError(f"unknown loss {spec.loss!r}")
    convention = (LabelConvention.ZERO_ONE if spec.loss == "ls"
                  else LabelConvention.PLUS_MINUS_ONE)
    d = _load_dataset(spec.data, spec.n_features,
                      tuple(sorted(spec.synthetic.items())), convention)
    return LOSSES[spec.loss](d, spec.lam)


def initial_guess(n: int, seed: int) -> np.ndarray:
    return 0.1 * np.random.default_rng(seed).standard_normal(n)


def run_seed(spec: ExperimentSpec, seed: int) -> RunTrace:
    obj = build_objective(spec)
    sub = validate(spec, obj.dimension)
    x0 = initial_guess(obj.dimension, seed)
    if spec.solver == "tr":
        trace = tr_solve(obj, x0, spec.tr)
    elif spec.solver == "tltr":
        trace = tltr_solve(obj, x0, spec.tr, sub, seed=seed)
    else:
        trace = sn_solve(obj, x0, sub, seed=seed, grad_tol=spec.tr.grad_tol,
                         max_iter=spec.tr.max_iter, armijo_c=spec.armijo_c,
                         max_backtracks=spec.sn_backtracks)
    trace.metadata.update(seed=seed, problem=spec.problem_key(), spec=spec.name())
    return trace


@dataclass(frozen=True)
class CostLedger:
    n_f: int
    n_grad: int
    n_hessvec: int
    n_sketch: int
    per_iteration: tuple[tuple[int, int, int, int], ...]


def cost_ledger(trace: RunTrace, start=(1, 1, 0, 0)) -> CostLedger:
    """Cumulative evaluation counts and their per-iteration increments.

    ``start`` is the count before the first iteration (one value and one
    gradient at ``x0``).
    """
    prev = start
    deltas = []
    for r in trace.records:
        cur = (r.n_f, r.n_grad, r.n_hessvec, r.n_sketch)
        deltas.append(tuple(c - p for c, p in zip(cur, prev)))
        prev = cur
    return CostLedger(*prev, tuple(deltas))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


_FULL_FIELDS = ["Iteration"] + [f.name for f in dataclasses.fields(IterationRecord)]


def trace_csv(trace: RunTrace) -> str:
    """``Iteration,GradNorm``; row 0 is the starting point."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["Iteration", "GradNorm"])
    w.writerow([0, _fmt(trace.grad_norm0)])
    for r in trace.records:
        w.writerow([r.k + 1, _fmt(r.grad_norm)])
    return buf.getvalue()


def full_trace_csv(trace: RunTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_FULL_FIELDS)
    nan = math.nan
    w.writerow([0, -1, _fmt(trace.f0), _fmt(trace.grad_norm0)]
               + [_fmt(v) for v in (nan, nan, nan, True, False, 0.0, 0.0, 0.0, 0.0,
                                    1, 1, 0, 0, False)])
    for r in trace.records:
        w.writerow([r.k + 1] + [_fmt(getattr(r, f)) for f in _FULL_FIELDS[1:]])
    return buf.getvalue()


@dataclass
class SeedResult:
    seed: int
    iterations: int
    terminated_by: str
    final_f: float
    final_grad_norm: float
    ledger: CostLedger


@dataclass
class RunSummary:
    spec: ExperimentSpec
    results: list[SeedResult]
    traces: list[RunTrace] = field(default_factory=list, repr=False)

    def iterations(self) -> list[int]:
        return [r.iterations for r in self.results]

    def median_iterations(self) -> float:
        return float(statistics.median(self.iterations()))

    def to_text(self) -> str:
        spec = self.spec
        lines = [f"solver={spec.solver}", f"name={spec.name()}", f"loss={spec.loss}",
                 f"data={spec.data or 'synthetic'}",
                 f"seeds={','.join(str(s) for s in spec.seeds)}"]
        for r in self.results:
            p = f"seed.{r.seed}."
            lines += [p + f"iterations={r.iterations}",
                      p + f"terminated_by={r.terminated_by}",
                      p + f"final_f={_fmt(r.final_f)}",
                      p + f"final_grad_norm={_fmt(r.final_grad_norm)}",
                      p + f"n_f={r.ledger.n_f}", p + f"n_grad={r.ledger.n_grad}",
                      p + f"n_hessvec={r.ledger.n_hessvec}",
                      p + f"n_sketch={r.ledger.n_sketch}"]
        its = self.iterations()
        lines += [f"median_iterations={_fmt(self.median_iterations())}",
                  f"min_iterations={min(its)}", f"max_iterations={max(its)}",
                  f"converged={sum(r.terminated_by == 'GradTol' for r in self.results)}"]
        return "\n".join(lines) + "\n"


def parse_summary(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            out[key] = value
    return out


def _result(seed, trace) -> SeedResult:
    return SeedResult(seed, trace.iterations, trace.terminated_by.value,
                      trace.final_f, trace.final_grad_norm, cost_ledger(trace))


def run(spec: ExperimentSpec, jobs: int = 1, keep_traces: bool = False) -> RunSummary:
    """Run every seed of ``spec``; write traces and summary if ``spec.out``."""
    obj = build_objective(spec)
    validate(spec, obj.dimension)
    if jobs > 1 and len(spec.seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(run_seed, [spec] * len(spec.seeds), spec.seeds))
    else:
        traces = [run_seed(spec, s) for s in spec.seeds]
    summary = RunSummary(spec, [_result(s, t) for s, t in zip(spec.seeds, traces)],
                         traces if keep_traces else [])
    if spec.out:
        out = Path(spec.out)
        out.mkdir(parents=True, exist_ok=True)
        tag = spec.label or spec.solver
        for seed, trace in zip(spec.seeds, traces):
            (out / f"trace_{tag}_{seed}.csv").write_text(trace_csv(trace))
            (out / f"trace_full_{tag}_{seed}.csv").write_text(full_trace_csv(trace))
        (out / "summary.txt").write_text(summary.to_text())
    return summary


@dataclass
class ComparisonTable:
    rows: list[dict]

    def format(self) -> str:
        cols = ["name", "median_its", "min_its", "max_its", "converged",
                "median_n_f", "median_n_grad", "median_n_hessvec"]
        table = [cols] + [[_cell(row[c]) for c in cols] for row in self.rows]
        widths = [max(len(r[i]) for r in table) for i in range(len(cols))]
        return "\n".join("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip()
                         for r in table) + "\n"


def _cell(v):
    return f"{v:g}" if isinstance(v, float) else str(v)


def _row(summary: RunSummary) -> dict:
    res = summary.results
    its = summary.iterations()
    med = lambda xs: float(statistics.median(xs))  # noqa: E731
    return {"name": summary.spec.name(), "median_its": med(its), "min_its": min(its),
            "max_its": max(its),
            "converged": sum(r.terminated_by == "GradTol" for r in res),
            "median_n_f": med([r.ledger.n_f for r in res]),
            "median_n_grad": med([r.ledger.n_grad for r in res]),
            "median_n_hessvec": med([r.ledger.n_hessvec for r in res]),
            "iterations": its}


def compare(specs: list[ExperimentSpec], jobs: int = 1) -> ComparisonTable:
    if len(specs) < 2:
        raise ConfigError("compare needs at least two experiment specs")
    keys = {s.problem_key() for s in specs}
    if len(keys) != 1:
        raise ConfigError("compare needs all specs to share one problem")
    rows = []
    for spec in specs:
        rows.append(_row(run(spec, jobs=jobs)))
    return ComparisonTable(rows)


@dataclass
class SweepRow:
    param: str
    value: float
    summary: RunSummary | None
    error: str | None = None

    def format(self) -> str:
        if self.error:
            return f"{self.param}={_cell(self.value)}  error: {self.error}"
        s = self.summary
        its = s.iterations()
        return (f"{self.param}={_cell(self.value)}  median_its={_cell(s.median_iterations())}"
                f"  min_its={min(its)}  max_its={max(its)}")


def sweep(base: ExperimentSpec, param: str, values, jobs: int = 1) -> list[SweepRow]:
    """One run per value of ``param``; invalid values give an error row."""
    param = param.replace("-", "_")
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"cannot sweep {param!r}; choose from {SWEEP_PARAMS}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    rows = []
    for v in values:
        changes = {param: v}
        if param == "ell":
            changes["ell_frac"] = None
        elif param == "ell_frac":
            changes["ell"] = None
        elif param == "s":
            changes["s_frac"] = None
        elif param == "s_frac":
            changes["s"] = None
        try:
            if param == "stcg_cap":
                spec = dataclasses.replace(
                    base, tr=dataclasses.replace(base.tr, stcg_cap=v))
            else:
                spec = dataclasses.replace(base, **changes)
            if base.out:
                spec = dataclasses.replace(spec, out=str(Path(base.out) / f"{param}_{v}"))
            rows.append(SweepRow(param, v, run(spec, jobs=jobs)))
        except ValueError as exc:
            rows.append(SweepRow(param, v, None, str(exc)))
    if base.out:
        Path(base.out).mkdir(parents=True, exist_ok=True)
        (Path(base.out) / "sweep.txt").write_text(
            "\n".join(r.format() for r in rows) + "\n")
    return rows
