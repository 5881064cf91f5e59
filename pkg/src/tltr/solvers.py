"""Trust-region drivers: classical TR, two-level TR with a random sketched
subspace step (TLTR), and the sketched Newton baseline (SN).

All three return a ``RunTrace``. Record ``k`` describes iteration ``k``: the
radius it used, its ratio and acceptance, and the state *after* it (``f``
and ``grad_norm`` at ``x_{k+1}``). The starting point lives on the trace.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .qp import QuadraticModel, cauchy_point, steihaug_toint
from .sketch import SketchKind, SketchOperator, default_s, draw_sketch, sketch_hessian, sketch_rng

REJECT = -math.inf


class Termination(enum.Enum):
    GRAD_TOL = "GradTol"
    MAX_ITER = "MaxIter"


@dataclass
class TrConfig:
    delta0: float = 1.0
    delta_max: float = 1e6
    eta1: float = 0.1
    eta2: float = 0.75
    gamma1: float = 0.25
    gamma2: float = 0.5
    grow: float = 2.0
    grad_tol: float = 1e-7
    max_iter: int = 1000
    fine_solver: str = "stcg"  # "cp" or "stcg"
    stcg_cap: int = 2
    fine_rtol: float = 1e-6

    def __post_init__(self):
        if not 0 < self.eta1 <= self.eta2 < 1:
            raise ValueError("need 0 < eta1 <= eta2 < 1")
        if not 0 < self.gamma1 <= self.gamma2 < 1:
            raise ValueError("need 0 < gamma1 <= gamma2 < 1")
        if not self.grow > 1:
            raise ValueError("grow must exceed 1")
        if not 0 < self.delta0 <= self.delta_max:
            raise ValueError("need 0 < delta0 <= delta_max")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if self.fine_solver not in ("cp", "stcg"):
            raise ValueError(f"unknown fine solver {self.fine_solver!r}")
        if self.stcg_cap < 1:
            raise ValueError("stcg_cap must be >= 1")


@dataclass
class SubspaceConfig:
    ell: int
    kind: SketchKind = SketchKind.GAUSSIAN
    s: int | None = None
    stcg_cap: int | None = None  # None: ell iterations
    stcg_rtol: float = 1e-10
    alpha_max_backtracks: int = 10
    redraw_on_reject: bool = True

    def __post_init__(self):
        self.kind = SketchKind(self.kind)
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        if self.kind is SketchKind.SHASH:
            if self.s is None:
                self.s = default_s(self.ell)
            if not 1 <= self.s <= self.ell:
                raise ValueError(f"need 1 <= s <= ell, got s={self.s}, ell={self.ell}")


@dataclass(frozen=True)
class IterationRecord:
    k: int
    f: float
    grad_norm: float
    delta: float
    rho: float
    rho_tr: float
    accepted: bool
    subspace_used: bool
    alpha: float
    fine_step_norm: float
    sub_step_norm: float
    reduction: float
    n_f: int
    n_grad: int
    n_hessvec: int
    n_sketch: int
    fallback: bool = False


@dataclass
class RunTrace:
    records: list[IterationRecord]
    terminated_by: Termination
    final_x: np.ndarray
    f0: float
    grad_norm0: float
    metadata: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final_f(self) -> float:
        return self.records[-1].f if self.records else self.f0

    @property
    def final_grad_norm(self) -> float:
        return self.records[-1].grad_norm if self.records else self.grad_norm0

    @property
    def converged(self) -> bool:
        return self.terminated_by is Termination.GRAD_TOL


class LineSearchResult(NamedTuple):
    alpha: float
    ok: bool
    f_value: float
    reduction: float  # f(x_half) - f_value


def line_search_alpha(obj, x_half, d, max_backtracks: int = 10,
                      f_half: float | None = None) -> LineSearchResult:
    """First alpha in 1, 1/2, 1/4, ... with f(x_half + alpha d) < f(x_half).

    At most ``max_backtracks`` halvings after alpha = 1. The comparison uses
    the objective's accurate step reduction. On failure returns ``ok=False``
    with ``f_value = f(x_half)``.
    """
    if f_half is None:
        f_half = obj.value(x_half)
    alpha = 1.0
    for _ in range(max_backtracks + 1):
        f_new, drop = obj.step_value(x_half, alpha * d, f_half)
        if drop > 0.0:
            return LineSearchResult(alpha, True, f_new, drop)
        alpha *= 0.5
    return LineSearchResult(0.0, False, f_half, 0.0)


def _ratio(actual: float, predicted: float) -> float:
    if not (math.isfinite(actual) and math.isfinite(predicted)) or predicted <= 0.0:
        return REJECT
    return actual / predicted


def composite_rho(f_k: float, f_trial: float, model_decrease: float,
                  f_half: float, f_after_sub: float) -> float:
    """Actual over predicted reduction, where the prediction is the model
    decrease of the fine step plus the measured gain of the subspace step.

    Non-positive or non-finite denominators return ``REJECT`` (minus
    infinity).
    """
    return _ratio(f_k - f_trial, model_decrease + (f_half - f_after_sub))


def rho_from_reductions(fine_reduction: float, sub_reduction: float,
                        model_decrease: float) -> float:
    """``composite_rho`` written in terms of the two measured reductions
    ``f(x_k) - f(x_half)`` and ``f(x_half) - f(x_trial)``."""
    return _ratio(fine_reduction + sub_reduction, model_decrease + sub_reduction)


def radius_update(rho: float, delta: float, cfg: TrConfig) -> float:
    if rho >= cfg.eta2:
        return min(cfg.grow * delta, cfg.delta_max)
    if rho >= cfg.eta1:
        return cfg.gamma2 * delta
    return cfg.gamma1 * delta


def _start(obj, x0):
    x = np.array(x0, dtype=float)
    if x.shape != (obj.dimension,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({obj.dimension},)")
    f = obj.value(x)
    g = obj.gradient(x)
    if not (math.isfinite(f) and np.all(np.isfinite(g))):
        raise ValueError("objective or gradient is not finite at x0")
    return x, f, g


def _fine_step(obj, x, f, g, delta, cfg: TrConfig):
    model = QuadraticModel(g, lambda v: obj.hess_vec(x, v), delta, f)
    if cfg.fine_solver == "cp":
        return cauchy_point(model)
    return steihaug_toint(model, rtol=cfg.fine_rtol, max_iter=cfg.stcg_cap)


def _record(obj, k, f, gnorm, delta, rho, rho_tr, accepted, used, alpha,
            pf_norm, ps_norm, reduction, n_sketch, fallback=False):
    c = obj.eval_counters
    return IterationRecord(k, f, gnorm, delta, rho, rho_tr, accepted, used, alpha,
                           pf_norm, ps_norm, reduction, c.n_f, c.n_grad, c.n_hessvec,
                           n_sketch, fallback)


def tr_solve(obj, x0, cfg: TrConfig | None = None) -> RunTrace:
    """Classical trust-region method on the second-order Taylor model."""
    cfg = cfg or TrConfig()
    x, f, g = _start(obj, x0)
    f0, gnorm = f, float(np.linalg.norm(g))
    gnorm0 = gnorm
    delta = cfg.delta0
    records = []
    for k in range(cfg.max_iter):
        if gnorm < cfg.grad_tol:
            break
        step = _fine_step(obj, x, f, g, delta, cfg)
        x_trial = x + step.p
        f_trial, drop = obj.step_value(x, step.p, f)
        rho = _ratio(drop, step.model_decrease)
        accepted = rho > cfg.eta1
        delta_k = delta
        delta = radius_update(rho, delta, cfg)
        if accepted:
            x, f = x_trial, f_trial
            g = obj.gradient(x)
            gnorm = float(np.linalg.norm(g))
        records.append(_record(obj, k, f, gnorm, delta_k, rho, rho, accepted, False,
                               0.0, float(np.linalg.norm(step.p)), 0.0,
                               drop if accepted else 0.0, 0))
    term = Termination.GRAD_TOL if gnorm < cfg.grad_tol else Termination.MAX_ITER
    return RunTrace(records, term, x, f0, gnorm0,
                    {"solver": "tr", "config": asdict(cfg)})


def tltr_solve(obj, x0, cfg: TrConfig | None = None,
               sub: SubspaceConfig | None = None, seed: int = 0) -> RunTrace:
    """Two-level trust region: a cheap fine step followed by an accurately
    solved sketched step at the intermediate point, judged jointly.

    ``sub=None`` switches the subspace step off, which reduces the method to
    ``tr_solve``.
    """
    cfg = cfg or TrConfig()
    n = obj.dimension
    if sub is not None and sub.ell > n:
        raise ValueError(f"subspace size ell={sub.ell} exceeds dimension n={n}")
    x, f, g = _start(obj, x0)
    f0, gnorm = f, float(np.linalg.norm(g))
    gnorm0 = gnorm
    delta = cfg.delta0
    records = []
    S: SketchOperator | None = None
    n_sketch = 0
    accepted = True
    for k in range(cfg.max_iter):
        if gnorm < cfg.grad_tol:
            break
        step = _fine_step(obj, x, f, g, delta, cfg)
        x_half = x + step.p
        f_half, drop_fine = obj.step_value(x, step.p, f)
        rho_tr = _ratio(drop_fine, step.model_decrease)

        used = False
        alpha = 0.0
        ps_norm = 0.0
        g_half = None
        x_trial, f_after, drop_sub = x_half, f_half, 0.0
        if sub is not None:
            if S is None or sub.redraw_on_reject or accepted:
                S = draw_sketch(sub.kind, sub.ell, n, sketch_rng(seed, k), sub.s)
                n_sketch += 1
            g_half = obj.gradient(x_half)
            gs = S.apply(g_half)
            if np.any(gs != 0.0):
                hs = sketch_hessian(S, obj, x_half)
                sub_model = QuadraticModel.from_matrix(gs, hs, delta, f_half)
                ps = steihaug_toint(sub_model, rtol=sub.stcg_rtol,
                                    max_iter=sub.stcg_cap or sub.ell).p
                d = S.apply_transpose(ps)
                ls = line_search_alpha(obj, x_half, d, sub.alpha_max_backtracks, f_half)
                if ls.ok:
                    used = True
                    alpha = ls.alpha
                    ps_norm = float(np.linalg.norm(ps))
                    x_trial, f_after = x_half + alpha * d, ls.f_value
                    drop_sub = ls.reduction

        rho = rho_from_reductions(drop_fine, drop_sub, step.model_decrease)
        accepted = rho > cfg.eta1
        delta_k = delta
        delta = radius_update(rho, delta, cfg)
        if accepted:
            x, f = x_trial, f_after
            g = g_half if (g_half is not None and not used) else obj.gradient(x)
            gnorm = float(np.linalg.norm(g))
        records.append(_record(obj, k, f, gnorm, delta_k, rho, rho_tr, accepted, used,
                               alpha, float(np.linalg.norm(step.p)), ps_norm,
                               drop_fine + drop_sub if accepted else 0.0, n_sketch))
    term = Termination.GRAD_TOL if gnorm < cfg.grad_tol else Termination.MAX_ITER
    meta = {"solver": "tltr", "seed": seed, "config": asdict(cfg),
            "subspace": None if sub is None else asdict(sub)}
    return RunTrace(records, term, x, f0, gnorm0, meta)


def sketched_newton_direction(S: SketchOperator, gs, hs):
    """Full-space direction S^T q with ``hs q = -gs`` solved by Cholesky.

    Falls back to the sketched steepest descent ``-S^T gs`` when ``hs`` is
    not numerically positive definite or ``q`` is not a descent direction.
    Returns ``(d, fallback)``.
    """
    ell = gs.shape[0]
    q = None
    try:
        c, low = scipy.linalg.cho_factor(hs)
        diag = np.abs(np.diag(c))
        if diag.min() ** 2 > ell * np.finfo(float).eps * diag.max() ** 2:
            q = scipy.linalg.cho_solve((c, low), -gs)
    except (np.linalg.LinAlgError, ValueError):
        q = None
    if q is None or not np.all(np.isfinite(q)) or gs @ q >= 0.0:
        return S.apply_transpose(-gs), True
    return S.apply_transpose(q), False


def sn_solve(obj, x0, sub: SubspaceConfig, seed: int = 0, grad_tol: float = 1e-7,
             max_iter: int = 1000, armijo_c: float = 1e-4,
             max_backtracks: int = 50) -> RunTrace:
    """Newton's method restricted to a fresh sketched subspace each
    iteration, globalized by Armijo backtracking (halving)."""
    n = obj.dimension
    if sub.ell > n:
        raise ValueError(f"subspace size ell={sub.ell} exceeds dimension n={n}")
    x, f, g = _start(obj, x0)
    f0, gnorm = f, float(np.linalg.norm(g))
    gnorm0 = gnorm
    records = []
    for k in range(max_iter):
        if gnorm < grad_tol:
            break
        S = draw_sketch(sub.kind, sub.ell, n, sketch_rng(seed, k), sub.s)
        gs = S.apply(g)
        accepted = False
        alpha = 0.0
        fallback = False
        d_norm = 0.0
        drop = 0.0
        if np.any(gs != 0.0):
            hs = sketch_hessian(S, obj, x)
            d, fallback = sketched_newton_direction(S, gs, hs)
            slope = g @ d
            d_norm = float(np.linalg.norm(d))
            a = 1.0
            for _ in range(max_backtracks + 1):
                f_trial, drop = obj.step_value(x, a * d, f)
                if drop >= -armijo_c * a * slope and drop > 0.0:
                    accepted, alpha = True, a
                    x_trial = x + a * d
                    break
                a *= 0.5
        if accepted:
            x, f = x_trial, f_trial
            g = obj.gradient(x)
            gnorm = float(np.linalg.norm(g))
        records.append(_record(obj, k, f, gnorm, math.nan, math.nan, math.nan,
                               accepted, True, alpha, 0.0, alpha * d_norm,
                               drop if accepted else 0.0, k + 1, fallback))
    term = Termination.GRAD_TOL if gnorm < grad_tol else Termination.MAX_ITER
    meta = {"solver": "sn", "seed": seed, "subspace": asdict(sub),
            "grad_tol": grad_tol, "max_iter": max_iter}
    return RunTrace(records, term, x, f0, gnorm0, meta)
