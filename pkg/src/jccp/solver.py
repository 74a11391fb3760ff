"""Smooth inequality-constrained NLP solver.

Augmented Lagrangian outer loop (squared-hinge treatment of g(z) <= 0)
around a projected limited-memory quasi-Newton inner solver on box
bounds. First-order, derivative-based, deterministic: identical inputs
and seed give bit-identical output on one platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .problem import Solution


class EvaluationError(RuntimeError):
    """A user callback returned NaN/Inf."""


@dataclass
class Nlp:
    """Generic smooth program: min cost(z) s.t. ineq(z) <= 0, lower <= z <= upper.

    cost(z) -> (value, gradient); ineq(z) -> (residuals, jacobian).
    ineq_residual is an optional cheaper residual-only path used by line
    searches; split maps a decision vector to (x, named slacks) for
    reporting.
    """

    dim: int
    cost: Callable[[np.ndarray], tuple[float, np.ndarray]]
    ineq: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    lower: np.ndarray
    upper: np.ndarray
    ineq_residual: Callable[[np.ndarray], np.ndarray] | None = None
    split: Callable[[np.ndarray], tuple[np.ndarray, dict]] | None = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.ineq_residual is None:
            self.ineq_residual = lambda z: self.ineq(z)[0]
        if self.split is None:
            self.split = lambda z: (z.copy(), {})


@dataclass
class SolverOptions:
    kkt_tol: float = 1e-6
    cons_tol: float = 1e-8
    max_outer: int = 50
    max_inner: int = 500
    multistart_count: int = 5
    seed: int = 42
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    viol_decrease: float = 0.25
    lbfgs_memory: int = 10

    def __post_init__(self):
        for name in ("kkt_tol", "cons_tol", "penalty_init", "penalty_growth",
                     "viol_decrease"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class OuterRecord:
    cost: float
    max_violation: float
    penalty: float
    inner_iterations: int
    accepted: bool


@dataclass
class SolveTrace:
    records: list[OuterRecord] = field(default_factory=list)


def _check_finite_cost(value, grad):
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise EvaluationError("cost returned a non-finite value")


def _check_finite_ineq(res, jac=None):
    bad = np.flatnonzero(~np.isfinite(res))
    if bad.size:
        raise EvaluationError(f"constraint {bad[0]} returned a non-finite residual")
    if jac is not None and not np.all(np.isfinite(jac)):
        bad = np.flatnonzero(~np.isfinite(jac).all(axis=1))
        raise EvaluationError(f"constraint {bad[0]} returned a non-finite jacobian")


def _two_loop(g, pairs):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def _lbfgs_box(value_grad, value_only, z0, lower, upper, tol, max_iter, memory):
    """Projected L-BFGS with Armijo backtracking on the projected path.

    tol is an absolute bound on the projected-gradient infinity norm.
    Curvature-guarded memory updates stand in for the Wolfe condition when
    the projection bends the search path. Returns (z, iterations).
    """
    z = np.clip(z0, lower, upper)
    f, g = value_grad(z)
    pairs: list[tuple[np.ndarray, np.ndarray, float]] = []
    iters = 0
    for it in range(max_iter):
        iters = it + 1
        pg = z - np.clip(z - g, lower, upper)
        if np.max(np.abs(pg)) <= tol:
            break

        at_lo = (z - lower) <= 1e-11
        at_hi = (upper - z) <= 1e-11
        active = (at_lo & (g > 0)) | (at_hi & (g < 0))
        g_free = np.where(active, 0.0, g)
        steepest = not pairs
        d = -_two_loop(g_free, pairs)
        d[active] = 0.0
        if d @ g > -1e-14 * (np.linalg.norm(d) * np.linalg.norm(g) + 1e-300):
            pairs.clear()
            steepest = True
            d = -g_free

        # Unit natural step for quasi-Newton directions; gradient steps are
        # capped so the first trial does not overshoot wildly.
        alpha = 1.0 if not steepest else min(1.0, 1.0 / max(np.max(np.abs(d)), 1e-12))
        z_new = None
        for _ in range(70):
            trial = np.clip(z + alpha * d, lower, upper)
            step = trial - z
            decr = g @ step
            if decr < -1e-300 and value_only(trial) <= f + 1e-4 * decr:
                z_new = trial
                break
            alpha *= 0.5
        if z_new is None:
            if pairs:
                pairs.clear()  # retry from steepest descent next pass
                continue
            break  # stalled

        f_new, g_new = value_grad(z_new)
        s = z_new - z
        y = g_new - g
        sy = s @ y
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
            if len(pairs) > memory:
                pairs.pop(0)
        z, f, g = z_new, f_new, g_new
    return z, iters


def _kkt_residual(nlp, z, grad_f, res, jac, mu):
    lag_grad = grad_f if mu.size == 0 else grad_f + jac.T @ mu
    pg = z - np.clip(z - lag_grad, nlp.lower, nlp.upper)
    stat = np.max(np.abs(pg)) / (1.0 + np.max(np.abs(grad_f)))
    comp = 0.0
    if mu.size:
        comp = float(np.max(np.abs(mu * res)) / (1.0 + np.max(mu)))
    return max(float(stat), comp)


def solve(nlp: Nlp, z0, opts: SolverOptions | None = None):
    """Minimize an Nlp from z0; returns (Solution, SolveTrace).

    The objective is scaled internally by the gradient magnitude at the
    start (reported costs are unscaled); kkt_residual and the convergence
    test live in that scaled space. status is 'converged' only when the
    KKT residual is below kkt_tol and the worst constraint violation
    below cons_tol; 'infeasible_detected' when the penalty has grown past
    1e14 with the violation still above tolerance; 'max_iter' otherwise.
    The best point found (feasible and lowest cost, else least violating)
    is returned in all cases.
    """
    if opts is None:
        opts = SolverOptions()
    z = np.clip(np.asarray(z0, dtype=float).copy(), nlp.lower, nlp.upper)

    f0, g0 = nlp.cost(z)
    _check_finite_cost(f0, g0)
    obj_scale = max(1.0, float(np.max(np.abs(g0))))
    res0 = nlp.ineq_residual(z)
    n_ineq = res0.shape[0]
    mu = np.zeros(n_ineq)
    rho = opts.penalty_init
    omega = max(1e-2, opts.kkt_tol)
    trace = SolveTrace()
    status = "max_iter"
    best_viol = np.inf
    best = None  # (violation > cons_tol, cost, z, kkt, viol)

    for _ in range(opts.max_outer):
        mu_loc, rho_loc = mu, rho

        def al_value_grad(zz):
            f, gf = nlp.cost(zz)
            _check_finite_cost(f, gf)
            f, gf = f / obj_scale, gf / obj_scale
            if n_ineq == 0:
                return f, gf
            r, jac = nlp.ineq(zz)
            _check_finite_ineq(r, jac)
            t = np.maximum(mu_loc + rho_loc * r, 0.0)
            val = f + (t @ t - mu_loc @ mu_loc) / (2.0 * rho_loc)
            return val, gf + jac.T @ t

        def al_value(zz):
            f, gf = nlp.cost(zz)
            _check_finite_cost(f, gf)
            f = f / obj_scale
            if n_ineq == 0:
                return f
            r = nlp.ineq_residual(zz)
            _check_finite_ineq(r)
            t = np.maximum(mu_loc + rho_loc * r, 0.0)
            return f + (t @ t - mu_loc @ mu_loc) / (2.0 * rho_loc)

        z, inner_iters = _lbfgs_box(al_value_grad, al_value, z, nlp.lower,
                                    nlp.upper, omega, opts.max_inner,
                                    opts.lbfgs_memory)

        f, gf = nlp.cost(z)
        if n_ineq:
            r, jac = nlp.ineq(z)
            viol = float(np.max(np.maximum(r, 0.0)))
        else:
            r = np.zeros(0)
            jac = np.zeros((0, nlp.dim))
            viol = 0.0
        mu_next = np.maximum(mu + rho * r, 0.0)
        kkt = _kkt_residual(nlp, z, gf / obj_scale, r, jac, mu_next)

        accepted = viol <= best_viol + 1e-15
        trace.records.append(OuterRecord(cost=f, max_violation=viol,
                                         penalty=rho,
                                         inner_iterations=inner_iters,
                                         accepted=accepted))
        key = (viol > opts.cons_tol, viol if viol > opts.cons_tol else f)
        if best is None or key < best[0]:
            best = (key, z.copy(), f, kkt, viol)

        if viol <= opts.cons_tol and kkt <= opts.kkt_tol:
            status = "converged"
            break
        if viol <= max(opts.cons_tol, opts.viol_decrease * best_viol):
            mu = mu_next
            omega = max(0.2 * omega, 0.1 * opts.kkt_tol)
        else:
            rho *= opts.penalty_growth
            omega = max(0.5 * omega, 0.1 * opts.kkt_tol)
        best_viol = min(best_viol, viol)
        if rho > 1e14:
            if viol > opts.cons_tol:
                status = "infeasible_detected"
            break

    if status == "converged":
        z_out, f_out, kkt_out, viol_out = z, f, kkt, viol
    else:
        _, z_out, f_out, kkt_out, viol_out = best
    x, slacks = nlp.split(z_out)
    sol = Solution(x=x, slacks=slacks, cost_value=float(f_out),
                   kkt_residual=float(kkt_out),
                   constraint_violation=float(viol_out), status=status)
    return sol, trace


def multistart_solve(nlp: Nlp, z0, opts: SolverOptions | None = None) -> Solution:
    """solve() from the canonical start plus seeded perturbations.

    Box-bounded coordinates (the slack block) are jittered within their
    bounds by up to 10% of the box width; unbounded coordinates by +/-10%
    of their start value, or +/-0.1 when starting at zero. Returns the
    lowest-cost converged solution, else the least-violating point; ties
    go to the earliest start.
    """
    if opts is None:
        opts = SolverOptions()
    if opts.multistart_count < 1:
        raise ValueError("multistart_count must be >= 1")
    z0 = np.asarray(z0, dtype=float)
    rng = np.random.default_rng(opts.seed)
    boxed = np.isfinite(nlp.lower) & np.isfinite(nlp.upper)

    starts = [z0.copy()]
    for _ in range(opts.multistart_count - 1):
        u = rng.uniform(-1.0, 1.0, size=nlp.dim)
        zk = z0.copy()
        if boxed.any():
            width = nlp.upper[boxed] - nlp.lower[boxed]
            zk[boxed] = np.clip(z0[boxed] + 0.1 * width * u[boxed],
                                nlp.lower[boxed], nlp.upper[boxed])
        free = ~boxed
        base = z0[free]
        zk[free] = np.where(base != 0.0, base * (1.0 + 0.1 * u[free]),
                            0.1 * u[free])
        starts.append(zk)

    best = None
    for zk in starts:
        sol, _ = solve(nlp, zk, opts)
        key = (sol.status != "converged",
               sol.cost_value if sol.status == "converged"
               else sol.constraint_violation)
        if best is None or key < best[0]:
            best = (key, sol)
    return best[1]


def check_gradients(nlp: Nlp, z, h: float = 1e-6) -> float:
    """Max relative error of analytic derivatives vs central differences.

    Compares the cost gradient and every constraint-Jacobian column at z,
    which must be interior to the box by at least h.
    """
    z = np.asarray(z, dtype=float)
    _, grad = nlp.cost(z)
    _, jac = nlp.ineq(z)
    worst = 0.0
    for i in range(nlp.dim):
        zp = z.copy()
        zp[i] += h
        zm = z.copy()
        zm[i] -= h
        fd_g = (nlp.cost(zp)[0] - nlp.cost(zm)[0]) / (2.0 * h)
        worst = max(worst, abs(grad[i] - fd_g) / max(1.0, abs(fd_g)))
        fd_col = (nlp.ineq_residual(zp) - nlp.ineq_residual(zm)) / (2.0 * h)
        if fd_col.size:
            err = np.abs(jac[:, i] - fd_col) / np.maximum(1.0, np.abs(fd_col))
            worst = max(worst, float(np.max(err)))
    return worst
