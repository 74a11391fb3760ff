"""Risk-allocation baseline via the union bound.

Splits the total violation budget 1 - beta across the individual
constraint rows: one slack probability per row, a linear budget
constraint on the slacks, and per-row deterministic constraints that
back each row off its bound by the matching Gaussian quantile. Serves
as the comparison baseline for the spectral approximation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import erf_inv
from .problem import FeasibilityReport, JccpProblem
from .solver import Nlp
from .spectral import EPS_SLACK

_SQRT_PI = 1.7724538509055160273
_SQRT_2 = 1.4142135623730951


@dataclass(frozen=True)
class BooleNlp:
    """Risk-allocation program.

    Decision vector: [x (n_x), beta_i (n_m)].
    Constraints (g <= 0): [budget sum(1 - beta_i) <= 1 - beta (1),
    per-row deterministic constraints (n_m)].
    Slack box: [EPS_SLACK, 1 - EPS_SLACK].
    """

    base: JccpProblem
    row_std: np.ndarray  # sqrt(M_i Sigma M_i')

    @property
    def n_x(self) -> int:
        return self.base.n_x

    @property
    def n_m(self) -> int:
        return self.base.n_m

    @property
    def dim(self) -> int:
        return self.n_x + self.n_m

    @property
    def n_constraints(self) -> int:
        return 1 + self.n_m

    def split(self, z):
        return np.asarray(z[:self.n_x]), np.asarray(z[self.n_x:])


def build_boole_nlp(p: JccpProblem) -> BooleNlp:
    """Assemble the baseline; works on raw (M, m), no normalization needed."""
    var = np.sum((p.M @ p.sigma.entries) * p.M, axis=1)
    row_std = np.sqrt(np.maximum(var, 0.0))  # PSD roundoff can dip below 0
    return BooleNlp(base=p, row_std=row_std)


def eval_boole_constraints(nlp: BooleNlp, z) -> np.ndarray:
    """Residual vector g(z) <= 0: budget row then deterministic rows."""
    x, b = nlp.split(z)
    base = nlp.base
    g_budget = float(np.sum(1.0 - b) - (1.0 - base.beta))
    e = erf_inv(2.0 * b - 1.0)
    g_rows = base.M @ base.mean.eval(x) - base.m + _SQRT_2 * nlp.row_std * e
    return np.concatenate(([g_budget], g_rows))


def eval_boole_jacobian(nlp: BooleNlp, z) -> np.ndarray:
    return _constraints_with_jacobian(nlp, z)[1]


def _constraints_with_jacobian(nlp: BooleNlp, z):
    x, b = nlp.split(z)
    base = nlp.base
    n_x, n_m = nlp.n_x, nlp.n_m
    e = erf_inv(2.0 * b - 1.0)
    g_budget = float(np.sum(1.0 - b) - (1.0 - base.beta))
    g_rows = base.M @ base.mean.eval(x) - base.m + _SQRT_2 * nlp.row_std * e
    res = np.concatenate(([g_budget], g_rows))

    jac = np.zeros((1 + n_m, n_x + n_m))
    jac[0, n_x:] = -1.0
    jac[1:, :n_x] = base.M @ base.mean.jacobian(x)
    rows = np.arange(n_m)
    jac[1 + rows, n_x + rows] = _SQRT_2 * nlp.row_std * _SQRT_PI * np.exp(e * e)
    return res, jac


def initial_point(nlp: BooleNlp) -> np.ndarray:
    """Canonical start: x = 0 with the uniform allocation
    beta_i = 1 - (1 - beta)/n_m, which meets the budget with equality."""
    b = 1.0 - (1.0 - nlp.base.beta) / nlp.n_m
    b = min(max(b, EPS_SLACK), 1.0 - EPS_SLACK)
    return np.concatenate((np.zeros(nlp.n_x), np.full(nlp.n_m, b)))


def to_nlp(nlp: BooleNlp) -> Nlp:
    """Package the baseline program for the generic solver."""
    n_x, n_m = nlp.n_x, nlp.n_m
    cost = nlp.base.cost

    def cost_fn(z):
        x = z[:n_x]
        grad = np.concatenate((cost.jacobian(x)[0], np.zeros(n_m)))
        return float(cost.eval(x)[0]), grad

    lower = np.concatenate((np.full(n_x, -np.inf), np.full(n_m, EPS_SLACK)))
    upper = np.concatenate((np.full(n_x, np.inf), np.full(n_m, 1.0 - EPS_SLACK)))

    def split(z):
        x, b = nlp.split(z)
        return x, {"beta": b}

    return Nlp(dim=nlp.dim, cost=cost_fn,
               ineq=lambda z: _constraints_with_jacobian(nlp, z),
               lower=lower, upper=upper,
               ineq_residual=lambda z: eval_boole_constraints(nlp, z),
               split=split)


def certify_feasibility(nlp: BooleNlp, z) -> FeasibilityReport:
    """Re-check the baseline constraints, reporting worst violation per
    block (budget, [0, 1] slack bounds, per-row constraints)."""
    x, b = nlp.split(z)
    base = nlp.base
    v_budget = max(0.0, float(np.sum(1.0 - b) - (1.0 - base.beta)))
    v_bounds = float(max(0.0, np.max(-b), np.max(b - 1.0)))
    bc = np.clip(b, EPS_SLACK, 1.0 - EPS_SLACK)
    e = erf_inv(2.0 * bc - 1.0)
    g_rows = base.M @ base.mean.eval(x) - base.m + _SQRT_2 * nlp.row_std * e
    v_rows = float(max(0.0, np.max(g_rows)))
    blocks = {"budget": v_budget, "bounds": v_bounds, "linear": v_rows}
    return FeasibilityReport(max_violation=max(blocks.values()), blocks=blocks)
