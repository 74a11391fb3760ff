"""Spectral safe approximation of a joint chance constraint.

Diagonalizing the covariance decorrelates the Gaussian vector into
independent components; per-component confidence budgets (two slack
probabilities per component, one for each sign group of the transformed
constraint matrix) then yield a deterministic smooth program whose every
feasible point satisfies the original chance constraint.

The product-of-pairs budget constraint is solved in log form with a
floored argument; see the module constants. All precomputed data are
frozen before solving and independent of the decision variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import EigenPair, erf_inv, sym_eig
from .problem import FeasibilityReport, JccpProblem, normalize_problem
from .solver import Nlp

_SQRT_PI = 1.7724538509055160273

#: Slack probabilities are confined to [EPS_SLACK, 1 - EPS_SLACK]; the
#: inverse error function is singular at the endpoints and the trimmed
#: feasible volume is negligible against solver tolerances.
EPS_SLACK = 1e-9

#: Floor inside log(beta_j^1 + beta_j^2 - 1); keeps the log-form budget
#: constraint smooth and inactive at any solution with beta >= LOG_FLOOR.
LOG_FLOOR = 1e-12

#: Relative eigenvalue clamp: anything below LAM_TOL * max(lam_max, 1)
#: becomes exactly 0, which zeroes the matching coefficients and handles
#: degenerate directions without special-casing constraints.
LAM_TOL = 1e-12


@dataclass(frozen=True)
class SpectralData:
    """Frozen pre-solve data: eigenbasis, transformed constraints, sign
    table, and the nonnegative coefficients sqrt(2 lam_j)|Mbar_ij|."""

    theta: np.ndarray
    lam: np.ndarray
    Mbar: np.ndarray
    sigma_table: np.ndarray  # entries in {1, 2}
    coeff: np.ndarray


def precompute_spectral(p: JccpProblem) -> SpectralData:
    """Eigendecompose sigma and freeze the transformed constraint data.

    Requires a normalized problem (n_m >= n_phi). Eigenvalues below the
    relative clamp threshold are set to exactly zero.
    """
    if p.n_m < p.n_phi:
        raise ValueError("problem must be normalized first (n_m >= n_phi)")
    pair: EigenPair = sym_eig(p.sigma)
    lam = pair.lam.copy()
    lam[lam < LAM_TOL * max(float(lam.max()), 1.0)] = 0.0
    Mbar = p.M @ pair.theta
    sigma_table = np.where(Mbar >= 0.0, 1, 2)
    coeff = np.sqrt(2.0 * lam)[None, :] * np.abs(Mbar)
    return SpectralData(theta=pair.theta, lam=lam, Mbar=Mbar,
                        sigma_table=sigma_table, coeff=coeff)


@dataclass(frozen=True)
class SpectralNlp:
    """Deterministic program equivalent in layout to the safe approximation.

    Decision vector: [x (n_x), beta^1 (n_phi), beta^2 (n_phi)].
    Constraints (g <= 0): [log-product budget (1),
    pairing 1 - b1_j - b2_j (n_phi), transformed linear rows (n_m)].
    Slack box: [EPS_SLACK, 1 - EPS_SLACK].
    """

    base: JccpProblem
    data: SpectralData

    @property
    def n_x(self) -> int:
        return self.base.n_x

    @property
    def n_phi(self) -> int:
        return self.base.n_phi

    @property
    def n_m(self) -> int:
        return self.base.n_m

    @property
    def dim(self) -> int:
        return self.n_x + 2 * self.n_phi

    @property
    def n_constraints(self) -> int:
        return 1 + self.n_phi + self.n_m

    def split(self, z):
        n_x, n_phi = self.n_x, self.n_phi
        return (np.asarray(z[:n_x]), np.asarray(z[n_x:n_x + n_phi]),
                np.asarray(z[n_x + n_phi:]))


def build_spectral_nlp(p: JccpProblem) -> SpectralNlp:
    """Normalize p if needed and assemble the spectral program."""
    p = normalize_problem(p)
    return SpectralNlp(base=p, data=precompute_spectral(p))


def _log_beta_floor(beta: float, n_phi: int) -> float:
    # With every pair floored at LOG_FLOOR the log-sum cannot drop below
    # n_phi*log(LOG_FLOOR); flooring log(beta) there makes the budget
    # constraint vacuous for beta below LOG_FLOOR (in particular beta = 0),
    # matching the product form, which such beta cannot violate.
    floor = n_phi * np.log(LOG_FLOOR)
    if beta <= 0.0:
        return floor
    return max(float(np.log(beta)), floor)


def _slack_terms(nlp: SpectralNlp, z):
    x, b1, b2 = nlp.split(z)
    e1 = erf_inv(2.0 * b1 - 1.0)
    e2 = erf_inv(2.0 * b2 - 1.0)
    return x, b1, b2, e1, e2


def eval_constraints(nlp: SpectralNlp, z) -> np.ndarray:
    """Residual vector g(z), negative where satisfied.

    Slack components of z must lie inside the slack box.
    """
    x, b1, b2, e1, e2 = _slack_terms(nlp, z)
    data = nlp.data
    pair = b1 + b2 - 1.0
    g_prod = _log_beta_floor(nlp.base.beta, nlp.n_phi) \
        - float(np.sum(np.log(np.maximum(pair, LOG_FLOOR))))
    g_pair = 1.0 - b1 - b2
    mubar = data.theta.T @ nlp.base.mean.eval(x)
    e_sel = np.where(data.sigma_table == 1, e1[None, :], e2[None, :])
    g_lin = np.sum(data.coeff * e_sel, axis=1) + data.Mbar @ mubar - nlp.base.m
    return np.concatenate(([g_prod], g_pair, g_lin))


def eval_constraint_jacobian(nlp: SpectralNlp, z) -> np.ndarray:
    """Analytic Jacobian of eval_constraints w.r.t. [x, beta^1, beta^2]."""
    return _constraints_with_jacobian(nlp, z)[1]


def _constraints_with_jacobian(nlp: SpectralNlp, z):
    x, b1, b2, e1, e2 = _slack_terms(nlp, z)
    data = nlp.data
    n_x, n_phi, n_m = nlp.n_x, nlp.n_phi, nlp.n_m

    pair = b1 + b2 - 1.0
    g_prod = _log_beta_floor(nlp.base.beta, n_phi) \
        - float(np.sum(np.log(np.maximum(pair, LOG_FLOOR))))
    g_pair = 1.0 - b1 - b2
    mubar = data.theta.T @ nlp.base.mean.eval(x)
    e_sel = np.where(data.sigma_table == 1, e1[None, :], e2[None, :])
    g_lin = np.sum(data.coeff * e_sel, axis=1) + data.Mbar @ mubar - nlp.base.m
    res = np.concatenate(([g_prod], g_pair, g_lin))

    jac = np.zeros((1 + n_phi + n_m, n_x + 2 * n_phi))
    inv_pair = np.where(pair > LOG_FLOOR, 1.0 / np.maximum(pair, LOG_FLOOR), 0.0)
    jac[0, n_x:n_x + n_phi] = -inv_pair
    jac[0, n_x + n_phi:] = -inv_pair
    rows = np.arange(n_phi)
    jac[1 + rows, n_x + rows] = -1.0
    jac[1 + rows, n_x + n_phi + rows] = -1.0

    # d/db erf_inv(2b - 1) = sqrt(pi) * exp(erf_inv(2b - 1)^2)
    d1 = _SQRT_PI * np.exp(e1 * e1)
    d2 = _SQRT_PI * np.exp(e2 * e2)
    lin = slice(1 + n_phi, None)
    jac[lin, :n_x] = data.Mbar @ (data.theta.T @ nlp.base.mean.jacobian(x))
    jac[lin, n_x:n_x + n_phi] = data.coeff * d1[None, :] * (data.sigma_table == 1)
    jac[lin, n_x + n_phi:] = data.coeff * d2[None, :] * (data.sigma_table == 2)
    return res, jac


def initial_point(nlp: SpectralNlp) -> np.ndarray:
    """Canonical start: x = 0 and the symmetric interior slack choice
    b1 = b2 = (1 + beta^(1/n_phi))/2, which meets the budget with equality."""
    b = (1.0 + nlp.base.beta ** (1.0 / nlp.n_phi)) / 2.0
    b = min(max(b, EPS_SLACK), 1.0 - EPS_SLACK)
    return np.concatenate((np.zeros(nlp.n_x), np.full(2 * nlp.n_phi, b)))


def to_nlp(nlp: SpectralNlp) -> Nlp:
    """Package the spectral program for the generic solver."""
    n_x, n_phi = nlp.n_x, nlp.n_phi
    cost = nlp.base.cost

    def cost_fn(z):
        x = z[:n_x]
        grad = np.concatenate((cost.jacobian(x)[0], np.zeros(2 * n_phi)))
        return float(cost.eval(x)[0]), grad

    lower = np.concatenate((np.full(n_x, -np.inf), np.full(2 * n_phi, EPS_SLACK)))
    upper = np.concatenate((np.full(n_x, np.inf),
                            np.full(2 * n_phi, 1.0 - EPS_SLACK)))

    def split(z):
        x, b1, b2 = nlp.split(z)
        return x, {"beta1": b1, "beta2": b2}

    return Nlp(dim=nlp.dim, cost=cost_fn,
               ineq=lambda z: _constraints_with_jacobian(nlp, z),
               lower=lower, upper=upper,
               ineq_residual=lambda z: eval_constraints(nlp, z),
               split=split)


def certify_feasibility(nlp: SpectralNlp, z) -> FeasibilityReport:
    """Re-check the safe-approximation constraints in raw product form.

    Reports the worst violation per block (product budget, pairing,
    [0, 1] slack bounds, linear rows); any point with max_violation <= 0
    satisfies the original joint chance constraint.
    """
    x, b1, b2 = nlp.split(z)
    data = nlp.data
    pair = b1 + b2 - 1.0
    product = float(np.prod(np.maximum(pair, 0.0)))
    v_prod = max(0.0, nlp.base.beta - product)
    v_pair = float(max(0.0, np.max(1.0 - b1 - b2)))
    v_bounds = float(max(0.0, np.max(-b1), np.max(-b2),
                         np.max(b1 - 1.0), np.max(b2 - 1.0)))
    b1c = np.clip(b1, EPS_SLACK, 1.0 - EPS_SLACK)
    b2c = np.clip(b2, EPS_SLACK, 1.0 - EPS_SLACK)
    e1 = erf_inv(2.0 * b1c - 1.0)
    e2 = erf_inv(2.0 * b2c - 1.0)
    e_sel = np.where(data.sigma_table == 1, e1[None, :], e2[None, :])
    mubar = data.theta.T @ nlp.base.mean.eval(x)
    g_lin = np.sum(data.coeff * e_sel, axis=1) + data.Mbar @ mubar - nlp.base.m
    v_lin = float(max(0.0, np.max(g_lin)))
    blocks = {"product": v_prod, "pairing": v_pair, "bounds": v_bounds,
              "linear": v_lin}
    return FeasibilityReport(max_violation=max(blocks.values()), blocks=blocks)
