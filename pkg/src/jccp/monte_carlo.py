"""Seeded Monte Carlo validation of candidate solutions.

Every run draws its noise from a counter-based substream keyed by
(seed, run index), so reports are bit-identical regardless of execution
order and runs could be farmed out in parallel. Normal variates come
from numpy's Generator (ziggurat method) and are colored by an
eigen-based PSD factor, which also covers rank-deficient covariances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gauss_markov import GaussMarkovModel, HorizonSpec
from .numerics import SymMatrix, psd_factor
from .problem import JccpProblem


@dataclass(frozen=True)
class MonteCarloReport:
    """Empirical joint-satisfaction rate and trajectory statistics."""

    runs: int
    beta_hat: float
    beta_hat_stderr: float
    mean_realized_cost: float
    y_mean: np.ndarray  # (N, r)
    y_lo: np.ndarray
    y_hi: np.ndarray
    seed: int
    satisfied: np.ndarray  # (runs,) per-run flags


def _substream(seed: int, run: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, run]))


def gaussian_sample(dim: int, cov: SymMatrix, stream: np.random.Generator) -> np.ndarray:
    """One draw from N(0, cov) using an eigen-based PSD factor."""
    if cov.n != dim:
        raise ValueError("cov size does not match dim")
    return psd_factor(cov) @ stream.standard_normal(dim)


def _standard_normal_block(seed: int, runs: int, dim: int) -> np.ndarray:
    out = np.empty((runs, dim))
    for run in range(runs):
        out[run] = _substream(seed, run).standard_normal(dim)
    return out


def simulate_batch(model: GaussMarkovModel, spec: HorizonSpec, u_seq,
                   runs: int, seed: int) -> MonteCarloReport:
    """Apply a fixed input sequence to the stochastic system `runs` times.

    A run satisfies the joint constraint iff y_t <= y_max componentwise
    (non-strict) for every t = 1..N. Also reports the mean realized cost
    sum_t (x_{t+1}' Q x_{t+1} + u_t' R u_t) and per-output min/mean/max
    trajectory envelopes.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    n, p, q, r, N = model.n, model.p, model.q, model.r, spec.N
    u = np.asarray(u_seq, dtype=float).reshape(N, p)
    Lx = psd_factor(model.x0_cov)
    Lw = psd_factor(model.w_cov)

    noise_dim = n + (N + 1) * q
    Z = _standard_normal_block(seed, runs, noise_dim)
    X = model.x0_mean + Z[:, :n] @ Lx.T  # (runs, n)

    ok = np.ones(runs, dtype=bool)
    cost = np.zeros(runs)
    y_sum = np.zeros((N, r))
    y_lo = np.full((N, r), np.inf)
    y_hi = np.full((N, r), -np.inf)

    for t in range(1, N + 1):
        w_prev = Z[:, n + (t - 1) * q:n + t * q] @ Lw.T
        X = X @ model.A.T + model.Bu @ u[t - 1] + w_prev @ model.Bw.T
        w_now = Z[:, n + t * q:n + (t + 1) * q] @ Lw.T
        Y = X @ model.C.T + w_now @ model.Dw.T
        if t < N:
            Y = Y + model.Du @ u[t]
        ok &= np.all(Y <= spec.y_max, axis=1)
        cost += np.einsum("ij,jk,ik->i", X, spec.Q, X)
        cost += u[t - 1] @ spec.R @ u[t - 1]
        y_sum[t - 1] = Y.sum(axis=0)
        y_lo[t - 1] = Y.min(axis=0)
        y_hi[t - 1] = Y.max(axis=0)

    beta_hat = float(ok.mean())
    stderr = float(np.sqrt(beta_hat * (1.0 - beta_hat) / runs))
    return MonteCarloReport(runs=runs, beta_hat=beta_hat,
                            beta_hat_stderr=stderr,
                            mean_realized_cost=float(cost.mean()),
                            y_mean=y_sum / runs, y_lo=y_lo, y_hi=y_hi,
                            seed=seed, satisfied=ok)


def estimate_satisfaction(problem: JccpProblem, x, runs: int, seed: int):
    """Empirical P(M phi(x) <= m) for a fixed decision, with its standard
    error; phi is drawn directly from N(mu(x), sigma)."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    x = np.asarray(x, dtype=float)
    mu = problem.mean.eval(x)
    L = psd_factor(problem.sigma)
    Z = _standard_normal_block(seed, runs, problem.n_phi)
    phi = mu + Z @ L.T
    ok = np.all(phi @ problem.M.T <= problem.m, axis=1)
    beta_hat = float(ok.mean())
    stderr = float(np.sqrt(beta_hat * (1.0 - beta_hat) / runs))
    return beta_hat, stderr
