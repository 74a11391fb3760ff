"""Canonical joint chance-constrained problem instances.

A JccpProblem is

    min_x J(x)  subject to  P(M phi(x) <= m) >= beta,
    phi(x) ~ N(mu(x), Sigma),

with differentiable cost J and mean map mu, and Sigma independent of x.
The problem-file format restricts J to a quadratic form and mu to an
affine map; the in-memory API accepts arbitrary differentiable maps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .numerics import SymMatrix, sym_eig


class ProblemError(ValueError):
    """Base class for problem ingestion failures."""


class ParseError(ProblemError):
    """Problem file is not well-formed."""


class ValidationError(ProblemError):
    """Problem violates a structural invariant."""


class DifferentiableMap:
    """Vector-valued map with an explicit Jacobian.

    eval(x) returns a length-out_dim vector and jacobian(x) the
    out_dim x in_dim matrix of partials. Both must be deterministic,
    re-entrant, and defined for all finite x.
    """

    def __init__(self, in_dim, out_dim, eval_fn, jacobian_fn):
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self._eval = eval_fn
        self._jacobian = jacobian_fn

    def eval(self, x) -> np.ndarray:
        out = np.asarray(self._eval(np.asarray(x, dtype=float)), dtype=float)
        return out.reshape(self.out_dim)

    def jacobian(self, x) -> np.ndarray:
        jac = np.asarray(self._jacobian(np.asarray(x, dtype=float)), dtype=float)
        return jac.reshape(self.out_dim, self.in_dim)


class AffineMap(DifferentiableMap):
    """x -> G x + h with constant Jacobian G."""

    def __init__(self, G, h):
        G = np.asarray(G, dtype=float)
        h = np.asarray(h, dtype=float).ravel()
        if G.ndim != 2 or G.shape[0] != h.shape[0]:
            raise ValidationError("affine map: G rows must match len(h)")
        self.G = G
        self.h = h
        super().__init__(G.shape[1], G.shape[0],
                         lambda x: self.G @ x + self.h,
                         lambda x: self.G)


class QuadraticCost(DifferentiableMap):
    """J(x) = x' H x + c' x + const as a one-output map (H symmetric)."""

    def __init__(self, H, c, const=0.0):
        H = np.asarray(H, dtype=float)
        c = np.asarray(c, dtype=float).ravel()
        if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] != c.shape[0]:
            raise ValidationError("quadratic cost: H must be square matching len(c)")
        self.H = (H + H.T) / 2.0
        self.c = c
        self.const = float(const)
        super().__init__(c.shape[0], 1,
                         lambda x: np.array([x @ self.H @ x + self.c @ x + self.const]),
                         lambda x: (2.0 * self.H @ x + self.c)[None, :])

    def value(self, x) -> float:
        return float(self.eval(x)[0])


@dataclass(frozen=True)
class JccpProblem:
    """Validated joint chance-constrained instance."""

    cost: DifferentiableMap
    mean: DifferentiableMap
    sigma: SymMatrix
    M: np.ndarray
    m: np.ndarray
    beta: float

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        m = np.asarray(self.m, dtype=float).ravel()
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "m", m)
        if self.cost.out_dim != 1:
            raise ValidationError("cost must be scalar-valued")
        n_phi = self.mean.out_dim
        if M.ndim != 2 or M.shape[1] != n_phi:
            raise ValidationError("dimension mismatch: M columns != mean.out_dim")
        if M.shape[0] != m.shape[0]:
            raise ValidationError("dimension mismatch: M rows != len(m)")
        if self.cost.in_dim != self.mean.in_dim:
            raise ValidationError("dimension mismatch: cost and mean input dims differ")
        if self.sigma.n != n_phi:
            raise ValidationError("dimension mismatch: sigma size != mean.out_dim")
        if not (0.0 <= self.beta < 1.0):
            raise ValidationError("beta must lie in [0, 1)")
        lam = sym_eig(self.sigma).lam
        if np.min(lam) < -1e-10 * max(self.sigma.max_abs(), 1e-300):
            raise ValidationError("sigma not PSD")

    @property
    def n_x(self) -> int:
        return self.mean.in_dim

    @property
    def n_phi(self) -> int:
        return self.mean.out_dim

    @property
    def n_m(self) -> int:
        return self.M.shape[0]


@dataclass
class Solution:
    """Solver output for one approximation program."""

    x: np.ndarray
    slacks: dict[str, np.ndarray] = field(default_factory=dict)
    cost_value: float = np.nan
    kkt_residual: float = np.inf
    constraint_violation: float = np.inf
    status: str = "max_iter"  # converged | max_iter | infeasible_detected


@dataclass(frozen=True)
class FeasibilityReport:
    """Worst constraint violation of a candidate point, by block."""

    max_violation: float
    blocks: dict[str, float]


def normalize_problem(p: JccpProblem) -> JccpProblem:
    """Fold M into the mean map when there are fewer rows than outputs.

    If n_m < n_phi the returned instance has mean' = M o mean,
    sigma' = M Sigma M', M' = I, so that n_m >= n_phi holds; the chance
    constraint is unchanged. Otherwise the input is returned as-is
    (idempotent).
    """
    if p.n_m >= p.n_phi:
        return p
    M = p.M
    inner = p.mean
    if isinstance(inner, AffineMap):
        mean = AffineMap(M @ inner.G, M @ inner.h)
    else:
        mean = DifferentiableMap(
            inner.in_dim, M.shape[0],
            lambda x: M @ inner.eval(x),
            lambda x: M @ inner.jacobian(x),
        )
    sigma = SymMatrix(M @ p.sigma.entries @ M.T)
    return JccpProblem(cost=p.cost, mean=mean, sigma=sigma,
                       M=np.eye(p.n_m), m=p.m.copy(), beta=p.beta)


# ---------------------------------------------------------------------------
# Problem file format
# ---------------------------------------------------------------------------

_REQUIRED_FIELDS = ("n_x", "n_phi", "n_m", "beta", "cost", "mean", "sigma", "M", "m")


def _matrix(doc, name, rows, cols):
    try:
        arr = np.array(doc, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field '{name}' is not a numeric matrix") from exc
    if arr.shape != (rows, cols):
        raise ValidationError(f"field '{name}' must be {rows}x{cols}, got {arr.shape}")
    return arr


def _vector(doc, name, length):
    try:
        arr = np.array(doc, dtype=float).ravel()
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field '{name}' is not a numeric vector") from exc
    if arr.shape != (length,):
        raise ValidationError(f"field '{name}' must have length {length}")
    return arr


def load_problem(text: str) -> JccpProblem:
    """Parse a problem file (JSON document, see README for the schema).

    The file format restricts the cost to a quadratic form (H, c, const)
    and the mean to an affine map (G, h). Raises ParseError for malformed
    input and ValidationError naming the violated invariant.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("problem file must be a JSON object")
    for key in _REQUIRED_FIELDS:
        if key not in doc:
            raise ParseError(f"missing field '{key}'")

    try:
        n_x = int(doc["n_x"])
        n_phi = int(doc["n_phi"])
        n_m = int(doc["n_m"])
        beta = float(doc["beta"])
    except (TypeError, ValueError) as exc:
        raise ParseError("n_x, n_phi, n_m must be integers and beta a number") from exc
    if n_x < 1 or n_phi < 1 or n_m < 1:
        raise ValidationError("n_x, n_phi, n_m must all be >= 1")

    cost_doc = doc["cost"]
    mean_doc = doc["mean"]
    if not isinstance(cost_doc, dict) or not {"H", "c"} <= cost_doc.keys():
        raise ParseError("field 'cost' must be an object with H, c (and optional const)")
    if not isinstance(mean_doc, dict) or not {"G", "h"} <= mean_doc.keys():
        raise ParseError("field 'mean' must be an object with G, h")

    cost = QuadraticCost(_matrix(cost_doc["H"], "cost.H", n_x, n_x),
                         _vector(cost_doc["c"], "cost.c", n_x),
                         float(cost_doc.get("const", 0.0)))
    mean = AffineMap(_matrix(mean_doc["G"], "mean.G", n_phi, n_x),
                     _vector(mean_doc["h"], "mean.h", n_phi))
    sigma = SymMatrix(_matrix(doc["sigma"], "sigma", n_phi, n_phi))
    M = _matrix(doc["M"], "M", n_m, n_phi)
    m = _vector(doc["m"], "m", n_m)
    return JccpProblem(cost=cost, mean=mean, sigma=sigma, M=M, m=m, beta=beta)


def serialize_problem(p: JccpProblem) -> str:
    """Inverse of load_problem for quadratic-cost / affine-mean instances.

    Round-trips bit-for-bit: floats are emitted with repr precision.
    """
    if not isinstance(p.cost, QuadraticCost) or not isinstance(p.mean, AffineMap):
        raise ValidationError(
            "only quadratic-cost, affine-mean problems are serializable")
    doc = {
        "n_x": p.n_x,
        "n_phi": p.n_phi,
        "n_m": p.n_m,
        "beta": p.beta,
        "cost": {"H": p.cost.H.tolist(), "c": p.cost.c.tolist(),
                 "const": p.cost.const},
        "mean": {"G": p.mean.G.tolist(), "h": p.mean.h.tolist()},
        "sigma": p.sigma.entries.tolist(),
        "M": p.M.tolist(),
        "m": p.m.tolist(),
    }
    return json.dumps(doc, indent=1)
