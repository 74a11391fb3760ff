"""Joint chance-constrained instances from linear Gaussian-Markov control.

Stacks the output means, output covariance, and quadratic control cost
of a discrete-time linear system driven by i.i.d. Gaussian process noise
over a finite horizon into the canonical problem form, and provides the
two benchmark systems (a double mass-spring-damper and the pitch
dynamics of an F-16 class aircraft).

Stacking order is time-major, output-minor: the first r rows of the
stacked quantities belong to y_1, the next r to y_2, and so on. Inputs
beyond the horizon are zero, so y_N carries no direct feedthrough term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import SymMatrix, psd_factor, sym_eig, zoh_discretize
from .problem import AffineMap, JccpProblem, QuadraticCost, ValidationError


@dataclass(frozen=True)
class GaussMarkovModel:
    """x_{t+1} = A x_t + Bu u_t + Bw w_t, y_t = C x_t + Du u_t + Dw w_t,
    with x_0 ~ N(x0_mean, x0_cov) and w_t ~ N(0, w_cov) i.i.d."""

    A: np.ndarray
    Bu: np.ndarray
    Bw: np.ndarray
    C: np.ndarray
    Du: np.ndarray
    Dw: np.ndarray
    x0_mean: np.ndarray
    x0_cov: SymMatrix
    w_cov: SymMatrix

    def __post_init__(self):
        for name in ("A", "Bu", "Bw", "C", "Du", "Dw"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "x0_mean", np.asarray(self.x0_mean, dtype=float).ravel())
        n = self.A.shape[0]
        p = self.Bu.shape[1]
        q = self.Bw.shape[1]
        r = self.C.shape[0]
        if self.A.shape != (n, n) or self.Bu.shape != (n, p) or self.Bw.shape != (n, q):
            raise ValidationError("state equation dimensions are inconsistent")
        if self.C.shape != (r, n) or self.Du.shape != (r, p) or self.Dw.shape != (r, q):
            raise ValidationError("output equation dimensions are inconsistent")
        if self.x0_mean.shape != (n,) or self.x0_cov.n != n or self.w_cov.n != q:
            raise ValidationError("initial-state / noise dimensions are inconsistent")
        psd_factor(self.x0_cov)
        psd_factor(self.w_cov)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.Bu.shape[1]

    @property
    def q(self) -> int:
        return self.Bw.shape[1]

    @property
    def r(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class HorizonSpec:
    """Horizon length, quadratic weights, output bound, and confidence."""

    N: int
    Q: np.ndarray
    R: np.ndarray
    y_max: np.ndarray
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=float))
        object.__setattr__(self, "R", np.asarray(self.R, dtype=float))
        object.__setattr__(self, "y_max", np.asarray(self.y_max, dtype=float).ravel())
        if self.N < 1:
            raise ValidationError("horizon N must be >= 1")
        if np.min(sym_eig(SymMatrix(self.Q)).lam) < -1e-10 * max(1.0, np.abs(self.Q).max()):
            raise ValidationError("Q must be PSD")
        if np.min(sym_eig(SymMatrix(self.R)).lam) <= 0.0:
            raise ValidationError("R must be positive definite")


def _powers(A: np.ndarray, count: int) -> list[np.ndarray]:
    out = [np.eye(A.shape[0])]
    for _ in range(count):
        out.append(A @ out[-1])
    return out


def stack_output_mean(model: GaussMarkovModel, spec: HorizonSpec) -> AffineMap:
    """Affine map from the stacked input sequence (u_0..u_{N-1}) to the
    stacked output means E[y_1..y_N]."""
    n, p, r, N = model.n, model.p, model.r, spec.N
    Apow = _powers(model.A, N)
    G = np.zeros((r * N, p * N))
    h = np.zeros(r * N)
    for t in range(1, N + 1):
        rows = slice((t - 1) * r, t * r)
        h[rows] = model.C @ Apow[t] @ model.x0_mean
        for k in range(t):
            G[rows, k * p:(k + 1) * p] = model.C @ Apow[t - 1 - k] @ model.Bu
        if t < N:
            G[rows, t * p:(t + 1) * p] += model.Du
    return AffineMap(G, h)


def stack_output_cov(model: GaussMarkovModel, spec: HorizonSpec) -> SymMatrix:
    """Covariance of the stacked outputs y_1..y_N; independent of u.

    Built from the influence matrix of the underlying noise vector
    (x_0 deviation and w_0..w_N) so that block (i, j) is the row of
    noise-to-output maps of y_i times the noise covariance times the
    transposed row for y_j.
    """
    n, q, r, N = model.n, model.q, model.r, spec.N
    Apow = _powers(model.A, N)
    dim_noise = n + (N + 1) * q
    L = np.zeros((r * N, dim_noise))
    for t in range(1, N + 1):
        rows = slice((t - 1) * r, t * r)
        L[rows, :n] = model.C @ Apow[t]
        for k in range(t):
            L[rows, n + k * q:n + (k + 1) * q] = model.C @ Apow[t - 1 - k] @ model.Bw
        L[rows, n + t * q:n + (t + 1) * q] = model.Dw
    S = np.zeros((dim_noise, dim_noise))
    S[:n, :n] = model.x0_cov.entries
    for k in range(N + 1):
        sl = slice(n + k * q, n + (k + 1) * q)
        S[sl, sl] = model.w_cov.entries
    return SymMatrix(L @ S @ L.T)


def stack_cost(model: GaussMarkovModel, spec: HorizonSpec) -> QuadraticCost:
    """Deterministic equivalent of the expected quadratic cost
    sum_t (E[x_{t+1}]' Q E[x_{t+1}] + u_t' R u_t), additive constants
    independent of u dropped."""
    n, p, N = model.n, model.p, spec.N
    Apow = _powers(model.A, N)
    Gx = np.zeros((n * N, p * N))
    hx = np.zeros(n * N)
    for t in range(N):  # block row t holds E[x_{t+1}]
        rows = slice(t * n, (t + 1) * n)
        hx[rows] = Apow[t + 1] @ model.x0_mean
        for k in range(t + 1):
            Gx[rows, k * p:(k + 1) * p] = Apow[t - k] @ model.Bu
    Qbar = np.kron(np.eye(N), spec.Q)
    Rbar = np.kron(np.eye(N), spec.R)
    H = Gx.T @ Qbar @ Gx + Rbar
    c = 2.0 * Gx.T @ Qbar @ hx
    const = float(hx @ Qbar @ hx)
    return QuadraticCost(H, c, const)


def build_jccp(model: GaussMarkovModel, spec: HorizonSpec) -> JccpProblem:
    """Elementwise output-bound chance constraint over the horizon as a
    canonical instance: M = identity, m = y_max repeated per step."""
    mean = stack_output_mean(model, spec)
    sigma = stack_output_cov(model, spec)
    n_phi = mean.out_dim
    m = np.tile(spec.y_max, spec.N)
    return JccpProblem(cost=stack_cost(model, spec), mean=mean, sigma=sigma,
                       M=np.eye(n_phi), m=m, beta=spec.beta)


def example_mass_spring(beta: float):
    """Double mass-spring-damper benchmark.

    Unit masses coupled by a spring (k = 1) and damper (c = 0.5); the
    control force acts on mass 1 and the disturbance force on mass 2.
    Discretized exactly at dt = 0.5 s. Both positions are constrained
    below zero over a 20-step horizon, giving 40 stacked outputs.
    """
    k, c, m1, m2 = 1.0, 0.5, 1.0, 1.0
    Ac = np.array([[0.0, 0.0, 1.0, 0.0],
                   [0.0, 0.0, 0.0, 1.0],
                   [-k / m1, k / m1, -c / m1, c / m1],
                   [k / m2, -k / m2, c / m2, -c / m2]])
    Bc = np.array([[0.0, 0.0],
                   [0.0, 0.0],
                   [1.0 / m1, 0.0],
                   [0.0, 1.0 / m2]])
    Ad, Bd = zoh_discretize(Ac, Bc, 0.5)
    model = GaussMarkovModel(
        A=Ad, Bu=Bd[:, :1], Bw=Bd[:, 1:],
        C=np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]),
        Du=np.zeros((2, 1)), Dw=np.zeros((2, 1)),
        x0_mean=np.array([-0.5, -0.5, 0.0, 0.0]),
        x0_cov=SymMatrix(np.zeros((4, 4))),
        w_cov=SymMatrix([[1e-4]]),
    )
    spec = HorizonSpec(N=20, Q=np.diag([1000.0, 1000.0, 1.0, 1.0]),
                       R=np.array([[1.0]]), y_max=np.array([0.0, 0.0]),
                       beta=beta)
    return model, spec, build_jccp(model, spec)


def example_f16(beta: float):
    """Short-period pitch dynamics with actuator states (F-16 class).

    The discrete-time matrices are used verbatim (0.1 s sampling, two
    inputs driving elevator and flaperon actuators, matched process
    noise). Negated pitch-channel outputs are bounded by (0, 1) over a
    10-step horizon, giving 20 stacked outputs.
    """
    A = np.array([
        [1.0000, 0.1025, 0.2080, -0.0502, -0.0057],
        [0.0, 1.1175, 4.1534, -0.8000, -0.1010],
        [0.0, 0.0955, 1.0722, -0.0541, -0.0153],
        [0.0, 0.0, 0.0, 0.1353, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.1353],
    ])
    B = np.array([
        [-0.0377, -0.0040],
        [-1.0042, -0.1131],
        [-0.0453, -0.0175],
        [0.8647, 0.0],
        [0.0, 0.8647],
    ])
    model = GaussMarkovModel(
        A=A, Bu=B, Bw=B.copy(),
        C=np.array([[-1.0, 0.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0, 0.0]]),
        Du=np.zeros((2, 2)), Dw=np.zeros((2, 2)),
        x0_mean=np.array([1.0, 0.0, 0.0, 0.0, 0.0]),
        x0_cov=SymMatrix(np.zeros((5, 5))),
        w_cov=SymMatrix(2.5e-3 * np.eye(2)),
    )
    spec = HorizonSpec(N=10, Q=np.diag([1000.0, 1.0, 1.0, 1.0, 1.0]),
                       R=np.eye(2), y_max=np.array([0.0, 1.0]), beta=beta)
    return model, spec, build_jccp(model, spec)
