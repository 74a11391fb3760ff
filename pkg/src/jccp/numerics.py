"""Special functions and dense symmetric linear algebra.

Everything here is self-contained on top of numpy array arithmetic: the
error function and its inverse, the standard normal CDF, a cyclic Jacobi
eigensolver for symmetric matrices, and exact zero-order-hold
discretization via a scaled Taylor matrix exponential.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SQRT_PI = 1.7724538509055160273
_SQRT_2 = 1.4142135623730951


class ConvergenceError(RuntimeError):
    """An iterative routine exceeded its iteration cap."""


# ---------------------------------------------------------------------------
# erf / erf_inv / standard normal CDF
# ---------------------------------------------------------------------------

# Rational minimax coefficients for erf/erfc, from FreeBSD msun s_erf.c
# (Sun Microsystems, freely redistributable with this notice preserved).
# Accuracy < 1 ulp on each branch.
_ERX = 8.45062911510467529297e-01

_PP = (1.28379167095512558561e-01, -3.25042107247001499370e-01,
       -2.84817495755985104766e-02, -5.77027029648944159157e-03,
       -2.37630166566501626084e-05)
_QQ = (1.0, 3.97917223959155352819e-01, 6.50222499887672944485e-02,
       5.08130628187576562776e-03, 1.32494738004321644526e-04,
       -3.96022827877536812320e-06)

_PA = (-2.36211856075265944077e-03, 4.14856118683748331666e-01,
       -3.72207876035701323847e-01, 3.18346619901161753674e-01,
       -1.10894694282396677476e-01, 3.54783043256182359371e-02,
       -2.16637559486879084300e-03)
_QA = (1.0, 1.06420880400844228286e-01, 5.40397917702171048937e-01,
       7.18286544141962662868e-02, 1.26171219808761642112e-01,
       1.36370839120290507362e-02, 1.19844998467991074170e-02)

_RA = (-9.86494403484714822705e-03, -6.93858572707181764372e-01,
       -1.05586262253232909814e+01, -6.23753324503260060396e+01,
       -1.62396669462573470355e+02, -1.84605092906711035994e+02,
       -8.12874355063065934246e+01, -9.81432934416914548592e+00)
_SA = (1.0, 1.96512716674392571292e+01, 1.37657754143519042600e+02,
       4.34565877475229228821e+02, 6.45387271733267880336e+02,
       4.29008140027567833386e+02, 1.08635005541779435134e+02,
       6.57024977031928170135e+00, -6.04244152148580987438e-02)

_RB = (-9.86494292470009928597e-03, -7.99283237680523006574e-01,
       -1.77579549177547519889e+01, -1.60636384855821916062e+02,
       -6.37566443368389627722e+02, -1.02509513161107724954e+03,
       -4.83519191608651397019e+02)
_SB = (1.0, 3.03380607434824582924e+01, 3.25792512996573918826e+02,
       1.53672958608443695994e+03, 3.19985821950859553908e+03,
       2.55305040643316442583e+03, 4.74528541206955367215e+02,
       -2.24409524465858183362e+01)


def _polyval(coeffs, x):
    # Horner on ascending coefficients.
    out = np.full_like(x, coeffs[-1])
    for c in reversed(coeffs[:-1]):
        out = out * x + c
    return out


def _erfc_tail(a, rc, sc):
    s = 1.0 / (a * a)
    return np.exp(-a * a - 0.5625 + _polyval(rc, s) / _polyval(sc, s)) / a


def erf(x):
    """Error function, |error| <= 1e-14 absolute on finite inputs.

    Accepts a scalar or ndarray; exactly odd by construction.
    """
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    xv = np.atleast_1d(x_arr)
    a = np.abs(xv)
    sign = np.sign(xv)
    out = np.full_like(xv, np.nan)

    m = a < 0.84375
    if m.any():
        z = xv[m] * xv[m]
        out[m] = xv[m] + xv[m] * (_polyval(_PP, z) / _polyval(_QQ, z))

    m = (a >= 0.84375) & (a < 1.25)
    if m.any():
        s = a[m] - 1.0
        out[m] = sign[m] * (_ERX + _polyval(_PA, s) / _polyval(_QA, s))

    m = (a >= 1.25) & (a < 1.0 / 0.35)
    if m.any():
        out[m] = sign[m] * (1.0 - _erfc_tail(a[m], _RA, _SA))

    m = (a >= 1.0 / 0.35) & (a < 6.0)
    if m.any():
        out[m] = sign[m] * (1.0 - _erfc_tail(a[m], _RB, _SB))

    m = a >= 6.0  # erfc(6) < 1 ulp of 1
    out[m] = sign[m]

    return float(out[0]) if scalar else out


# Acklam's rational approximation to the inverse normal CDF, used as the
# initial guess before Newton polishing against erf.
_ACK_A = (-3.969683028665376e+01, 2.209460984245205e+02,
          -2.759285104469687e+02, 1.383577518672690e+02,
          -3.066479806614716e+01, 2.506628277459239e+00)
_ACK_B = (-5.447609879822406e+01, 1.615858368580409e+02,
          -1.556989798598866e+02, 6.680131188771972e+01,
          -1.328068155288572e+01)
_ACK_C = (-7.784894002430293e-03, -3.223964580411365e-01,
          -2.400758277161838e+00, -2.549732539343734e+00,
          4.374664141464968e+00, 2.938163982698783e+00)
_ACK_D = (7.784695709041462e-03, 3.224671290700398e-01,
          2.445134137142996e+00, 3.754408661907416e+00)


def _horner(coeffs, x):
    out = np.full_like(x, coeffs[0])
    for c in coeffs[1:]:
        out = out * x + c
    return out


def erf_inv(p):
    """Inverse error function on (-1, 1).

    Rational initial guess (Acklam) refined by three Newton steps on
    erf(x) = p, giving |erf(erf_inv(p)) - p| <= 1e-12 across the open
    interval. Raises ValueError for |p| >= 1.
    """
    p_arr = np.asarray(p, dtype=float)
    scalar = p_arr.ndim == 0
    pv = np.atleast_1d(p_arr)
    if not np.all(np.abs(pv) < 1.0):
        raise ValueError("erf_inv requires |p| < 1 strictly")

    ap = np.abs(pv)
    # Phi^{-1}((1 - |p|)/2) is negative; mirror it so oddness is exact.
    q = (1.0 - ap) / 2.0
    x = np.empty_like(pv)

    central = q >= 0.02425
    if central.any():
        r = q[central] - 0.5
        t = r * r
        x[central] = _horner(_ACK_A, t) * r / _horner((*_ACK_B, 1.0), t)
    tail = ~central
    if tail.any():
        u = np.sqrt(-2.0 * np.log(q[tail]))
        x[tail] = _horner(_ACK_C, u) / _horner((*_ACK_D, 1.0), u)

    x = -x / _SQRT_2
    for _ in range(3):
        x -= (erf(x) - ap) * (_SQRT_PI / 2.0) * np.exp(x * x)
    x = np.sign(pv) * x

    return float(x[0]) if scalar else x


def erf_inv_deriv(p):
    """d/dp erf_inv(p) = (sqrt(pi)/2) * exp(erf_inv(p)^2)."""
    e = erf_inv(p)
    return (_SQRT_PI / 2.0) * np.exp(np.square(e))


def std_normal_cdf(z):
    """Standard normal CDF via F(z) = (1 + erf(z/sqrt(2))) / 2."""
    z_arr = np.asarray(z, dtype=float)
    out = 0.5 * (1.0 + erf(z_arr / _SQRT_2))
    return float(out) if z_arr.ndim == 0 else out


# ---------------------------------------------------------------------------
# Symmetric eigendecomposition (cyclic Jacobi)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymMatrix:
    """Dense real symmetric matrix; construction symmetrizes exactly."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError("SymMatrix needs a square matrix of size >= 1")
        if not np.all(np.isfinite(a)):
            raise ValueError("SymMatrix entries must be finite")
        a = (a + a.T) / 2.0
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.entries)))


@dataclass(frozen=True)
class EigenPair:
    """Orthogonal theta and eigenvalues lam (descending) with
    theta.T @ S @ theta = diag(lam)."""

    theta: np.ndarray
    lam: np.ndarray


_JACOBI_MAX_SWEEPS = 100


def sym_eig(s: SymMatrix) -> EigenPair:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Deterministic output: eigenvalues sorted descending and each
    eigenvector's first largest-magnitude component made positive.
    Raises ConvergenceError after 100 sweeps (never observed below
    n ~ several hundred).
    """
    a = np.array(s.entries, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return EigenPair(theta=v, lam=a[0, :1].copy())

    scale = max(1.0, float(np.max(np.abs(a))))
    off_tol = 1e-13 * scale
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.max(np.abs(a - np.diag(np.diag(a))))
        if off <= off_tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= off_tol / n:
                    continue
                # Classic 2x2 rotation zeroing a[p, q].
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(tau) if tau != 0 else 1.0
                t = t / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                sn = t * c
                rot_p = a[:, p].copy()
                rot_q = a[:, q].copy()
                a[:, p] = c * rot_p - sn * rot_q
                a[:, q] = sn * rot_p + c * rot_q
                rot_p = a[p, :].copy()
                rot_q = a[q, :].copy()
                a[p, :] = c * rot_p - sn * rot_q
                a[q, :] = sn * rot_p + c * rot_q
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
    else:
        raise ConvergenceError(
            f"Jacobi eigensolver did not converge in {_JACOBI_MAX_SWEEPS} sweeps"
        )

    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    v = v[:, order]
    # Sign convention: first component of largest magnitude positive.
    for j in range(n):
        k = int(np.argmax(np.abs(v[:, j])))
        if v[k, j] < 0:
            v[:, j] = -v[:, j]
    return EigenPair(theta=v, lam=lam)


def psd_factor(s: SymMatrix) -> np.ndarray:
    """L with L @ L.T == S for PSD S, valid for rank-deficient input.

    Eigen-based: L = theta * sqrt(max(lam, 0)). Raises ValueError when S
    has an eigenvalue below -1e-10 * max|S|.
    """
    pair = sym_eig(s)
    floor = -1e-10 * max(s.max_abs(), 1e-300)
    if np.min(pair.lam) < floor:
        raise ValueError("matrix is not positive semidefinite")
    return pair.theta * np.sqrt(np.maximum(pair.lam, 0.0))


# ---------------------------------------------------------------------------
# Matrix exponential and zero-order hold
# ---------------------------------------------------------------------------

_EXPM_TERMS = 20  # remainder < 0.5^21/21! ~ 9e-26 after scaling


def _expm(a: np.ndarray) -> np.ndarray:
    """Scaling-and-squaring Taylor matrix exponential."""
    n = a.shape[0]
    norm = np.max(np.abs(a).sum(axis=0))  # 1-norm
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    b = a / (2.0 ** s)
    out = np.eye(n)
    term = np.eye(n)
    for k in range(1, _EXPM_TERMS + 1):
        term = term @ b / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def zoh_discretize(ac: np.ndarray, bc: np.ndarray, dt: float):
    """Exact zero-order-hold discretization of dx/dt = Ac x + Bc u.

    Returns (Ad, Bd) from the exponential of the augmented block matrix
    [[Ac, Bc], [0, 0]] * dt.
    """
    ac = np.asarray(ac, dtype=float)
    bc = np.asarray(bc, dtype=float)
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = ac.shape[0]
    p = bc.shape[1]
    aug = np.zeros((n + p, n + p))
    aug[:n, :n] = ac
    aug[:n, n:] = bc
    e = _expm(aug * dt)
    return e[:n, :n].copy(), e[:n, n:].copy()
