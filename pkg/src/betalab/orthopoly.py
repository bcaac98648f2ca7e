"""Orthonormal functions for the varying weight exp(-n V) and the beta = 1, 4 kernels.

psi_j = p_j exp(-n V / 2) with p_j of leading coefficient gamma_j.  The
three-term recurrence is obtained by Lanczos with full reorthogonalization
on a Gauss-Legendre grid.  The grid window starts at sigma_eps and is
widened until every computed psi_j is below 1e-16 at its ends, so the
functions are orthonormal on the whole line to working precision.

Kernels are stored as coefficient matrices over the basis: a scalar kernel
is S(lam, mu) = psi(lam)^T (W_psi psi(mu) + W_eps eps psi(mu)).  In that form
d/dmu S, eps S (acting on the first argument) and comparisons between
different formulas are exact linear algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.fft import dct
from scipy.special import gammaln, logsumexp

from .equilibrium import solve_support
from .errors import DomainError, InvertibilityError, PrecisionError, StructuralError
from .exact import exact_log_partition
from .potential import Polynomial, check_growth, eval_potential

GRAM_TOL = 1e-8
TAIL_TOL = 1e-16
SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class RecurrenceTable:
    """Recurrence lam psi_k = a_{k+1} psi_{k+1} + b_k psi_k + a_k psi_{k-1}.

    ``a[k]`` is a_k (``a[0] = 0``) and ``b[k]`` is b_k for k < K;
    ``log_gamma[k]`` is log of the leading coefficient of p_k.
    """

    a: np.ndarray
    b: np.ndarray
    log_gamma: np.ndarray
    n_weight: int
    K: int
    potential: Polynomial
    window: tuple[float, float]
    gram_error: float
    nodes: int = 0          # Gauss-Legendre nodes used on ``window``

    def jacobi(self, size: int | None = None) -> np.ndarray:
        size = self.K if size is None else size
        if size > self.K:
            raise DomainError(f"only {self.K} levels available")
        J = np.diag(self.b[:size])
        off = self.a[1:size]
        return J + np.diag(off, 1) + np.diag(off, -1)

    def psi(self, x, levels: int | None = None) -> np.ndarray:
        """psi_0..psi_{levels-1} at ``x``; shape (levels,) + x.shape."""
        levels = self.K if levels is None else levels
        if levels > self.K:
            raise DomainError(f"only {self.K} levels available")
        x = np.asarray(x, dtype=float)
        shape = x.shape
        x = x.ravel()
        out = np.zeros((levels, x.size))
        logs = self.log_gamma[0] - 0.5 * self.n_weight * eval_potential(self.potential, x)
        prev = np.zeros_like(x)
        cur = np.ones_like(x)
        big = 1e150
        for k in range(levels):
            with np.errstate(divide="ignore"):
                out[k] = np.sign(cur) * np.exp(np.log(np.abs(cur)) + logs)
            if k + 1 == levels:
                break
            nxt = ((x - self.b[k]) * cur - self.a[k] * prev) / self.a[k + 1]
            prev, cur = cur, nxt
            over = np.abs(cur) > big
            if np.any(over):
                cur[over] /= big
                prev[over] /= big
                logs[over] += np.log(big)
        return out.reshape((levels,) + shape)


def _lanczos(x, log_w, K):
    sw = np.exp(0.5 * (log_w - logsumexp(log_w)))
    Q = np.zeros((K, x.size))
    a = np.zeros(K + 1)
    b = np.zeros(K)
    Q[0] = sw / np.linalg.norm(sw)
    for k in range(K):
        r = x * Q[k]
        b[k] = Q[k] @ r
        r -= b[k] * Q[k]
        if k:
            r -= a[k] * Q[k - 1]
        for _ in range(2):
            r -= Q[: k + 1].T @ (Q[: k + 1] @ r)
        a[k + 1] = np.linalg.norm(r)
        if k + 1 < K:
            Q[k + 1] = r / a[k + 1]
    return a, b, Q


def recurrence(p: Polynomial, n: int, K: int | None = None, epsilon: float = 0.5,
               order_factor: int = 8) -> RecurrenceTable:
    """Recurrence coefficients of the orthonormal polynomials for exp(-n V).

    Uses ``order_factor * (n + K)`` Gauss-Legendre points on sigma_eps, more
    in proportion if the window has to be widened.  Raises
    :class:`PrecisionError` if the Gram matrix of the reconstructed psi_j
    (checked on an independent finer grid) is off the identity by more than
    1e-8.
    """
    g = check_growth(p)
    if not g:
        raise DomainError(f"potential is not confining: {g.witness}")
    m = p.degree // 2
    if n < 1:
        raise DomainError("n must be >= 1")
    K = n + 2 * m if K is None else K
    if K > n + 64:
        raise DomainError(f"K = {K} exceeds n + 64")
    a0, b0 = solve_support(p)
    c, hw = 0.5 * (a0 + b0), 0.5 * (b0 - a0) + epsilon
    hw0 = hw
    for _ in range(40):
        # node density per unit length is held fixed as the window grows
        N = int(np.ceil(order_factor * (n + K) * hw / hw0))
        xg, wg = np.polynomial.legendre.leggauss(N)
        lo, hi = c - hw, c + hw
        x = c + hw * xg
        log_w = np.log(hw * wg) - n * eval_potential(p, x)
        a, b, Q = _lanczos(x, log_w, K)
        lg0 = -0.5 * logsumexp(log_w)
        log_gamma = lg0 - np.concatenate([[0.0], np.cumsum(np.log(a[1:K]))])
        rec = RecurrenceTable(a=a[:K].copy(), b=b.copy(), log_gamma=log_gamma, n_weight=n, K=K,
                              potential=p, window=(lo, hi), gram_error=np.nan, nodes=N)
        ends = np.abs(rec.psi(np.array([lo, hi])))
        if ends.max() < TAIL_TOL:
            break
        hw *= 1.25
    else:
        raise PrecisionError("could not find a window where the orthonormal functions decay")
    # independent check on a finer grid
    x2, w2 = np.polynomial.legendre.leggauss(int(1.5 * N) + 1)
    xs = c + hw * x2
    P = rec.psi(xs)
    G = (P * (hw * w2)) @ P.T
    err = float(np.abs(G - np.eye(K)).max())
    if err > GRAM_TOL:
        raise PrecisionError(f"loss of orthogonality {err:.2e}; increase the grid order")
    return RecurrenceTable(a=rec.a, b=rec.b, log_gamma=rec.log_gamma, n_weight=n, K=K, potential=p,
                           window=rec.window, gram_error=err, nodes=N)


# ---------------------------------------------------------------------------
# workspace


@dataclass
class KernelWorkspace:
    """D, M, the corner blocks and T_n for one (V, n).

    Basis indices run over 0..Lb-1 with Lb = n + 4m - 2, so that
    psi_j' = sum_k D_jk psi_k is exact for every j < L = n + 2m - 1 (all
    indices appearing in Phi_1, Phi_2).
    """

    recurrence: RecurrenceTable
    n: int
    m: int
    D: np.ndarray
    M: np.ndarray
    eps_coeffs: np.ndarray = field(repr=False)
    eps_total: np.ndarray = field(repr=False)

    @property
    def L(self) -> int:
        return self.n + 2 * self.m - 1

    @property
    def Lb(self) -> int:
        return self.D.shape[0]

    @property
    def phi1(self) -> np.ndarray:
        return np.arange(self.n - 2 * self.m + 1, self.n)

    @property
    def phi2(self) -> np.ndarray:
        return np.arange(self.n, self.n + 2 * self.m - 1)

    def block(self, A, r, s):
        idx = {1: self.phi1, 2: self.phi2}
        return A[np.ix_(idx[r], idx[s])]

    @property
    def D_band(self) -> np.ndarray:
        return self.D

    @property
    def M_dense(self) -> np.ndarray:
        return self.M

    @property
    def Gamma_log(self) -> float:
        return float(np.sum(self.recurrence.log_gamma[: self.n]))

    @cached_property
    def T(self) -> np.ndarray:
        return t_matrix_logdet(self)[0]

    def psi(self, x) -> np.ndarray:
        return self.recurrence.psi(x, self.Lb)

    def dpsi(self, x) -> np.ndarray:
        """psi_j' for j < L (rows beyond L are not exact and are zeroed)."""
        out = self.D @ self.psi(np.ravel(x))
        out[self.L:] = 0.0
        return out.reshape((self.Lb,) + np.shape(x))

    def eps_psi(self, x) -> np.ndarray:
        """(eps psi_j)(x) for j < Lb; constants +-(1/2) int psi_j outside the window."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.recurrence.window
        t = np.clip((2.0 * x.ravel() - (lo + hi)) / (hi - lo), -1.0, 1.0)
        out = C.chebval(t, self.eps_coeffs) - 0.5 * self.eps_total[:, None]
        out[:, x.ravel() <= lo] = -0.5 * self.eps_total[:, None]
        out[:, x.ravel() >= hi] = 0.5 * self.eps_total[:, None]
        return out.reshape((self.Lb,) + x.shape)

    def grid(self, factor: float = 1.5):
        """Gauss-Legendre nodes/weights on the window (exact for products of basis functions)."""
        lo, hi = self.recurrence.window
        N = int(factor * self.recurrence.nodes) + 1
        x, w = np.polynomial.legendre.leggauss(N)
        return 0.5 * (lo + hi) + 0.5 * (hi - lo) * x, 0.5 * (hi - lo) * w


def differentiation_matrix(rec: RecurrenceTable, size: int, m: int) -> np.ndarray:
    """D_jk = (psi_j', psi_k) = -(n/2) V'(J)_jk for j < k, skew-extended.

    V'(J) is evaluated by Horner on the truncated Jacobi matrix, which is
    exact for the returned ``size`` x ``size`` block as long as K is at
    least ``size + m``.
    """
    if rec.K < size + m:
        raise DomainError(f"need K >= {size + m} levels, have {rec.K}")
    J = rec.jacobi()
    dV = rec.potential.derivative().coeffs
    A = np.zeros_like(J)
    for c in dV[::-1]:
        A = A @ J + c * np.eye(rec.K)
    A = A[:size, :size]
    U = np.triu(-0.5 * rec.n_weight * A, 1)
    D = U - U.T
    j, k = np.indices(D.shape)
    band = np.abs(D[np.abs(j - k) >= 2 * m]).max(initial=0.0)
    if band > 1e-9 * max(1.0, np.abs(D).max()):
        raise StructuralError(f"D has entries {band:.2e} outside the band |j-k| < {2 * m}")
    D[np.abs(j - k) >= 2 * m] = 0.0
    return D


def _eps_chebyshev(rec: RecurrenceTable, levels: int, N0: int):
    lo, hi = rec.window
    Nc = N0
    while True:
        t = np.cos(np.pi * (np.arange(Nc) + 0.5) / Nc)
        vals = rec.psi(0.5 * (lo + hi) + 0.5 * (hi - lo) * t, levels)
        c = dct(vals, type=2, axis=1) / Nc
        c[:, 0] *= 0.5
        tail = np.abs(c[:, -16:]).max() / np.abs(c).max()
        if tail < 1e-15 or Nc > 16 * N0:
            break
        Nc *= 2
    F = C.chebint(c.T, lbnd=-1.0, scl=0.5 * (hi - lo))
    total = C.chebval(1.0, F)
    return F, total


def integration_matrix(rec: RecurrenceTable, size: int, eps_coeffs, eps_total) -> np.ndarray:
    """M_jk = (eps psi_j, psi_k) for j, k < ``size`` by Gauss-Legendre on the window."""
    lo, hi = rec.window
    x, w = np.polynomial.legendre.leggauss(int(1.5 * rec.nodes) + 1)
    xs = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
    w = 0.5 * (hi - lo) * w
    P = rec.psi(xs, size)
    ints = P @ w
    drift = np.abs(ints - eps_total[:size]).max()
    if drift > 1e-9:
        raise PrecisionError(f"cumulative integration drift {drift:.2e}")
    E = C.chebval(x, eps_coeffs[:, :size]) - 0.5 * eps_total[:size, None]
    return (E * w) @ P.T


def build_workspace(p: Polynomial, n: int, epsilon: float = 0.5) -> KernelWorkspace:
    """Recurrence, D, M and the eps-antiderivatives for weight exp(-n V)."""
    m = p.degree // 2
    if n < 2 * m:
        raise DomainError(f"need n >= 2m = {2 * m}")
    Lb = n + 4 * m - 2
    rec = recurrence(p, n, K=Lb + m + 1, epsilon=epsilon)
    D = differentiation_matrix(rec, Lb, m)
    F, total = _eps_chebyshev(rec, Lb, rec.nodes)
    M = integration_matrix(rec, Lb, F, total)
    return KernelWorkspace(recurrence=rec, n=n, m=m, D=D, M=M, eps_coeffs=F, eps_total=total)


def eps_psi(ws: KernelWorkspace, j: int, x) -> np.ndarray:
    if not 0 <= j < ws.Lb:
        raise DomainError(f"level {j} outside 0..{ws.Lb - 1}")
    return ws.eps_psi(x)[j]


# ---------------------------------------------------------------------------
# T_n and kernels


def t_matrix_logdet(ws: KernelWorkspace, tol: float = 1e-8):
    """T_n from the corner of D_n M_n and from 1 - D12 M21; returns (T, log|det T|).

    Raises :class:`StructuralError` if the two constructions differ.
    """
    n = ws.n
    DM = ws.D[:n, :n] @ ws.M[:n, :n]
    corner = DM[np.ix_(ws.phi1, ws.phi1)]
    alt = np.eye(2 * ws.m - 1) - ws.block(ws.D, 1, 2) @ ws.block(ws.M, 2, 1)
    if np.abs(corner - alt).max() > tol:
        raise StructuralError(f"corner block and 1 - D12 M21 differ by {np.abs(corner - alt).max():.2e}")
    sign, logdet = np.linalg.slogdet(alt)
    return alt, float(logdet)


@dataclass(frozen=True)
class ScalarKernel:
    """S(lam, mu) = psi(lam)^T (W_psi psi(mu) + W_eps eps psi(mu))."""

    ws: KernelWorkspace = field(repr=False)
    W_psi: np.ndarray
    W_eps: np.ndarray

    def _right(self, mu, deriv=False):
        if deriv:     # d/dmu: psi -> D psi, eps psi -> psi
            return self.W_psi @ self.ws.dpsi(mu) + self.W_eps @ self.ws.psi(mu)
        return self.W_psi @ self.ws.psi(mu) + self.W_eps @ self.ws.eps_psi(mu)

    def __call__(self, lam, mu, d_mu: bool = False, eps_lam: bool = False):
        """Pointwise (broadcast) values; ``eps_lam`` applies eps to the first argument."""
        lam, mu = np.broadcast_arrays(np.asarray(lam, float), np.asarray(mu, float))
        left = self.ws.eps_psi(lam.ravel()) if eps_lam else self.ws.psi(lam.ravel())
        right = self._right(mu.ravel(), d_mu)
        return np.sum(left * right, axis=0).reshape(lam.shape)

    def grid(self, lam, mu, d_mu: bool = False, eps_lam: bool = False):
        """Values on the tensor grid lam x mu."""
        left = self.ws.eps_psi(np.ravel(lam)) if eps_lam else self.ws.psi(np.ravel(lam))
        return left.T @ self._right(np.ravel(mu), d_mu)

    def eps_form(self) -> np.ndarray:
        """Single coefficient matrix against eps psi(mu), using psi_k = sum_l D_kl eps psi_l."""
        L = self.ws.L
        if np.abs(self.W_psi[:, L:]).max(initial=0.0) > 0:
            raise StructuralError("W_psi uses levels beyond the exact range")
        return self.W_eps + self.W_psi @ self.ws.D


def reproducing_kernel(ws: KernelWorkspace) -> ScalarKernel:
    W = np.zeros((ws.Lb, ws.Lb))
    W[: ws.n, : ws.n] = np.eye(ws.n)
    return ScalarKernel(ws, W, np.zeros_like(W))


def _checked_inverse(A, what):
    s = np.linalg.svd(A, compute_uv=False)
    if s.min() < SINGULAR_TOL:
        raise InvertibilityError(f"{what} is singular (smallest singular value {s.min():.2e})")
    return np.linalg.inv(A)


def tracy_widom_S(ws: KernelWorkspace, beta: int, form: str = "dgkv") -> ScalarKernel:
    """S_{n,1} (beta=1) or S_{n/2,4} (beta=4) as a :class:`ScalarKernel`.

    ``form="dgkv"`` uses the corner-block formula with (2m-1)x(2m-1)
    inversions; ``form="explicit"`` inverts the full M_n or D_n.
    """
    n, Lb = ws.n, ws.Lb
    if beta not in (1, 4):
        raise DomainError("beta must be 1 or 4")
    if n % 2:
        raise DomainError("the beta = 1, 4 kernels need even n")
    Wp = np.zeros((Lb, Lb))
    We = np.zeros((Lb, Lb))
    p1, p2 = ws.phi1, ws.phi2
    D12, D21 = ws.block(ws.D, 1, 2), ws.block(ws.D, 2, 1)
    M11, M12, M22 = ws.block(ws.M, 1, 1), ws.block(ws.M, 1, 2), ws.block(ws.M, 2, 2)
    I = np.eye(2 * ws.m - 1)
    if form == "explicit":
        if beta == 1:
            # sign: M_n here is (eps psi_j, psi_k); the leading term must be +K_n
            We[:n, :n] = _checked_inverse(ws.M[:n, :n], "M_n")
        else:
            Dinv = _checked_inverse(ws.D[:n, :n], "D_n")
            Wp[:, :n] = -(ws.D[:n, :]).T @ Dinv
        return ScalarKernel(ws, Wp, We)
    if form != "dgkv":
        raise DomainError(f"unknown form {form!r}")
    Wp[:n, :n] = np.eye(n)
    if beta == 1:
        G_hat = D12 @ M22 @ _checked_inverse(I - D21 @ M12, "1 - D21 M12") @ D21
        We[np.ix_(p1, p2)] -= D12
        We[np.ix_(p1, p1)] -= G_hat
    else:
        G = -D21 @ _checked_inverse(I - M12 @ D21, "1 - M12 D21") @ M11 @ D12
        We[np.ix_(p2, p1)] += D21
        We[np.ix_(p2, p2)] -= G
    return ScalarKernel(ws, Wp, We)


# ---------------------------------------------------------------------------
# structural checks and the partition-function identity


def structural_report(ws: KernelWorkspace, n_test: int = 9) -> dict:
    """Residuals of the defining identities (all should be at rounding level)."""
    n, L = ws.n, ws.L
    D, M = ws.D, ws.M
    DM = D[:n, :] @ M[:, :L]
    j, k = np.indices(D.shape)
    x, w = ws.grid()
    P = ws.psi(x)[:L]
    gram = (P * w) @ P.T
    Kn = reproducing_kernel(ws)
    lo, hi = solve_support(ws.recurrence.potential)
    t = np.linspace(lo, hi, n_test)
    Kt = Kn.grid(t, x)
    repro = np.abs((Kt * w) @ Kt.T - Kn.grid(t, t)).max()
    DMn = D[:n, :n] @ M[:n, :n] - np.eye(n)
    rows = np.flatnonzero(np.abs(DMn).max(axis=1) > 1e-7)
    return {
        "DM_identity": float(np.abs(DM - np.eye(n, L)).max()),
        "D_skew": float(np.abs(D + D.T).max()),
        "M_skew": float(np.abs(M + M.T).max()),
        "band_max_outside": float(np.abs(D[np.abs(j - k) >= 2 * ws.m]).max(initial=0.0)),
        "gram": float(np.abs(gram - np.eye(L)).max()),
        "reproducing": float(repro),
        "delta_rows_in_corner": bool(np.all(rows >= n - 2 * ws.m + 1)),
    }


STRUCTURAL_TOLERANCES = {"DM_identity": 1e-7, "D_skew": 1e-10, "M_skew": 1e-10,
                         "band_max_outside": 0.0, "gram": 1e-9, "reproducing": 1e-8}


@dataclass(frozen=True)
class StojanovicReport:
    n: int
    det_T: float
    predicted: float
    relative_error: float
    log_Q1: float
    log_Q4: float
    log_Q2: float
    Gamma_log: float
    heine_error: float          # |Q_{n,2} gamma_n^2 / n! - 1| (Heine)
    det_M_error: float          # |det M_n / (Q_{n,1} Gamma_n / (n! 2^{n/2}))^2 - 1|

    def as_dict(self):
        return dict(self.__dict__)


def stojanovic_identity(p: Polynomial, n: int, ws: KernelWorkspace | None = None) -> StojanovicReport:
    """Compare det T_n with (Q_{n,1} Q_{n/2,4} / (Q_{n,2} (n/2)! 2^n))^2.

    Each Q_{k,beta} uses k variables, weight exp(-k beta V / 2) and
    |Delta|^beta, with (k, beta) = (n, 1), (n/2, 4), (n, 2); all three are
    computed by nested quadrature, so n <= 4.
    """
    if n % 2 or n < 2:
        raise DomainError("n must be even and >= 2")
    ws = build_workspace(p, n) if ws is None else ws
    _, logdet = t_matrix_logdet(ws)
    det_T = float(np.linalg.det(ws.T))
    lq1 = exact_log_partition(p, n, 1.0)
    lq4 = exact_log_partition(p, n // 2, 4.0)
    lq2 = exact_log_partition(p, n, 2.0)
    log_pred = 2.0 * (lq1 + lq4 - lq2 - gammaln(n // 2 + 1) - n * np.log(2.0))
    pred = float(np.exp(log_pred))
    G = ws.Gamma_log
    heine = abs(np.expm1(lq2 + 2.0 * G - gammaln(n + 1)))
    log_detM = np.linalg.slogdet(ws.M[:n, :n])[1]
    detM_err = abs(np.expm1(log_detM - 2.0 * (lq1 + G - gammaln(n + 1) - 0.5 * n * np.log(2.0))))
    return StojanovicReport(n=n, det_T=det_T, predicted=pred, relative_error=abs(det_T / pred - 1.0),
                            log_Q1=lq1, log_Q4=lq4, log_Q2=lq2, Gamma_log=G,
                            heine_error=float(heine), det_M_error=float(detM_err))
