"""Exact small-n partition functions by nested Gauss quadrature.

The integrand of Q_{n,beta} is written on the ordered region
x_1 < x_2 < ... < x_n (times n!).  Each x_k runs over [x_{k-1}, R] and the
factor (x_k - x_{k-1})^beta is absorbed into a Gauss-Jacobi rule, so the
remaining integrand is smooth even for non-integer beta.  The order grows
geometrically until log Q stops moving.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln, logsumexp, roots_jacobi

from .errors import PrecisionError, UnsupportedSizeError
from .potential import Polynomial, eval_potential

MAX_EXACT_N = 4


def integration_window(p: Polynomial, n: int, beta: float, support=None, kappa=None,
                       drop: float = 40.0):
    """Interval outside of which a single eigenvalue's weight is below e^{-drop} of its peak."""
    from .equilibrium import solve_support

    a, b = support if support is not None else solve_support(p)
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    x = np.linspace(c - 40.0 * h - 10.0, c + 40.0 * h + 10.0, 40001)
    kappa = 0.5 * n * beta if kappa is None else kappa
    phi = -kappa * eval_potential(p, x) + beta * (n - 1) * np.log1p(np.abs(x - c) + 2.0 * h)
    keep = np.flatnonzero(phi > phi.max() - drop)
    return float(x[max(keep[0] - 1, 0)]), float(x[min(keep[-1] + 1, x.size - 1)])


def _ordered_sums(p: Polynomial, n: int, beta: float, kappa: float, lo: float, hi: float,
                  N: int, f=None):
    """Return (log Q, E sum f) on an N-per-variable tensor rule (E is None without f)."""
    xg, wg = np.polynomial.legendre.leggauss(N)
    x1 = lo + 0.5 * (hi - lo) * (xg + 1.0)
    lw1 = np.log(0.5 * (hi - lo) * wg) - kappa * eval_potential(p, x1)
    if n == 1:
        lq = float(logsumexp(lw1))
        return lq, (None if f is None else float(np.sum(np.exp(lw1 - lq) * f(x1))))
    uj, wj = roots_jacobi(N, 0.0, beta)      # weight (1 + u)^beta on [-1, 1]
    luj = np.log(wj)
    logs, fsum = [], []
    for i in range(N):
        pts = np.array([[x1[i]]])
        lw = np.array([lw1[i]])
        for k in range(1, n):
            prev = pts[:, -1]
            half = 0.5 * (hi - prev)
            new = prev[:, None] + half[:, None] * (1.0 + uj[None, :])
            l = (lw[:, None] + luj[None, :] + (beta + 1.0) * np.log(half)[:, None]
                 - kappa * eval_potential(p, new))
            for j in range(k - 1):
                l = l + beta * np.log(new - pts[:, j][:, None])
            pts = np.concatenate([np.repeat(pts, N, axis=0), new.reshape(-1, 1)], axis=1)
            lw = l.ravel()
        m = logsumexp(lw)
        logs.append(m)
        if f is not None:
            fsum.append(np.sum(np.exp(lw - m) * f(pts).sum(axis=1)))
    logs = np.asarray(logs)
    lq = logsumexp(logs)
    ef = None if f is None else float(np.sum(np.exp(logs - lq) * np.asarray(fsum)))
    return float(gammaln(n + 1) + lq), ef


def _converge(p, n, beta, kappa, window, rtol, N0, N_max, f=None):
    if n > MAX_EXACT_N:
        raise UnsupportedSizeError(f"exact quadrature supports n <= {MAX_EXACT_N}, got {n}")
    if n < 1:
        raise UnsupportedSizeError("n must be >= 1")
    if kappa is None:
        kappa = 0.5 * n * beta
    lo, hi = window if window is not None else integration_window(p, n, beta, kappa=kappa)
    N = N0
    prev = _ordered_sums(p, n, beta, kappa, lo, hi, N, f)
    while int(1.5 * N) <= N_max:
        N = int(1.5 * N)
        cur = _ordered_sums(p, n, beta, kappa, lo, hi, N, f)
        ok = abs(cur[0] - prev[0]) <= rtol * max(1.0, abs(cur[0]))
        if f is not None:
            ok = ok and abs(cur[1] - prev[1]) <= rtol * max(1.0, abs(cur[1]))
        if ok:
            return cur
        prev = cur
    raise PrecisionError(f"quadrature did not converge to {rtol} with {N_max} nodes per variable")


def exact_log_partition(p: Polynomial, n: int, beta: float, kappa: float | None = None,
                        window=None, rtol: float = 1e-10, N0: int = 24, N_max: int = 128) -> float:
    """log of int exp(-kappa sum V(x_i)) |Delta(x)|^beta dx for ``n <= 4``.

    ``kappa`` defaults to n beta / 2, which gives Q_{n,beta}.  ``window``
    restricts integration to an interval (e.g. sigma_eps); by default the
    whole line is covered up to an e^{-40} tail.
    """
    return _converge(p, n, beta, kappa, window, rtol, N0, N_max)[0]


def exact_linear_statistic(p: Polynomial, n: int, beta: float, f, kappa: float | None = None,
                           window=None, rtol: float = 1e-10, N0: int = 24, N_max: int = 128) -> float:
    """E sum f(lam_i) under the n <= 4 ensemble, by the same quadrature."""
    return _converge(p, n, beta, kappa, window, rtol, N0, N_max, f)[1]
