"""Sine-kernel limits and bulk convergence of the rescaled matrix kernels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import sici

from .equilibrium import equilibrium_measure
from .errors import DomainError
from .orthopoly import KernelWorkspace, build_workspace, reproducing_kernel, tracy_widom_S
from .potential import Polynomial

EDGE_DENSITY = 1e-3
FD_STEP = 1e-5
N_EPS_NODES = 48


def K_inf(t):
    """sin(pi t) / (pi t), equal to 1 at t = 0."""
    return np.sinc(t)


def K_inf_prime(t):
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < 1e-3
    ts = np.where(small, 1.0, t)
    out = (np.pi * ts * np.cos(np.pi * ts) - np.sin(np.pi * ts)) / (np.pi * ts ** 2)
    series = -np.pi ** 2 * t / 3.0 + np.pi ** 4 * t ** 3 / 30.0
    return np.where(small, series, out)


def K_inf_integral(t):
    """int_0^t K_inf = Si(pi t) / pi."""
    return sici(np.pi * np.asarray(t, dtype=float))[0] / np.pi


def eps(t):
    return 0.5 * np.sign(t)


@dataclass(frozen=True)
class LimitKernel:
    kind: int

    def __call__(self, xi, eta):
        return sine_limit(self.kind, xi, eta)


def sine_limit(kind: int, xi, eta):
    """K_inf (kind 2) or the 2x2 limits K_inf^(1), K_inf^(4); shape (..., 2, 2)."""
    d = np.asarray(xi, dtype=float) - np.asarray(eta, dtype=float)
    if kind == 2:
        return K_inf(d)
    if kind not in (1, 4):
        raise DomainError("kind must be 1, 2 or 4")
    out = np.empty(d.shape + (2, 2))
    out[..., 0, 0] = K_inf(d)
    out[..., 0, 1] = K_inf_prime(d)
    out[..., 1, 0] = K_inf_integral(d) - (eps(d) if kind == 1 else 0.0)
    out[..., 1, 1] = K_inf(-d)
    return out


def conjugate(A, lam: float):
    """A^(lam) = diag(lam^-1/2, lam^1/2) A diag(lam^1/2, lam^-1/2)."""
    A = np.array(A, dtype=float, copy=True)
    A[..., 0, 1] /= lam
    A[..., 1, 0] *= lam
    return A


@dataclass(frozen=True)
class RescaledSample:
    beta: int
    n: int
    lambda0: float
    q_n: float
    xi: np.ndarray
    eta: np.ndarray
    values: np.ndarray          # (P, 2, 2) or (P,) for beta = 2
    limit: np.ndarray
    eps_crosscheck: float       # max |eps S by convolution - eps S by -int_lam^mu S|

    @property
    def deviation(self) -> float:
        return float(np.abs(self.values - self.limit).max())


def _check_bulk(ws: KernelWorkspace, lam0: float, max_abs: float):
    eq = equilibrium_measure(ws.recurrence.potential)
    x0 = float(eq.to_standard(lam0))
    if abs(x0) > max_abs:
        raise DomainError(f"lambda0 = {lam0} is outside the bulk window |x| <= {max_abs} (standard coordinate)")
    rho = float(eq.density_original(lam0))
    if rho < EDGE_DENSITY:
        raise DomainError(f"rho(lambda0) = {rho:.2e} is below {EDGE_DENSITY}: too close to an edge")
    return rho


def _eps_by_integration(S, lam, mu):
    """-(int_lam^mu S(t, mu) dt) by Gauss-Legendre on each segment."""
    x, w = np.polynomial.legendre.leggauss(N_EPS_NODES)
    half = 0.5 * (mu - lam)
    t = 0.5 * (lam + mu)[:, None] + half[:, None] * x[None, :]
    vals = S(t, np.broadcast_to(mu[:, None], t.shape))
    return -(vals * w).sum(axis=1) * half


def rescaled_matrix_kernel(ws: KernelWorkspace, beta: int, lam0: float, xi, eta,
                           form: str = "dgkv", derivative: str = "fd",
                           max_abs: float = 1.5) -> RescaledSample:
    """(1/q_n) K^(q_n)(lam0 + xi/q_n, lam0 + eta/q_n) at the point pairs (xi, eta).

    beta = 2 gives the scalar (1/q_n) K_n.  For beta = 1, 4 the d/dmu entry
    uses centered differences with step 1e-5/q_n (``derivative="exact"``
    differentiates through D instead) and the eps-entry is computed by
    direct eps-convolution, cross-checked against -int_lam^mu S.
    """
    xi, eta = np.broadcast_arrays(np.asarray(xi, float).ravel(), np.asarray(eta, float).ravel())
    rho = _check_bulk(ws, lam0, max_abs)
    q = ws.n * rho
    lam, mu = lam0 + xi / q, lam0 + eta / q
    if beta == 2:
        vals = reproducing_kernel(ws)(lam, mu) / q
        return RescaledSample(2, ws.n, lam0, q, xi, eta, vals, sine_limit(2, xi, eta), 0.0)
    S = tracy_widom_S(ws, beta, form)
    out = np.empty(xi.shape + (2, 2))
    out[:, 0, 0] = S(lam, mu)
    out[:, 1, 1] = S(mu, lam)
    if derivative == "fd":
        h = FD_STEP / q
        out[:, 0, 1] = -(S(lam, mu + h) - S(lam, mu - h)) / (2.0 * h)
    elif derivative == "exact":
        out[:, 0, 1] = -S(lam, mu, d_mu=True)
    else:
        raise DomainError(f"unknown derivative method {derivative!r}")
    e_conv = S(lam, mu, eps_lam=True)
    e_int = _eps_by_integration(S, lam, mu)
    out[:, 1, 0] = e_conv - (eps(lam - mu) if beta == 1 else 0.0)
    vals = conjugate(out, q) / q
    return RescaledSample(beta, ws.n, lam0, q, xi, eta, vals, sine_limit(beta, xi, eta),
                          float(np.abs(e_conv - e_int).max()))


def square_grid(half_width: float = 2.0, size: int = 9):
    g = np.linspace(-half_width, half_width, size)
    X, Y = np.meshgrid(g, g, indexing="ij")
    return X.ravel(), Y.ravel()


@dataclass(frozen=True)
class DeviationTable:
    beta: int
    ns: np.ndarray
    deviations: np.ndarray
    exponent: float
    decreasing: bool
    flagged: bool               # some step grew by more than a factor 2

    def as_dict(self):
        return {"beta": self.beta, "n": self.ns.tolist(), "deviation": self.deviations.tolist(),
                "exponent": self.exponent, "decreasing": self.decreasing, "flagged": self.flagged}


def bulk_deviation(p: Polynomial, beta: int, ns=(20, 40, 80), lam0: float = 0.0,
                   half_width: float = 2.0, size: int = 9, form: str = "dgkv") -> DeviationTable:
    """Sup-norm deviation from the sine-kernel limit for each n, and the fitted log-log slope."""
    ns = np.asarray(ns, dtype=int)
    if ns.size < 3:
        raise DomainError("need at least three values of n")
    xi, eta = square_grid(half_width, size)
    devs = []
    for n in ns:
        ws = build_workspace(p, int(n))
        devs.append(rescaled_matrix_kernel(ws, beta, lam0, xi, eta, form=form).deviation)
    devs = np.asarray(devs)
    slope = float(np.polyfit(np.log(ns), np.log(devs), 1)[0])
    ratios = devs[1:] / devs[:-1]
    return DeviationTable(beta=beta, ns=ns, deviations=devs, exponent=slope,
                          decreasing=bool(np.all(ratios < 1.0)), flagged=bool(np.any(ratios > 2.0)))
