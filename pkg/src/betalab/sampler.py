"""Metropolis sampling of the beta-ensemble and loop-equation diagnostics.

The target on the truncated domain sigma_eps = [a - eps, b + eps]^n is

    log p(lam) = -(n beta / 2) sum V_h(lam_i) + beta sum_{i<j} log|lam_i - lam_j|,

with V_h = V + h/n.  Each chain owns a numpy Generator spawned from the
batch seed; the random numbers are drawn in numpy and consumed by a compiled
kernel, so results depend only on (seed, config), not on thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numba
import numpy as np

from .equilibrium import EquilibriumMeasure, equilibrium_measure
from .errors import DomainError, MixingError, PrecisionError
from .exact import exact_log_partition
from .potential import GAUSSIAN, Polynomial, eval_potential

N_BATCHES = 32
BLOCK = 256          # sweeps per kernel call (random numbers are drawn per block)
TARGET_ACCEPT = (0.3, 0.5)
MIXING_LIMITS = (0.05, 0.95)


@lru_cache(maxsize=64)
def _equilibrium(p: Polynomial) -> EquilibriumMeasure:
    return equilibrium_measure(p)


@dataclass(frozen=True)
class EnsembleConfig:
    """Parameters of the sampled ensemble.

    The proposal domain is the support [a, b] of the equilibrium measure of
    ``potential`` widened by ``epsilon`` on each side.
    """

    n: int
    beta: float
    potential: Polynomial = GAUSSIAN
    epsilon: float = 0.5
    h: Polynomial | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if not isinstance(self.potential, Polynomial):
            raise DomainError("potential must be a Polynomial")

    @property
    def equilibrium(self) -> EquilibriumMeasure:
        return _equilibrium(self.potential)

    @property
    def domain(self) -> tuple[float, float]:
        a, b = self.equilibrium.support
        return a - self.epsilon, b + self.epsilon

    @property
    def V_h(self) -> Polynomial:
        if self.h is None:
            return self.potential
        return self.potential + self.h * (1.0 / self.n)

    def as_dict(self):
        return {"n": self.n, "beta": self.beta, "coeffs": self.potential.tolist(),
                "epsilon": self.epsilon, "h": None if self.h is None else self.h.tolist()}


@dataclass
class SampleBatch:
    config: EnsembleConfig
    chains: int
    steps: int
    burnin: int
    seed: int
    thin: int
    configurations: np.ndarray      # (chains, retained, n)
    acceptance_rate: float
    chain_acceptance: np.ndarray = field(repr=False)
    step_sizes: np.ndarray = field(repr=False)

    @property
    def n_samples(self) -> int:
        return self.configurations.shape[0] * self.configurations.shape[1]


@dataclass(frozen=True)
class LinStatEstimate:
    mean: float
    variance: float
    stderr: float
    f: str = "f"

    def as_dict(self):
        return {"mean": self.mean, "variance": self.variance, "stderr": self.stderr, "f": self.f}


# ---------------------------------------------------------------------------
# kernel


@numba.njit(cache=True, nogil=True)
def _horner(c, x):
    out = 0.0
    for k in range(c.size - 1, -1, -1):
        out = out * x + c[k]
    return out


@numba.njit(cache=True, nogil=True)
def _metropolis_block(lam, step, coeffs, kappa, beta, lo, hi, normals, uniforms, sites,
                      out, thin, phase):
    """Run ``normals.shape[0]`` sweeps in place; store every ``thin``-th one into ``out``.

    Returns (accepted moves, stored rows).  ``phase`` is the sweep counter
    modulo ``thin`` at entry.
    """
    n = lam.size
    acc = 0
    stored = 0
    for s in range(normals.shape[0]):
        for k in range(n):
            i = sites[s, k]
            old = lam[i]
            new = old + step * normals[s, k]
            if new <= lo or new >= hi:
                continue
            dlog = -kappa * (_horner(coeffs, new) - _horner(coeffs, old))
            for j in range(n):
                if j != i:
                    dn = abs(new - lam[j])
                    if dn == 0.0:
                        dlog = -np.inf
                        break
                    dlog += beta * (math.log(dn) - math.log(abs(old - lam[j])))
            if dlog >= 0.0 or uniforms[s, k] < math.exp(dlog):
                lam[i] = new
                acc += 1
        phase += 1
        if phase == thin:
            phase = 0
            if stored < out.shape[0]:
                out[stored, :] = lam
                stored += 1
    return acc, stored


def _initial_configuration(cfg: EnsembleConfig) -> np.ndarray:
    """Quantiles of the equilibrium measure (a deterministic, well-spread start)."""
    eq = cfg.equilibrium
    x = np.linspace(-2.0, 2.0, 4001)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (eq.density(x[1:]) + eq.density(x[:-1])) * np.diff(x))])
    cdf /= cdf[-1]
    q = (np.arange(cfg.n) + 0.5) / cfg.n
    return eq.from_standard(np.interp(q, cdf, x)).astype(float)


def _run_one_chain(cfg: EnsembleConfig, rng: np.random.Generator, steps: int, burnin: int,
                   thin: int, step0: float):
    n = cfg.n
    coeffs = np.ascontiguousarray(cfg.V_h.coeffs, dtype=float)
    kappa = 0.5 * n * cfg.beta
    lo, hi = cfg.domain
    lam = _initial_configuration(cfg)
    step = step0
    dummy = np.empty((0, n))

    done = 0
    while done < burnin:
        m = min(BLOCK, burnin - done)
        normals = rng.standard_normal((m, n))
        uniforms = rng.random((m, n))
        sites = rng.integers(0, n, size=(m, n))
        acc, _ = _metropolis_block(lam, step, coeffs, kappa, cfg.beta, lo, hi, normals, uniforms,
                                   sites, dummy, 1, 0)
        rate = acc / (m * n)
        if not TARGET_ACCEPT[0] <= rate <= TARGET_ACCEPT[1]:
            step *= float(np.clip(rate / 0.4, 0.5, 2.0))
        done += m

    production = steps - burnin
    out = np.empty((production // thin, n))
    accepted = 0
    stored = 0
    phase = 0
    done = 0
    while done < production:
        m = min(BLOCK, production - done)
        normals = rng.standard_normal((m, n))
        uniforms = rng.random((m, n))
        sites = rng.integers(0, n, size=(m, n))
        acc, k = _metropolis_block(lam, step, coeffs, kappa, cfg.beta, lo, hi, normals, uniforms,
                                   sites, out[stored:], thin, phase)
        accepted += acc
        stored += k
        phase = (phase + m) % thin
        done += m
    return out[:stored], accepted / max(1, production * n), step


def run_chains(cfg: EnsembleConfig, chains: int = 4, steps: int = 20000, burnin: int | None = None,
               seed: int = 0, thin: int | None = None, threads: int = 1,
               max_stored: int = 8192) -> SampleBatch:
    """Single-site random-walk Metropolis chains for the ensemble ``cfg``.

    ``steps`` counts sweeps (n site proposals each) per chain, including
    ``burnin`` (default 20%).  During burn-in the step size is tuned so the
    acceptance rate lands in [0.3, 0.5].  Every ``thin``-th production sweep
    is kept (default: enough thinning to keep at most ``max_stored`` per
    chain).

    Raises
    ------
    MixingError
        If the production acceptance rate of any chain is outside [0.05, 0.95].
    """
    if chains < 1 or steps < 2:
        raise DomainError("need chains >= 1 and steps >= 2")
    if burnin is None:
        burnin = steps // 5
    if not 0 <= burnin < steps:
        raise DomainError("burnin must lie in [0, steps)")
    production = steps - burnin
    if thin is None:
        thin = max(1, -(-production // max_stored))
    if seed < 0 or seed >= 2 ** 64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    a, b = cfg.equilibrium.support
    step0 = 0.5 * (b - a) / cfg.n
    rngs = [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(chains)]

    def work(k):
        return _run_one_chain(cfg, rngs[k], steps, burnin, thin, step0)

    if threads > 1 and chains > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(chains)))
    else:
        results = [work(k) for k in range(chains)]

    rates = np.array([r[1] for r in results])
    bad = np.flatnonzero((rates < MIXING_LIMITS[0]) | (rates > MIXING_LIMITS[1]))
    if bad.size:
        raise MixingError(f"acceptance {rates[bad[0]]:.3f} of chain {bad[0]} outside "
                          f"[{MIXING_LIMITS[0]}, {MIXING_LIMITS[1]}] after tuning")
    m = min(r[0].shape[0] for r in results)
    configs = np.stack([r[0][:m] for r in results])
    return SampleBatch(config=cfg, chains=chains, steps=steps, burnin=burnin, seed=seed, thin=thin,
                       configurations=configs, acceptance_rate=float(rates.mean()),
                       chain_acceptance=rates, step_sizes=np.array([r[2] for r in results]))


# ---------------------------------------------------------------------------
# estimators


def batch_means(values: np.ndarray, n_batches: int = N_BATCHES) -> float:
    """Standard error of the grand mean of ``values`` (chains, samples).

    Each chain is cut into contiguous batches so no batch straddles two
    chains; in total at least ``n_batches`` batches are used when possible.
    """
    values = np.asarray(values)
    chains, m = values.shape
    per = max(1, min(m, -(-n_batches // chains)))
    size = m // per
    if size == 0:
        raise PrecisionError("not enough samples for batch means")
    means = values[:, : per * size].reshape(chains, per, size).mean(axis=2).ravel()
    if means.size < 2:
        raise PrecisionError("need at least two batches for an error estimate")
    return float(np.std(means, ddof=1) / math.sqrt(means.size))


def _name(f) -> str:
    return getattr(f, "__name__", None) or repr(f)


def _statistic_values(batch: SampleBatch, f) -> np.ndarray:
    if batch.configurations.size == 0:
        raise DomainError("empty sample batch")
    vals = f(batch.configurations) if not isinstance(f, Polynomial) else eval_potential(f, batch.configurations)
    vals = np.broadcast_to(np.asarray(vals, dtype=float), batch.configurations.shape)
    return vals.sum(axis=-1)


def linear_statistic(batch: SampleBatch, f) -> LinStatEstimate:
    """Mean and variance of N_n[f] = sum_i f(lam_i), with batch-means stderr of the mean.

    ``f`` is a vectorized callable or a :class:`Polynomial`.
    """
    s = _statistic_values(batch, f)
    mean = float(s.mean())
    var = float(np.mean((s - mean) ** 2))
    se = batch_means(s) if var > 0 else 0.0
    return LinStatEstimate(mean=mean, variance=var, stderr=se, f=_name(f))


def connected_kernel(batch: SampleBatch, f) -> float:
    """int int k_n(lam, mu) f(lam) f(mu) from empirical one- and two-point sums.

    Uses n(n-1) E[f f]_pairs - (n E f)^2 + n E f^2; algebraically equal to
    the variance of N_n[f].
    """
    if batch.configurations.size == 0:
        raise DomainError("empty sample batch")
    fv = f(batch.configurations) if not isinstance(f, Polynomial) else eval_potential(f, batch.configurations)
    fv = np.broadcast_to(np.asarray(fv, dtype=float), batch.configurations.shape)
    s1 = fv.sum(axis=-1)
    s2 = (fv ** 2).sum(axis=-1)
    pairs = np.mean(s1 ** 2 - s2)
    return float(pairs - np.mean(s1) ** 2 + np.mean(s2))


def _check_z(batch: SampleBatch, z, d: float) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    lo, hi = batch.config.domain
    dist = np.hypot(np.maximum(0.0, np.maximum(lo - z.real, z.real - hi)), z.imag)
    if np.any(dist < d):
        raise DomainError(f"z within {d} of the sampling domain [{lo}, {hi}]")
    return z


def _complex_stderr(vals: np.ndarray) -> float:
    return math.hypot(batch_means(vals.real), batch_means(vals.imag))


@dataclass(frozen=True)
class StieltjesEstimate:
    z: np.ndarray
    g_n: np.ndarray
    g: np.ndarray
    u_n: np.ndarray
    stderr: np.ndarray      # of u_n (modulus of the real/imag stderrs)


def empirical_stieltjes(batch: SampleBatch, z, d: float = 0.1) -> StieltjesEstimate:
    """g_n(z) = (1/n) E sum 1/(z - lam_i) and u_n = n (g_n - g) with error bars."""
    z = _check_z(batch, z, d)
    n = batch.config.n
    lam = batch.configurations
    gn, g, se = [], [], []
    for zk in z:
        s = (1.0 / (zk - lam)).sum(axis=-1)
        gn.append(s.mean() / n)
        se.append(_complex_stderr(s))           # n * stderr(S/n)
        g.append(batch.config.equilibrium.stieltjes_original(zk))
    gn, g = np.array(gn), np.array(g, dtype=complex)
    return StieltjesEstimate(z=z, g_n=gn, g=g, u_n=n * (gn - g), stderr=np.array(se))


@dataclass(frozen=True)
class LoopResidual:
    z: np.ndarray
    residual: np.ndarray
    stderr: np.ndarray
    terms: dict

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.residual)


def loop_residual(batch: SampleBatch, z, d: float = 0.1, min_samples: int = 2 * N_BATCHES) -> LoopResidual:
    """Monte Carlo residual of the exact finite-n loop equation at each z.

    With S1 = sum 1/(z - lam_i), S2 = sum 1/(z - lam_i)^2,
    the equation reads E[R] = 0 for

        R = S1^2/n^2 - V'(z) S1/n + sum V(z, lam_i)/n - sum h'(lam_i)/(z - lam_i)/n^2
            + (2/beta - 1) S2/n^2,

    where the pair term enters through S1^2 - S2 and delta_n collects the
    connected part.  Only the truncation boundary term (exponentially small)
    is neglected.
    """
    if batch.n_samples < min_samples:
        raise PrecisionError(f"need at least {min_samples} samples for pair statistics, have {batch.n_samples}")
    z = _check_z(batch, z, d)
    cfg = batch.config
    n, beta = cfg.n, cfg.beta
    V = cfg.potential
    lam = batch.configurations
    dV_lam = eval_potential(V, lam, 1)
    dh_lam = eval_potential(cfg.h, lam, 1) if cfg.h is not None else np.zeros_like(lam)
    res, se = [], []
    terms = {"g_n": [], "delta_n": []}
    for zk in z:
        inv = 1.0 / (zk - lam)
        s1 = inv.sum(axis=-1)
        s2 = (inv ** 2).sum(axis=-1)
        dVz = eval_potential(V, zk, 1)
        sv = ((dVz - dV_lam) * inv).sum(axis=-1)
        sh = (dh_lam * inv).sum(axis=-1)
        r = s1 ** 2 / n ** 2 - dVz * s1 / n + sv / n - sh / n ** 2 + (2.0 / beta - 1.0) * s2 / n ** 2
        res.append(r.mean())
        se.append(_complex_stderr(r))
        terms["g_n"].append(s1.mean() / n)
        terms["delta_n"].append(np.mean(s1 ** 2) - s1.mean() ** 2)
    return LoopResidual(z=z, residual=np.array(res), stderr=np.array(se),
                        terms={k: np.array(v) for k, v in terms.items()})


def exact_partition(cfg: EnsembleConfig, truncate: bool = False, rtol: float = 1e-10) -> float:
    """log Q_{n,beta} for ``n <= 4`` by nested Gauss quadrature.

    With ``truncate`` the integral is restricted to the sampling domain
    sigma_eps; otherwise the whole line is used (the quantity the Selberg
    formula gives).
    """
    window = cfg.domain if truncate else None
    return exact_log_partition(cfg.V_h, cfg.n, cfg.beta, window=window, rtol=rtol)
