"""Polynomial potentials, the Gaussian interpolation family and affine rescaling."""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Real

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DomainError, ParseError

MAX_DEGREE = 32


class Polynomial:
    """Real polynomial stored dense, constant term first.

    Trailing zero coefficients are dropped so that ``degree`` is the true
    degree (the zero polynomial has degree 0).

    >>> V = Polynomial([0, 0, 0.5])
    >>> V(2.0)
    2.0
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=float)).copy()
        if c.ndim != 1 or c.size == 0:
            raise ParseError("coefficients must be a non-empty flat list")
        if not np.all(np.isfinite(c)):
            raise ParseError("coefficients must be finite")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else c[:1]
        if c.size - 1 > MAX_DEGREE:
            raise DomainError(f"degree {c.size - 1} exceeds the supported maximum {MAX_DEGREE}")
        c.setflags(write=False)
        self.coeffs = c

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def m(self) -> int:
        """Half the degree (the ``m`` of a degree-2m potential)."""
        return self.degree // 2

    @property
    def leading(self) -> float:
        return float(self.coeffs[-1])

    def __call__(self, z, order: int = 0):
        return eval_potential(self, z, order)

    def derivative(self, order: int = 1) -> "Polynomial":
        if order == 0:
            return self
        if order > self.degree:
            return Polynomial([0.0])
        return Polynomial(npoly.polyder(self.coeffs, order))

    def is_even(self, tol: float = 0.0) -> bool:
        odd = self.coeffs[1::2]
        return bool(np.all(np.abs(odd) <= tol * max(1.0, np.abs(self.coeffs).max())))

    def compose_affine(self, shift: float, scale: float) -> "Polynomial":
        """Return the polynomial ``x -> p(shift + scale * x)``."""
        out = np.zeros(1)
        lin = np.array([shift, scale], dtype=float)
        for c in self.coeffs[::-1]:
            out = npoly.polyadd(npoly.polymul(out, lin), [c])
        return Polynomial(out)

    def __add__(self, other):
        if isinstance(other, Real):
            other = Polynomial([other])
        return Polynomial(npoly.polyadd(self.coeffs, other.coeffs))

    def __sub__(self, other):
        if isinstance(other, Real):
            other = Polynomial([other])
        return Polynomial(npoly.polysub(self.coeffs, other.coeffs))

    def __mul__(self, other):
        if isinstance(other, Real):
            return Polynomial(self.coeffs * float(other))
        return Polynomial(npoly.polymul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, Polynomial) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()})"

    def tolist(self) -> list[float]:
        return self.coeffs.tolist()


GAUSSIAN = Polynomial([0.0, 0.0, 0.5])


def eval_potential(p: Polynomial, z, order: int = 0):
    """Horner evaluation of the ``order``-th derivative of ``p`` at ``z``.

    Real input gives real output; complex input gives complex output.
    """
    if order < 0:
        raise DomainError("derivative order must be non-negative")
    c = p.coeffs
    if order:
        c = npoly.polyder(c, order) if order <= p.degree else np.zeros(1)
    z = np.asarray(z)
    out = np.zeros_like(z, dtype=np.result_type(z, float))
    for a in c[::-1]:
        out = out * z + a
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class PotentialFamily:
    """Linear family ``V_t = t V + (1 - t) V0`` with ``V0 = x^2/2`` by default."""

    target: Polynomial
    reference: Polynomial = GAUSSIAN

    def at(self, t: float) -> Polynomial:
        return interpolate(self, t)


def interpolate(fam: PotentialFamily, t: float) -> Polynomial:
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"interpolation parameter t={t} outside [0, 1]")
    c = npoly.polyadd(t * fam.target.coeffs, (1.0 - t) * fam.reference.coeffs)
    return Polynomial(c)


@dataclass(frozen=True)
class AffineMap:
    """``x = scale * (lam - shift)``; maps [a, b] onto [-2, 2]."""

    shift: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("affine scale must be strictly positive")

    @classmethod
    def from_interval(cls, a: float, b: float) -> "AffineMap":
        if not a < b:
            raise DomainError(f"need a < b, got [{a}, {b}]")
        return cls(shift=0.5 * (a + b), scale=4.0 / (b - a))

    def forward(self, lam):
        return self.scale * (np.asarray(lam) - self.shift)

    def inverse(self, x):
        return self.shift + np.asarray(x) / self.scale

    @property
    def is_identity(self) -> bool:
        return self.shift == 0.0 and self.scale == 1.0


def rescale_to_standard(p: Polynomial, a: float, b: float) -> tuple[Polynomial, AffineMap]:
    """Rewrite ``p`` in the variable ``x = 2 (lam - (a+b)/2) / (b-a)``.

    If [a, b] is the equilibrium support of ``p``, the rescaled potential
    has support [-2, 2].
    """
    amap = AffineMap.from_interval(a, b)
    return p.compose_affine(amap.shift, 1.0 / amap.scale), amap


@dataclass(frozen=True)
class GrowthCheck:
    passed: bool
    witness: str

    def __bool__(self):
        return self.passed


def check_growth(p: Polynomial) -> GrowthCheck:
    """Confinement test ``V(x) >= 2(1+eps) log(1+|x|)`` for large |x|.

    For polynomials this is a sign/degree test on the leading term.
    """
    d, lead = p.degree, p.leading
    if d == 0:
        return GrowthCheck(False, "constant potential: no confinement at +inf or -inf")
    if d % 2 == 1:
        side = "-inf" if lead > 0 else "+inf"
        return GrowthCheck(False, f"odd degree {d}: V -> -inf as x -> {side}")
    if lead < 0:
        return GrowthCheck(False, f"negative leading coefficient: V -> -inf as x -> +inf and -inf")
    return GrowthCheck(True, f"degree {d} with leading coefficient {lead:g} dominates the log")


def parse_potential(coeffs) -> Polynomial:
    """Build a potential from a config coefficient list, e.g. ``[0, 0, 0.5]``."""
    if isinstance(coeffs, str):
        try:
            coeffs = [float(s) for s in coeffs.replace(",", " ").split()]
        except ValueError as exc:
            raise ParseError(f"cannot parse coefficients {coeffs!r}") from exc
    if not isinstance(coeffs, (list, tuple, np.ndarray)) or len(coeffs) == 0:
        raise ParseError("coeffs must be a non-empty list of numbers")
    for c in coeffs:
        if isinstance(c, bool) or not isinstance(c, (Real, np.floating)):
            raise ParseError(f"coefficient {c!r} is not a real number")
    return Polynomial(coeffs)
