"""Jacobi theta kernels as truncated products.

Everything downstream is built from two kernels on the lattice Z + tau*Z,

    vt(u)  = theta_1(pi u) = 2 p^{1/8} sin(pi u) prod_j (1 - 2 p^j cos(2 pi u) + p^{2j})(1 - p^j)
    vt4(u) = theta_4(pi u) = prod_j (1 - 2 p^{j-1/2} cos(2 pi u) + p^{2j-1})(1 - p^j)

with nome p = exp(2 pi i tau), Im(tau) > 0.  The factors decay like p^j, so a
truncation length fixed once from the target precision is enough.  Arguments
with |Im u| beyond twice Im(tau) are reduced through the quasiperiodicity law
before the product is evaluated; the raw product loses accuracy out there.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi
IM_REDUCE_FACTOR = 2.0  # reduce once |Im u| > IM_REDUCE_FACTOR * Im tau


def truncation_length(p: complex, eps: float) -> int:
    """Product length giving relative truncation error below eps."""
    mag = abs(p)
    if not mag < 1.0:
        raise ValueError(f"nome must have |p| < 1, got |p| = {mag:.6g}")
    if mag == 0.0:
        return 4
    return max(4, math.ceil(math.log(eps) / math.log(mag)) + 4)


def _check_u(u: complex) -> complex:
    u = complex(u)
    if not (math.isfinite(u.real) and math.isfinite(u.imag)):
        raise ValueError(f"non-finite argument u = {u!r}")
    return u


def _reduce_argument(u: complex, p: complex):
    """Pull u back towards the real axis with the tau-period law.

    Returns (u_reduced, prefactor) with vt(u) = prefactor * vt(u_reduced);
    the same prefactor applies to vt4, whose tau-period law is identical.
    """
    tau = cmath.log(p) / (2j * math.pi)
    im_tau = tau.imag
    if abs(u.imag) <= IM_REDUCE_FACTOR * im_tau:
        return u, 1.0 + 0.0j
    m = round(u.imag / im_tau)
    ur = u - m * tau
    # vt(u_r + m tau) = (-1)^m exp(-i pi tau m^2 - 2 i pi m u_r) vt(u_r)
    pref = (-1.0) ** (m % 2) * cmath.exp(-1j * math.pi * tau * m * m - 2j * math.pi * m * ur)
    return ur, pref


def theta1(u, p: complex, terms: int | None = None, eps: float = 1e-14,
           eighth_p: complex | None = None):
    """theta_1(pi u) for nome p, |p| < 1.  Accepts scalars or ndarrays of u.

    The prefactor needs p^{1/8}; by default the principal root is used.
    Callers holding tau should pass eighth_p = exp(i pi tau / 4), which stays
    on the right branch when arg(p) wraps.
    """
    n = terms if terms is not None else truncation_length(p, eps)
    p8 = p**0.125 if eighth_p is None else eighth_p
    if isinstance(u, np.ndarray):
        return _theta1_array(u, p, n, p8)
    u, pref = _reduce_argument(_check_u(u), p)
    c = cmath.cos(TWO_PI * u)
    val = 2.0 * p8 * cmath.sin(math.pi * u)
    pj = 1.0 + 0.0j
    for _ in range(n):
        pj *= p
        val *= (1.0 - 2.0 * pj * c + pj * pj) * (1.0 - pj)
    return pref * val


def theta4(u, p: complex, terms: int | None = None, eps: float = 1e-14,
           sqrt_p: complex | None = None):
    """theta_4(pi u) for nome p, |p| < 1.  Accepts scalars or ndarrays of u.

    The half-integer powers p^{j-1/2} need a square root of p; by default the
    principal one.  Callers holding tau should pass sqrt_p = exp(i pi tau),
    which matters once arg(p) wraps (e.g. for a squared nome).
    """
    n = terms if terms is not None else truncation_length(p, eps)
    sqp = p**0.5 if sqrt_p is None else sqrt_p
    if isinstance(u, np.ndarray):
        return _theta4_array(u, p, n, sqp)
    u, pref = _reduce_argument(_check_u(u), p)
    c = cmath.cos(TWO_PI * u)
    val = 1.0 + 0.0j
    pj = 1.0 + 0.0j
    for _ in range(n):
        pj *= p
        half = pj / sqp
        val *= (1.0 - 2.0 * half * c + half * half) * (1.0 - pj)
    return pref * val


def _theta1_array(u: np.ndarray, p: complex, n: int, p8: complex) -> np.ndarray:
    truncation_length(p, 1e-14)  # validates the nome
    u = np.asarray(u, dtype=complex)
    if not np.all(np.isfinite(u)):
        raise ValueError("non-finite entries in u")
    j = np.arange(1, n + 1)
    pj = p**j
    c = np.cos(TWO_PI * u)[..., None]
    factors = (1.0 - 2.0 * pj * c + pj * pj) * (1.0 - pj)
    return 2.0 * p8 * np.sin(math.pi * u) * factors.prod(axis=-1)


def _theta4_array(u: np.ndarray, p: complex, n: int, sqp: complex) -> np.ndarray:
    truncation_length(p, 1e-14)
    u = np.asarray(u, dtype=complex)
    if not np.all(np.isfinite(u)):
        raise ValueError("non-finite entries in u")
    j = np.arange(1, n + 1)
    pjh = p**j / sqp
    pj = p**j
    c = np.cos(TWO_PI * u)[..., None]
    factors = (1.0 - 2.0 * pjh * c + pjh * pjh) * (1.0 - pj)
    return factors.prod(axis=-1)


@dataclass(frozen=True)
class ThetaParams:
    """Nome, truncation and precision bundle for the theta kernels.

    Invariants enforced at construction: Im(tau) > 0 (hence |p| < 1) and a
    truncation length of at least ceil(log eps / log |p|) + 4 guard terms.
    """

    tau: complex
    truncation_terms: int | None = None
    precision_eps: float = 1e-14
    _cache1: dict = field(default_factory=dict, repr=False, compare=False)
    _cache4: dict = field(default_factory=dict, repr=False, compare=False)
    _derived: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        tau = complex(self.tau)
        if not tau.imag > 0:
            raise ValueError(f"Im(tau) must be positive, got tau = {tau!r}")
        if not 0 < self.precision_eps < 1:
            raise ValueError("precision_eps must lie in (0, 1)")
        object.__setattr__(self, "tau", tau)
        floor = truncation_length(self.p, self.precision_eps)
        if self.truncation_terms is None:
            object.__setattr__(self, "truncation_terms", floor)
        elif self.truncation_terms < floor:
            raise ValueError(
                f"truncation_terms = {self.truncation_terms} below required {floor}"
            )

    @property
    def p(self) -> complex:
        return cmath.exp(2j * math.pi * self.tau)

    @property
    def scale(self) -> float:
        """Magnitude scale of the kernels, used by zero/denominator guards."""
        s = self._derived.get("scale")
        if s is None:
            s = abs(theta1(0.25, self.p, self.truncation_terms))
            self._derived["scale"] = s
        return s

    @property
    def squared_nome(self) -> "ThetaParams":
        """Parameters at nome p^2 (tau -> 2 tau), for the vt4(., p^2) factors."""
        sq = self._derived.get("squared")
        if sq is None:
            sq = ThetaParams(2 * self.tau, None, self.precision_eps)
            self._derived["squared"] = sq
        return sq

    @property
    def eighth_p(self) -> complex:
        return cmath.exp(1j * math.pi * self.tau / 4.0)

    @property
    def sqrt_p(self) -> complex:
        return cmath.exp(1j * math.pi * self.tau)

    def th1(self, u: complex) -> complex:
        key = complex(u)
        val = self._cache1.get(key)
        if val is None:
            val = theta1(key, self.p, self.truncation_terms, eighth_p=self.eighth_p)
            self._cache1[key] = val
        return val

    def th4(self, u: complex) -> complex:
        key = complex(u)
        val = self._cache4.get(key)
        if val is None:
            val = theta4(key, self.p, self.truncation_terms, sqrt_p=self.sqrt_p)
            self._cache4[key] = val
        return val

    def is_zero(self, value: complex) -> bool:
        """Treat |value| below 1e-12 of the kernel scale as an exact zero."""
        return abs(value) < 1e-12 * self.scale


def _rel(diff: complex, *refs: complex) -> float:
    mag = max(abs(r) for r in refs)
    if mag < 1e-300:
        return 0.0
    return abs(diff) / mag


def quasiperiodicity_residuals(
    u: complex, params: ThetaParams, printed_exponent: bool = False
) -> np.ndarray:
    """Relative residuals of the four one- and tau-period laws at u.

    The tau-period multiplier is -exp(-i pi tau - 2 i pi u).  With
    ``printed_exponent=True`` the u-independent variant -exp(-i pi tau -
    2 i pi tau) is used instead, as a diagnostic; it does not satisfy the
    period law away from special points, and the residual reports by how much.
    Both sides vanishing within the zero guard is reported as residual 0.
    """
    tau, p, n = params.tau, params.p, params.truncation_terms
    t1 = lambda x: theta1(x, p, n)
    t4 = lambda x: theta4(x, p, n)
    if printed_exponent:
        mult = -cmath.exp(-1j * math.pi * tau - 2j * math.pi * tau)
    else:
        mult = -cmath.exp(-1j * math.pi * tau - 2j * math.pi * u)

    pairs = [
        (t1(u + 1), -t1(u)),
        (t1(u + tau), mult * t1(u)),
        (t4(u + 1), t4(u)),
        (t4(u + tau), mult * t4(u)),
    ]
    out = np.empty(4)
    for k, (lhs, rhs) in enumerate(pairs):
        if params.is_zero(lhs) and params.is_zero(rhs):
            out[k] = 0.0
        else:
            out[k] = _rel(lhs - rhs, lhs, rhs)
    return out
