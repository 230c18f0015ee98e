"""Elliptic Boltzmann weight functions and the 9x9 dynamical R-matrix.

The matrix acts on C^3 (x) C^3 in the basis (e1e1, e1e2, ..., e3e3), carries a
dynamical variable q besides the spectral parameter u, and is of zero weight
for h = diag(1, 0, -1).  At u = 0 it degenerates to the permutation operator.
Residual evaluators for unitarity and the dynamical Yang-Baxter equation on
the 27-dimensional triple product live here as well.

Branch policy: each square root is the principal root of its complete
radicand.  Radicands within ``branch_guard`` of the negative real axis are
recorded in the caller's flag list (samplers reject such points); evaluation
still proceeds, so diagnostics can probe suspect points directly.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .errors import DenominatorNearZero
from .theta import ThetaParams

H_WEIGHTS = np.array([1, 0, -1])


@dataclass(frozen=True)
class CouplingParams:
    """Coupling constant eta together with the theta kernel parameters.

    eta must be generic: 2 eta, 3 eta + 1/2 and 6 eta may not sit on theta
    zeros, which is checked at construction.
    """

    eta: complex
    theta: ThetaParams
    den_guard: float = 1e-8
    branch_guard: float = 1e-6
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "eta", complex(self.eta))
        if self.eta == 0:
            raise ValueError("eta must be nonzero")
        th = self.theta.th1
        for label, arg in (("vt(2 eta)", 2 * self.eta),
                           ("vt(3 eta + 1/2)", 3 * self.eta + 0.5),
                           ("vt(6 eta)", 6 * self.eta)):
            if abs(th(arg)) < self.den_guard * self.theta.scale:
                raise ValueError(f"eta not generic: {label} vanishes")

    @property
    def two_eta(self) -> complex:
        return 2 * self.eta

    def den(self, value: complex, label: str) -> complex:
        if abs(value) < self.den_guard * self.theta.scale:
            raise DenominatorNearZero(label, abs(value))
        return value

    def sqrt(self, radicand: complex, label: str, flags: list | None) -> complex:
        """Principal square root, flagging radicands that hug the cut."""
        if radicand.real < 0 and abs(radicand.imag) <= self.branch_guard * abs(radicand):
            if flags is not None:
                flags.append(label)
        return cmath.sqrt(radicand)


def weight_g(pars: CouplingParams, u: complex) -> complex:
    th, e = pars.theta.th1, pars.eta
    return th(3 * e + 0.5 - u) * th(u - 2 * e) / (th(3 * e + 0.5) * th(-2 * e))


def weight_alpha(pars: CouplingParams, q1: complex, q2: complex, u: complex) -> complex:
    th, e = pars.theta.th1, pars.eta
    q12 = q1 - q2
    den = pars.den(th(q12), f"vt(q12) in alpha, q12={q12:.4g}")
    return th(3 * e + 0.5 - u) * th(q12 - u) / (th(3 * e + 0.5) * den)


def weight_beta(pars: CouplingParams, q1: complex, q2: complex, u: complex,
                flags: list | None = None) -> complex:
    th, e = pars.theta.th1, pars.eta
    q12 = q1 - q2
    den = pars.den(th(q12), f"vt(q12) in beta, q12={q12:.4g}")
    rad = th(q12 - 2 * e) * th(q12 + 2 * e) / den**2
    root = pars.sqrt(rad, "beta radicand", flags)
    return th(3 * e + 0.5 - u) * th(u) / (th(-2 * e) * th(3 * e + 0.5)) * root


def big_g(pars: CouplingParams, q: complex, flags: list | None = None) -> complex:
    """Piecewise gauge factor: 1 at q = eta, a theta ratio elsewhere.

    The value at q = eta is set by fiat, not as a limit; points closer than
    1e-6 to eta (but not within the 1e-10 exact window) are ill-conditioned
    and rejected.
    """
    th = pars.theta.th1
    th4sq = pars.theta.squared_nome.th4
    e = pars.eta
    gap = abs(q - e)
    if gap < 1e-10:
        return 1.0 + 0.0j
    if gap < 1e-6:
        raise DenominatorNearZero(f"big_g ill-conditioned near q=eta (|q-eta|={gap:.2e})", gap)
    den1 = pars.den(th(q), f"vt(q) in G, q={q:.4g}")
    den2 = pars.den(th4sq(2 * q), "vt4(2q, p^2) in G")
    return th(q - 2 * e) * th4sq(2 * q - 4 * e) / (den1 * den2)


def weight_gamma(pars: CouplingParams, q1: complex, q2: complex, u: complex,
                 flags: list | None = None) -> complex:
    th, e = pars.theta.th1, pars.eta
    den = pars.den(th(q1 + q2 - 2 * e), f"vt(q1+q2-2eta) in gamma")
    rad = big_g(pars, q1, flags) * big_g(pars, q2, flags)
    root = pars.sqrt(rad, "gamma radicand G(q1)G(q2)", flags)
    return th(u) * th(q1 + q2 + e + 0.5 - u) / (th(3 * e + 0.5) * den) * root


def weight_delta(pars: CouplingParams, q: complex, u: complex,
                 flags: list | None = None) -> complex:
    th, e = pars.theta.th1, pars.eta
    den = pars.den(th(2 * q - 2 * e), "vt(2q-2eta) in delta")
    first = th(3 * e + 0.5 - u) * th(2 * q - 2 * e - u)
    second = th(u) * th(2 * q + e + 0.5 - u) * big_g(pars, q, flags)
    return (first + second) / (th(3 * e + 0.5) * den)


def weight_epsilon(pars: CouplingParams, q: complex, u: complex,
                   flags: list | None = None) -> complex:
    th, e = pars.theta.th1, pars.eta
    c1 = th(3 * e + 0.5)
    c6 = th(6 * e)
    first = th(3 * e + 0.5 + u) * th(6 * e - u) / (c1 * c6)
    dqm = pars.den(th(q - e), "vt(q-eta) in epsilon")
    dqp = pars.den(th(q + e), "vt(q+eta) in epsilon")
    bracket = (th(q + 5 * e) / dqm * big_g(pars, q, flags)
               + th(q - 5 * e) / dqp * big_g(pars, -q, flags))
    return first - th(u) * th(3 * e + 0.5 - u) / (c1 * c6) * bracket


def ratio_y(pars: CouplingParams, q: complex, u: complex,
            flags: list | None = None) -> complex:
    num = weight_gamma(pars, -q, q, u, flags)
    den = pars.den(weight_gamma(pars, pars.eta, q, u, flags), "gamma(eta,q,u) in y")
    return num / den


def ratio_z(pars: CouplingParams, q: complex, u: complex,
            flags: list | None = None) -> complex:
    den = pars.den(weight_beta(pars, pars.eta, q, u, flags), "beta(eta,q,u) in z")
    return weight_g(pars, u) / den


def ratio_omega(pars: CouplingParams, u: complex) -> complex:
    """Closed form of the exchange ratio; independent of q."""
    th, e = pars.theta.th1, pars.eta
    den = pars.den(th(u + 0.5 + e), "vt(u+1/2+eta) in omega")
    return th(u + 0.5 - e) / den


def ratio_omega_defining(pars: CouplingParams, q: complex, u: complex,
                         flags: list | None = None) -> complex:
    """The defining ratio of the exchange factor, before the q-independence
    collapse; used to certify that it agrees with the closed form."""
    g_u = weight_g(pars, u)
    gam_qmq = weight_gamma(pars, q, -q, u, flags)
    eps = weight_epsilon(pars, q, u, flags)
    gam_qe = weight_gamma(pars, q, pars.eta, u, flags)
    gam_emq = weight_gamma(pars, pars.eta, -q, u, flags)
    den = pars.den(eps * gam_qmq - gam_qe * gam_emq, "omega defining denominator")
    return g_u * gam_qmq / den


# (coefficient, aux-pair placement) table: entry c * E_ab (x) E_cd of the
# matrix goes to row 3a+c, column 3b+d (0-based letters).
def _terms(pars: CouplingParams, q: complex, u: complex, flags: list | None):
    e = pars.eta
    al = lambda x, y: weight_alpha(pars, x, y, u)
    be = lambda x, y: weight_beta(pars, x, y, u, flags)
    ga = lambda x, y: weight_gamma(pars, x, y, u, flags)
    return [
        (weight_g(pars, u), 0, 0, 0, 0),
        (weight_g(pars, u), 2, 2, 2, 2),
        (weight_epsilon(pars, q, u, flags), 1, 1, 1, 1),
        (al(e, q), 0, 1, 1, 0),
        (al(q, e), 1, 0, 0, 1),
        (al(-q, e), 1, 2, 2, 1),
        (al(e, -q), 2, 1, 1, 2),
        (be(e, q), 1, 1, 0, 0),
        (be(q, e), 0, 0, 1, 1),
        (be(-q, e), 2, 2, 1, 1),
        (be(e, -q), 1, 1, 2, 2),
        (ga(-q, q), 2, 2, 0, 0),
        (ga(-q, e), 1, 2, 1, 0),
        (ga(e, q), 2, 1, 0, 1),
        (ga(q, -q), 0, 0, 2, 2),
        (ga(q, e), 1, 0, 1, 2),
        (ga(e, -q), 0, 1, 2, 1),
        (weight_delta(pars, q, u, flags), 2, 0, 0, 2),
        (weight_delta(pars, -q, u, flags), 0, 2, 2, 0),
    ]


def build_r(pars: CouplingParams, q: complex, u: complex,
            flags: list | None = None) -> np.ndarray:
    """The 9x9 dynamical matrix at (q, u); 19 structurally nonzero entries."""
    out = np.zeros((9, 9), dtype=complex)
    for coeff, a, b, c, d in _terms(pars, q, u, flags):
        out[3 * a + c, 3 * b + d] += coeff
    return out


def permutation_p() -> np.ndarray:
    out = np.zeros((9, 9), dtype=complex)
    for a in range(3):
        for b in range(3):
            out[3 * a + b, 3 * b + a] = 1.0
    return out


def zero_weight_residual(r: np.ndarray) -> float:
    """Norm of the commutator with h (x) 1 + 1 (x) h."""
    h = np.diag(H_WEIGHTS.astype(complex))
    hh = np.kron(h, np.eye(3)) + np.kron(np.eye(3), h)
    return float(np.linalg.norm(hh @ r - r @ hh))


def unitarity_residual(pars: CouplingParams, q: complex, u: complex,
                       flags: list | None = None) -> float:
    """|R12(q,u) R21(q,-u) - g(u) g(-u) Id|, relative.

    Normalized by |g(u) g(-u)|, except where that product degenerates (u on a
    zero of g(u) g(-u) is a valid point: both sides vanish); the factor norms
    take over as the scale there.
    """
    p = permutation_p()
    r12 = build_r(pars, q, u, flags)
    r21 = p @ build_r(pars, q, -u, flags) @ p
    gg = weight_g(pars, u) * weight_g(pars, -u)
    scale = max(abs(gg), np.linalg.norm(r12) * np.linalg.norm(r21) / 9.0)
    return float(np.linalg.norm(r12 @ r21 - gg * np.eye(9)) / scale)


def _embed13(r9: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Embed a two-site matrix on slots (1, 3), diagonal mask on slot 2."""
    r4 = r9.reshape(3, 3, 3, 3)  # [a, c, b, d] with row 3a+c, col 3b+d
    out = np.einsum("acbd,mn->amcbnd", r4, np.diag(mask.astype(complex)))
    return out.reshape(27, 27)


def dybe_residual(pars: CouplingParams, q: complex, u1: complex, u2: complex,
                  flags: list | None = None) -> float:
    """Frobenius residual of the dynamical Yang-Baxter equation on V x V x V.

    The shifted arguments q - 2 eta h_k are applied blockwise over the weight
    of the untouched slot; both sides are compared relative to the larger
    norm.
    """
    e2 = pars.two_eta
    u12 = u1 - u2
    rmat = {}

    def r(qq, uu):
        key = (qq, uu)
        if key not in rmat:
            rmat[key] = build_r(pars, qq, uu, flags)
        return rmat[key]

    eye3 = np.eye(3)
    lhs = np.zeros((27, 27), dtype=complex)
    rhs = np.zeros((27, 27), dtype=complex)

    # R12(q - 2 eta h3, u12) R13(q, u1) R23(q - 2 eta h1, u2)
    r13 = _embed13(r(q, u1), np.ones(3))
    l12 = sum(np.kron(r(q - e2 * lam, u12), np.diag((H_WEIGHTS == lam).astype(complex)))
              for lam in (-1, 0, 1))
    l23 = sum(np.kron(np.diag((H_WEIGHTS == lam).astype(complex)), r(q - e2 * lam, u2))
              for lam in (-1, 0, 1))
    lhs = l12 @ r13 @ l23

    # R23(q, u2) R13(q - 2 eta h2, u1) R12(q, u12)
    r23 = np.kron(eye3, r(q, u2))
    r13d = sum(_embed13(r(q - e2 * lam, u1), (H_WEIGHTS == lam).astype(float))
               for lam in (-1, 0, 1))
    r12 = np.kron(r(q, u12), eye3)
    rhs = r23 @ r13d @ r12

    scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs))
    return float(np.linalg.norm(lhs - rhs) / scale)


def q_window(eta: complex, kind: str = "default") -> tuple[float, float]:
    """Real sampling windows for the dynamical variable.

    Chosen so that every square-root radicand met by the given suite stays on
    the positive real axis when q is real, keeping the principal branches
    mutually consistent.  Expressed through eta so non-default couplings keep
    working as long as the window stays nonempty.
    """
    e = eta.real
    windows = {
        "default": (5 * e + 0.01, 1 - 3 * e - 0.01),
        "rmatrix": (3 * e + 0.01, 1 - 3 * e - 0.01),
        "dybe": (5 * e + 0.002, 1 - 4 * e - 0.002),
        "gather": (2 * e + 0.03, 1 - 4 * e - 0.015),
    }
    lo, hi = windows[kind]
    if not lo < hi:
        raise ValueError(f"empty q window for kind={kind!r} at eta={eta!r}")
    return lo, hi
