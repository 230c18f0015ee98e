"""Pseudovacuum, creation operators, Bethe equations and eigenvalues.

The highest-weight module is a chain of evaluation modules; the pseudovacuum
is the all-e1 vector dressed by the gauge function

    f(q) = exp(c q) (vt(q - eta) / vt(q + eta))^{n/2},

which removes the q-dependence from the cancelation conditions.  Creation
operators are built by a recurrence in the two lowering generators and the
first diagonal one; transfer-matrix eigenvectors are their action on the
pseudovacuum at spectral parameters solving the Bethe equations.

Where the source displays disagree with the operator algebra (they do in a
few places), both variants are implemented side by side: ``form="printed"``
follows the displayed text, ``form="derived"`` the form consistent with the
direct operator action.  The derived forms are the defaults; the residual
suites report the printed forms' defects numerically.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DenominatorNearZero, NoConvergence, RootCollision
from .laxrep import LaxRep, ShiftedOperator, chain_rep, identity_operator, transfer_matrix
from .rmatrix import (CouplingParams, ratio_omega, ratio_y, ratio_z, weight_beta,
                      weight_g, weight_gamma)
from .theta import ThetaParams

ROOT_DISTINCT_TOL = 1e-8


@dataclass
class ModelConfig:
    """Global model parameters: coupling, lattice sites, gauge constant."""

    eta: complex
    tau: complex
    n: int
    z: tuple
    c: complex = 0.0
    seed: int = 0
    truncation_terms: int | None = None
    precision_eps: float = 1e-14

    def __post_init__(self):
        self.eta = complex(self.eta)
        self.tau = complex(self.tau)
        self.c = complex(self.c)
        self.z = tuple(complex(x) for x in self.z)
        if self.n < 1:
            raise ValueError(f"site count must be >= 1, got n = {self.n}")
        if len(self.z) != self.n:
            raise ValueError(f"need {self.n} evaluation points, got {len(self.z)}")
        theta = ThetaParams(self.tau, self.truncation_terms, self.precision_eps)
        pars = CouplingParams(self.eta, theta)
        # genericity of the site spacings: differences and their 2 eta
        # offsets must avoid lattice zeros
        th = theta.th1
        for i in range(self.n):
            for j in range(i + 1, self.n):
                for off in (0.0, 2 * self.eta, -2 * self.eta):
                    val = th(self.z[i] - self.z[j] + off)
                    if off != 0 and abs(val) < pars.den_guard * theta.scale:
                        raise ValueError(
                            f"sites z[{i}], z[{j}] not generic: vt(z_i - z_j "
                            f"+ {off:.3g}) vanishes")
        self._pars = pars

    @property
    def pars(self) -> CouplingParams:
        return self._pars

    @cached_property
    def rep(self) -> LaxRep:
        return chain_rep(self.pars, self.z)

    @property
    def space(self):
        return self.rep.space

    def entry(self, name: str, u: complex) -> ShiftedOperator:
        return self.rep.entry(name, u)


@dataclass(frozen=True)
class BetheSolution:
    roots: tuple
    residual_norm: float
    c: complex
    converged: bool
    iterations: int
    restarts: int = 0
    form: str = "derived"


def gauge_f(config: ModelConfig, q: complex) -> complex:
    """Gauge function exp(cq) (vt(q-eta)/vt(q+eta))^{n/2}, principal power
    of the complete ratio."""
    th = config.pars.theta.th1
    e = config.eta
    den = config.pars.den(th(q + e), "vt(q+eta) in gauge")
    ratio = th(q - e) / den
    return cmath.exp(config.c * q) * cmath.exp(0.5 * config.n * cmath.log(ratio))


def pseudovacuum(config: ModelConfig):
    """The highest weight vector as a function of q: f(q) e1 x ... x e1."""
    dim = config.space.dim
    e_top = np.zeros(dim, dtype=complex)
    e_top[0] = 1.0

    def omega_fn(q: complex) -> np.ndarray:
        return gauge_f(config, q) * e_top

    return omega_fn


def a1(config: ModelConfig, u: complex, form: str = "derived") -> complex:
    """Diagonal eigenvalue on the pseudovacuum for the first generator.

    derived: the product of g(u - z_k), which is what the operator action
    gives (each factor is 1 at u = z_k).  printed: the displayed variant with
    vt(u - z_k + 2 eta) in place of vt(u - z_k - 2 eta); it differs by a
    reflection and does not reproduce A1 acting on the pseudovacuum.
    """
    th = config.pars.theta.th1
    e = config.eta
    if form == "derived":
        out = 1.0 + 0.0j
        for zk in config.z:
            out *= weight_g(config.pars, u - zk)
        return out
    out = 1.0 + 0.0j
    for zk in config.z:
        out *= th(3 * e + 0.5 - u + zk) * th(u - zk + 2 * e) / (th(3 * e + 0.5) * th(-2 * e))
    return out


def a2(config: ModelConfig, q: complex, u: complex, flags: list | None = None) -> complex:
    """Second diagonal eigenvalue: site product times one global square-root
    factor (the per-site roots telescope)."""
    th = config.pars.theta.th1
    e, n = config.eta, config.n
    out = 1.0 + 0.0j
    for zk in config.z:
        out *= th(3 * e + 0.5 - u + zk) * th(u - zk) / (th(-2 * e) * th(3 * e + 0.5))
    den1 = config.pars.den(th(q - e), "vt(q-eta) in a2")
    den2 = config.pars.den(th(q - 2 * e * n + e), "vt(q-2 eta n+eta) in a2")
    rad = th(q + e) * th(q - 2 * e * n - e) / (den1 * den2)
    return out * config.pars.sqrt(rad, "a2 radicand", flags)


def a3(config: ModelConfig, q: complex, u: complex, flags: list | None = None) -> complex:
    """Third diagonal eigenvalue; the squared-nome factors pair with the
    gauge-factor telescoping."""
    th = config.pars.theta.th1
    th4sq = config.pars.theta.squared_nome.th4
    e, n = config.eta, config.n
    out = 1.0 + 0.0j
    for zk in config.z:
        out *= th(u - zk) * th(e + 0.5 - u + zk) / (th(3 * e + 0.5) * th(-2 * e))
    num = th(q - 2 * e * n) * th(q + 2 * e) * th4sq(2 * q - 4 * e * n) * th4sq(2 * q + 4 * e)
    den = (config.pars.den(th(q), "vt(q) in a3")
           * config.pars.den(th(q - 2 * e * n + 2 * e), "vt(q-2 eta(n-1)) in a3")
           * config.pars.den(th4sq(2 * q), "vt4(2q,p^2) in a3")
           * config.pars.den(th4sq(2 * q - 4 * e * n + 4 * e), "vt4(2q-4eta(n-1),p^2) in a3"))
    return out * config.pars.sqrt(num / den, "a3 radicand", flags)


def _check_distinct(us, tol: float = 1e-10):
    us = tuple(complex(x) for x in us)
    for i in range(len(us)):
        for j in range(i + 1, len(us)):
            if abs(us[i] - us[j]) < tol:
                raise RootCollision(f"parameters {i} and {j} coincide: {us[i]:.6g}")
    return us


def creation_phi(config: ModelConfig, us) -> ShiftedOperator:
    """Creation operator for m = len(us) magnons, built by the recurrence

        Phi_m(u1..um) = B1(u1) Phi_{m-1}(u2..um)
          - sum_j (prod_{k=2}^{j-1} om_jk / y_1j(q))
            (prod_{k>=2, k!=j} z_kj(q+2eta)) B2(u1) Phi_{m-2}(..no uj..) A1(uj)

    with scalar coefficients acting as left multiplications.  All monomials
    have net shift zero; the operator lowers the h-weight by m.
    """
    us = _check_distinct(us)
    m = len(us)
    memo = getattr(config, "_phi_memo", None)
    if memo is None:
        memo = {}
        config._phi_memo = memo
    key = us
    if key in memo:
        return memo[key]

    pars = config.pars
    rep = config.rep
    if m == 0:
        op = identity_operator(config.space.dim, pars.two_eta)
    elif m == 1:
        op = rep.entry("B1", us[0])
    else:
        op = rep.entry("B1", us[0]) @ creation_phi(config, us[1:])
        for j in range(2, m + 1):
            uj = us[j - 1]
            om = 1.0 + 0.0j
            for k in range(2, j):
                om *= ratio_omega(pars, us[j - 1] - us[k - 1])
            rest = us[1:j - 1] + us[j:]
            zargs = [us[k - 1] - uj for k in range(2, m + 1) if k != j]

            def coef(q, om=om, uj=uj, u1=us[0], zargs=tuple(zargs)):
                val = om / ratio_y(pars, q, u1 - uj)
                for du in zargs:
                    val *= ratio_z(pars, q + pars.two_eta, du)
                return val

            term = (rep.entry("B2", us[0]) @ creation_phi(config, rest)
                    @ rep.entry("A1", uj)).lscale(coef)
            op = op - term
    memo[key] = op
    return op


def bethe_vector(config: ModelConfig, us):
    """The candidate eigenvector as a W-valued function of q, with a value
    cache (transfer application needs it at several lattice offsets)."""
    if len(us) != config.n:
        raise ValueError(f"need {config.n} spectral parameters, got {len(us)}")
    phi = creation_phi(config, us)
    omega = pseudovacuum(config)
    cache: dict = {}

    def psi(q: complex) -> np.ndarray:
        key = complex(q)
        val = cache.get(key)
        if val is None:
            val = phi.apply(omega, key)
            cache[key] = val
        return val

    return psi


def _bethe_rhs(config: ModelConfig, us, j: int) -> complex:
    th = config.pars.theta.th1
    e = config.eta
    out = cmath.exp(2 * config.c * e)
    for k in range(config.n):
        if k == j:
            continue
        d = us[j] - us[k]
        den = (config.pars.den(th(d + 2 * e), "vt(u_jk+2eta) in Bethe rhs")
               * config.pars.den(th(d + 0.5 - e), "vt(u_jk+1/2-eta) in Bethe rhs"))
        out *= th(d - 2 * e) * th(d + 0.5 + e) / den
    return out


def bethe_residuals(config: ModelConfig, us, form: str = "derived") -> np.ndarray:
    """Residuals of the n Bethe conditions at the given parameters.

    derived: site factor vt(u_j - z_k - 2 eta)/vt(u_j - z_k), the condition
    that actually cancels the unwanted terms of the algebra.  printed: the
    displayed variant with + 2 eta (its roots are the derived roots shifted
    by the half-period reflection; they do not make the unwanted terms
    vanish).
    """
    us = tuple(complex(x) for x in us)
    if len(us) != config.n:
        raise ValueError(f"need {config.n} roots, got {len(us)}")
    th = config.pars.theta.th1
    e = config.eta
    sgn = -1.0 if form == "derived" else 1.0
    out = np.empty(config.n, dtype=complex)
    for j in range(config.n):
        lhs = 1.0 + 0.0j
        for zk in config.z:
            den = config.pars.den(th(us[j] - zk), "vt(u_j - z_k) in Bethe lhs")
            lhs *= th(us[j] - zk + sgn * 2 * e) / den
        out[j] = lhs - _bethe_rhs(config, us, j)
    return out


def solve_bethe(config: ModelConfig, initial_guesses=None, form: str = "derived",
                tol: float = 1e-12, max_iters: int = 80, max_restarts: int = 32,
                fd_step: float = 1e-7) -> BetheSolution:
    """Damped Newton iteration with seeded multi-start.

    Starts from z_k + eta (or the supplied guesses) plus seeded complex
    perturbations; each restart owns the generator stream seed + restart
    index.  The Jacobian is a forward difference with relative step
    ``fd_step``.  Converged root sets with coinciding roots are rejected and
    the search restarted.
    """
    n = config.n
    if initial_guesses is not None:
        base = np.asarray([complex(x) for x in initial_guesses])
        if len(base) != n:
            raise ValueError(f"need {n} initial guesses")
        _check_distinct(base)
    else:
        base = np.asarray([zk + config.eta for zk in config.z])

    def fun(u_vec):
        return bethe_residuals(config, tuple(u_vec), form=form)

    best = None
    for restart in range(max_restarts + 1):
        rng = np.random.default_rng(config.seed + restart)
        u = base.copy()
        if restart > 0:
            spread = 0.1 + 0.15 * (restart / max(1, max_restarts))
            u = u + spread * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        try:
            u, res_norm, iters = _newton(fun, u, tol, max_iters, fd_step)
        except (DenominatorNearZero, np.linalg.LinAlgError):
            continue
        if best is None or res_norm < best.residual_norm:
            best = BetheSolution(tuple(u), float(res_norm), config.c,
                                 res_norm < tol, iters, restart, form)
        if res_norm < tol:
            try:
                _check_distinct(u, ROOT_DISTINCT_TOL)
            except RootCollision:
                best = None
                continue
            return BetheSolution(tuple(u), float(res_norm), config.c, True,
                                 iters, restart, form)
    raise NoConvergence(
        f"no collision-free Bethe root set after {max_restarts} restarts "
        f"(best residual {best.residual_norm if best else float('nan'):.3e})",
        best=best)


def _newton(fun, u0, tol, max_iters, fd_step):
    u = u0.astype(complex)
    f = fun(u)
    norm = np.linalg.norm(f, ord=np.inf)
    n = len(u)
    for it in range(1, max_iters + 1):
        if norm < tol:
            return u, norm, it - 1
        jac = np.empty((n, n), dtype=complex)
        for j in range(n):
            h = fd_step * (1.0 + abs(u[j]))
            up = u.copy()
            up[j] += h
            jac[:, j] = (fun(up) - f) / h
        step = np.linalg.solve(jac, -f)
        lam = 1.0
        for _ in range(8):
            trial = u + lam * step
            try:
                ftrial = fun(trial)
            except DenominatorNearZero:
                lam *= 0.5
                continue
            ntrial = np.linalg.norm(ftrial, ord=np.inf)
            if ntrial < norm:
                u, f, norm = trial, ftrial, ntrial
                break
            lam *= 0.5
        else:
            return u, norm, it
    return u, norm, max_iters


def wanted_factor(config: ModelConfig, which: str, u: complex, us,
                  flags: list | None = None):
    """The coefficient of the preserved term in the action of a diagonal
    generator on the creation operator, as a function of q.

    which = "A1": prod_k z(q, u_k - u)
    which = "A2": prod_k z(q - 2 eta (k-1), u - u_k) / om(u - u_k)
    which = "A3": prod_k beta(-q, eta, u - u_k) / gamma(x_k, -x_k, u - u_k),
                  x_k = -q + 2 eta (k-1)

    The third product carries no per-factor sign: the direct operator action
    fixes it (+), consistent with the closed-form eigenvalue display.
    """
    pars = config.pars
    e2 = pars.two_eta
    us = tuple(complex(x) for x in us)

    if which == "A1":
        def fn(q):
            val = 1.0 + 0.0j
            for uk in us:
                val *= ratio_z(pars, q, uk - u, flags)
            return val
    elif which == "A2":
        def fn(q):
            val = 1.0 + 0.0j
            for k, uk in enumerate(us):
                val *= ratio_z(pars, q - e2 * k, u - uk, flags) / ratio_omega(pars, u - uk)
            return val
    elif which == "A3":
        def fn(q):
            val = 1.0 + 0.0j
            for k, uk in enumerate(us):
                x = -q + e2 * k
                den = pars.den(weight_gamma(pars, x, -x, u - uk, flags),
                               "gamma(x,-x) in A3 factor")
                val *= weight_beta(pars, -q, pars.eta, u - uk, flags) / den
            return val
    else:
        raise ValueError(f"unknown generator {which!r}")
    return fn


def lambda_general(config: ModelConfig, u: complex, roots, q: complex,
                   flags: list | None = None) -> complex:
    """Eigenvalue from the wanted-term coefficients and the pseudovacuum
    eigenvalues, evaluated at a specific q.  On Bethe roots and with the
    gauge choice the q-dependence cancels."""
    fq = gauge_f(config, q)
    fm = gauge_f(config, q - config.pars.two_eta)
    fp = gauge_f(config, q + config.pars.two_eta)
    t1 = wanted_factor(config, "A1", u, roots, flags)(q) * a1(config, u) * fm / fq
    t2 = wanted_factor(config, "A2", u, roots, flags)(q) * a2(config, q, u, flags)
    t3 = wanted_factor(config, "A3", u, roots, flags)(q) * a3(config, q, u, flags) * fp / fq
    return t1 + t2 + t3


def lambda_eigenvalue(config: ModelConfig, u: complex, roots,
                      form: str = "derived") -> complex:
    """Closed-form transfer-matrix eigenvalue at spectral parameter u.

    printed: the three-term display as written.  derived: the form whose
    terms' poles at u = u_k cancel through the Bethe equations; it has
    vt(u - z_k - 2 eta) in the first term and carries the exchange-ratio
    dressing prod_k vt(u-u_k-2eta) vt(u-u_k+1/2+eta) / (vt(u-u_k)
    vt(u-u_k+1/2-eta)) on the middle term.  The derived form is what the
    transfer matrix actually reproduces on Bethe vectors.
    """
    th = config.pars.theta.th1
    e = config.eta
    c = config.c
    roots = tuple(complex(x) for x in roots)
    norm = th(3 * e + 0.5) * th(-2 * e)

    sgn1 = -1.0 if form == "derived" else 1.0
    t1 = cmath.exp(-2 * e * c)
    for zk in config.z:
        t1 *= th(3 * e + 0.5 - u + zk) * th(u - zk + sgn1 * 2 * e) / norm
    for uk in roots:
        den = config.pars.den(th(uk - u), "vt(u_k - u) in lambda")
        t1 *= th(uk - u - 2 * e) / den

    t2 = 1.0 + 0.0j
    for zk in config.z:
        t2 *= th(3 * e + 0.5 - u + zk) * th(u - zk) / norm
    if form == "derived":
        for uk in roots:
            d = u - uk
            den = (config.pars.den(th(d), "vt(u - u_k) in lambda")
                   * config.pars.den(th(d + 0.5 - e), "vt(u-u_k+1/2-eta) in lambda"))
            t2 *= th(d - 2 * e) * th(d + 0.5 + e) / den

    t3 = cmath.exp(2 * e * c)
    for uk, zk in zip(roots, config.z):
        den = config.pars.den(th(e + 0.5 - u + uk), "vt(eta+1/2-u+u_k) in lambda")
        t3 *= th(3 * e + 0.5 - u + uk) * th(u - zk) * th(e + 0.5 - u + zk) / (den * norm)
    return t1 + t2 + t3


def eigen_check(config: ModelConfig, u: complex, roots, q_samples,
                lam: str = "derived") -> float:
    """Max over q samples of |t(u) psi(q) - Lambda psi(q)| / |psi(q)|.

    lam selects the eigenvalue source: "derived"/"printed" closed forms, or
    "general" (wanted-coefficient form evaluated at each sample q).
    """
    psi = bethe_vector(config, roots)
    t_op = transfer_matrix(config.rep, u, restrict=None)
    worst = 0.0
    for q in q_samples:
        tv = t_op.apply(psi, q)
        pv = psi(q)
        if lam == "general":
            lam_val = lambda_general(config, u, roots, q)
        else:
            lam_val = lambda_eigenvalue(config, u, roots, form=lam)
        worst = max(worst, float(np.linalg.norm(tv - lam_val * pv) / np.linalg.norm(pv)))
    return worst
