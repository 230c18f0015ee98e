"""Representations and the q-difference operator algebra.

A representation is a matrix-valued function L(q, u) on V (x) W, with W a
tensor product of three-dimensional evaluation modules.  Its nine auxiliary
blocks become difference operators on W-valued functions of q: block (i, j)
acts as f(q) -> M(q) f(q - 2 eta w_j), where w = (1, 0, -1) are the h-weights
of the auxiliary basis.  ``ShiftedOperator`` realises one such operator
(matrix part plus an integer shift in units of 2 eta), ``OperatorSum``
collects parts with different shifts (the transfer matrix and its products).

Operators are immutable closures; evaluation is pure, so values can be shared
and evaluated concurrently.  Matrix builds are memoised per representation on
the exact (q, u) pair; shifted arguments are always formed as q + step * s,
which keeps cache keys bit-stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SpaceMismatch
from .rmatrix import H_WEIGHTS, CouplingParams, build_r

ENTRY_BLOCKS = {
    "A1": (0, 0), "B1": (0, 1), "B2": (0, 2),
    "C1": (1, 0), "A2": (1, 1), "B3": (1, 2),
    "C2": (2, 0), "C3": (2, 1), "A3": (2, 2),
}


@dataclass(frozen=True)
class WeightedSpace:
    """Tensor product of n three-dimensional sites with its h-weight grading."""

    z: tuple
    _derived: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(complex(x) for x in self.z))

    @property
    def n(self) -> int:
        return len(self.z)

    @property
    def dim(self) -> int:
        return 3**self.n

    @property
    def letters(self) -> np.ndarray:
        """(dim, n) array of site letters, site 1 slowest."""
        lt = self._derived.get("letters")
        if lt is None:
            idx = np.arange(self.dim)
            lt = np.stack([(idx // 3 ** (self.n - 1 - k)) % 3 for k in range(self.n)], axis=1)
            self._derived["letters"] = lt
        return lt

    @property
    def weights(self) -> np.ndarray:
        w = self._derived.get("weights")
        if w is None:
            w = H_WEIGHTS[self.letters].sum(axis=1) if self.n else np.zeros(1, dtype=int)
            self._derived["weights"] = w
        return w

    def weight_mask(self, lam: int) -> np.ndarray:
        return self.weights == lam

    def projector(self, lam: int) -> np.ndarray:
        return np.diag(self.weight_mask(lam).astype(complex))

    def weight_dims(self) -> dict[int, int]:
        vals, counts = np.unique(self.weights, return_counts=True)
        return dict(zip(vals.tolist(), counts.tolist()))


class ShiftedOperator:
    """A q-difference operator (X f)(q) = M(q) f(q + step * shift).

    Composition multiplies matrix parts with the right factor evaluated at
    the shifted argument, and adds shifts and weight changes.
    """

    def __init__(self, dim: int, step: complex, shift: int, weight_change: int, fn):
        self.dim = dim
        self.step = step
        self.shift = int(shift)
        self.weight_change = weight_change
        self.fn = fn

    def matrix(self, q: complex) -> np.ndarray:
        return self.fn(q)

    def _check(self, other):
        if self.dim != other.dim or self.step != other.step:
            raise SpaceMismatch(
                f"dim/step mismatch: ({self.dim}, {self.step}) vs ({other.dim}, {other.step})"
            )

    def __matmul__(self, other):
        if isinstance(other, OperatorSum):
            return OperatorSum.promote(self) @ other
        self._check(other)
        f, g, s = self.fn, other.fn, self.step * self.shift
        return ShiftedOperator(
            self.dim, self.step, self.shift + other.shift,
            self.weight_change + other.weight_change,
            lambda q: f(q) @ g(q + s),
        )

    def __add__(self, other):
        if isinstance(other, OperatorSum):
            return OperatorSum.promote(self) + other
        self._check(other)
        if self.weight_change != other.weight_change:
            raise SpaceMismatch("adding operators of different weight change")
        if self.shift == other.shift:
            f, g = self.fn, other.fn
            return ShiftedOperator(self.dim, self.step, self.shift,
                                   self.weight_change, lambda q: f(q) + g(q))
        return OperatorSum.promote(self) + OperatorSum.promote(other)

    def __neg__(self):
        f = self.fn
        return ShiftedOperator(self.dim, self.step, self.shift,
                               self.weight_change, lambda q: -f(q))

    def __sub__(self, other):
        return self + (-other)

    def lscale(self, c):
        """Left multiplication by a scalar function of q (or a constant),
        applied after all shifts: (c . X f)(q) = c(q) (X f)(q)."""
        f = self.fn
        if callable(c):
            return ShiftedOperator(self.dim, self.step, self.shift,
                                   self.weight_change, lambda q: c(q) * f(q))
        return ShiftedOperator(self.dim, self.step, self.shift,
                               self.weight_change, lambda q: c * f(q))

    def apply(self, func, q: complex) -> np.ndarray:
        """Apply to a W-valued function of q, evaluated at q."""
        return self.fn(q) @ func(q + self.step * self.shift)


class OperatorSum:
    """A finite sum of ShiftedOperators, merged by shift."""

    def __init__(self, dim: int, step: complex, weight_change: int, parts: dict):
        self.dim = dim
        self.step = step
        self.weight_change = weight_change
        self.parts = parts  # shift -> matrix fn

    @classmethod
    def promote(cls, op) -> "OperatorSum":
        if isinstance(op, OperatorSum):
            return op
        return cls(op.dim, op.step, op.weight_change, {op.shift: op.fn})

    def _check(self, other):
        if self.dim != other.dim or self.step != other.step:
            raise SpaceMismatch("dim/step mismatch in OperatorSum")

    def __add__(self, other):
        other = OperatorSum.promote(other)
        self._check(other)
        if self.weight_change != other.weight_change:
            raise SpaceMismatch("adding operators of different weight change")
        parts = dict(self.parts)
        for s, g in other.parts.items():
            if s in parts:
                f = parts[s]
                parts[s] = (lambda f, g: lambda q: f(q) + g(q))(f, g)
            else:
                parts[s] = g
        return OperatorSum(self.dim, self.step, self.weight_change, parts)

    def __neg__(self):
        return OperatorSum(self.dim, self.step, self.weight_change,
                           {s: (lambda f: lambda q: -f(q))(f) for s, f in self.parts.items()})

    def __sub__(self, other):
        return self + (-OperatorSum.promote(other))

    def __matmul__(self, other):
        other = OperatorSum.promote(other)
        self._check(other)
        parts: dict = {}
        for s1, f in self.parts.items():
            off = self.step * s1
            for s2, g in other.parts.items():
                term = (lambda f, g, off: lambda q: f(q) @ g(q + off))(f, g, off)
                s = s1 + s2
                if s in parts:
                    prev = parts[s]
                    parts[s] = (lambda a, b: lambda q: a(q) + b(q))(prev, term)
                else:
                    parts[s] = term
        return OperatorSum(self.dim, self.step, self.weight_change + other.weight_change, parts)

    def lscale(self, c):
        if not callable(c):
            const = c
            c = lambda q: const
        return OperatorSum(self.dim, self.step, self.weight_change,
                           {s: (lambda f: lambda q: c(q) * f(q))(f) for s, f in self.parts.items()})

    def apply(self, func, q: complex) -> np.ndarray:
        out = np.zeros(self.dim, dtype=complex)
        for s, f in self.parts.items():
            out = out + f(q) @ func(q + self.step * s)
        return out

    def part_matrices(self, q: complex) -> dict[int, np.ndarray]:
        return {s: f(q) for s, f in self.parts.items()}


def identity_operator(space_dim: int, step: complex) -> ShiftedOperator:
    eye = np.eye(space_dim, dtype=complex)
    return ShiftedOperator(space_dim, step, 0, 0, lambda q: eye)


class LaxRep:
    """A representation: weighted space plus the matrix builder on V (x) W."""

    def __init__(self, pars: CouplingParams, space: WeightedSpace, build):
        self.pars = pars
        self.space = space
        self._build = build
        self._cache: dict = {}

    def lax(self, q: complex, u: complex) -> np.ndarray:
        key = (complex(q), complex(u))
        mat = self._cache.get(key)
        if mat is None:
            mat = self._build(complex(q), complex(u))
            self._cache[key] = mat
        return mat

    def lax_block(self, q: complex, u: complex, i: int, j: int) -> np.ndarray:
        d = self.space.dim
        return self.lax(q, u).reshape(3, d, 3, d)[i, :, j, :]

    def entry(self, name: str, u: complex) -> ShiftedOperator:
        """One of the nine generators at spectral parameter u."""
        i, j = ENTRY_BLOCKS[name]
        shift = -int(H_WEIGHTS[j])
        wc = int(H_WEIGHTS[j] - H_WEIGHTS[i])
        u = complex(u)
        fn = lambda q, i=i, j=j, u=u: self.lax_block(q, u, i, j)
        return ShiftedOperator(self.space.dim, self.pars.two_eta, shift, wc, fn)

    def zero_weight_residual(self, q: complex, u: complex) -> float:
        hw = np.kron(np.diag(H_WEIGHTS.astype(complex)), np.eye(self.space.dim)) \
            + np.kron(np.eye(3), np.diag(self.space.weights.astype(complex)))
        m = self.lax(q, u)
        return float(np.linalg.norm(hw @ m - m @ hw))


def lax_entries(rep: LaxRep, u: complex) -> dict[str, ShiftedOperator]:
    return {name: rep.entry(name, u) for name in ENTRY_BLOCKS}


def fundamental_rep(pars: CouplingParams, z: complex) -> LaxRep:
    """Evaluation module on V: L(q, u) = R(q, u - z)."""
    z = complex(z)
    space = WeightedSpace((z,))
    return LaxRep(pars, space, lambda q, u: build_r(pars, q, u - z))


def tensor_rep(x: LaxRep, y: LaxRep) -> LaxRep:
    """Tensor product module: L_x(q - 2 eta h_y, u) L_y(q, u) on X (x) Y.

    The first factor's dynamical argument is shifted blockwise by the
    h-weight of the Y part.
    """
    if x.pars is not y.pars:
        raise SpaceMismatch("tensor factors built from different parameters")
    pars = x.pars
    dx, dy = x.space.dim, y.space.dim
    wy = y.space.weights
    space = WeightedSpace(x.space.z + y.space.z)
    eye_x = np.eye(dx)

    def build(q, u):
        a = np.zeros((3 * dx * dy, 3 * dx * dy), dtype=complex)
        for lam in np.unique(wy):
            mask = np.diag((wy == lam).astype(complex))
            a += np.kron(x.lax(q - pars.two_eta * lam, u), mask)
        ly4 = y.lax(q, u).reshape(3, dy, 3, dy)
        b = np.einsum("aybz,xw->axybwz", ly4, eye_x).reshape(3 * dx * dy, 3 * dx * dy)
        return a @ b

    return LaxRep(pars, space, build)


def chain_rep(pars: CouplingParams, z_list) -> LaxRep:
    """Direct n-site construction, product of one R factor per site.

    Site k carries R on slots (0, k) at argument q - 2 eta (weight of sites
    k+1..n); equal to left-folded tensor products of evaluation modules.
    """
    z_list = tuple(complex(z) for z in z_list)
    n = len(z_list)
    space = WeightedSpace(z_list)
    dw = space.dim
    big = 3 * dw

    # trailing-weight groups per site: (mu, trailing indices with that weight)
    groups = []
    for k in range(1, n + 1):
        t_dim = 3 ** (n - k)
        t_letters = np.stack(
            [(np.arange(t_dim) // 3 ** (n - k - 1 - m)) % 3 for m in range(n - k)],
            axis=1) if n - k else np.zeros((1, 0), dtype=int)
        t_weights = H_WEIGHTS[t_letters].sum(axis=1) if n - k else np.zeros(1, dtype=int)
        groups.append([(int(mu), np.nonzero(t_weights == mu)[0]) for mu in np.unique(t_weights)])

    def build(q, u):
        total = np.eye(big, dtype=complex)
        for k in range(1, n + 1):
            t_dim = 3 ** (n - k)
            m_dim = 3 ** (k - 1)
            mm = (np.arange(m_dim) * 3 * t_dim)
            fk = np.zeros((big, big), dtype=complex)
            for mu, t_idx in groups[k - 1]:
                r9 = build_r(pars, q - pars.two_eta * mu, u - z_list[k - 1])
                base = (mm[:, None] + t_idx[None, :]).ravel()
                rows9, cols9 = np.nonzero(r9)
                for r9i, c9i in zip(rows9, cols9):
                    a, i = divmod(int(r9i), 3)
                    b, j = divmod(int(c9i), 3)
                    fk[a * dw + base + i * t_dim, b * dw + base + j * t_dim] += r9[r9i, c9i]
            total = total @ fk
        return total

    return LaxRep(pars, space, build)


def transfer_matrix(rep: LaxRep, u: complex, restrict: int | None = 0) -> OperatorSum:
    """Trace of the operator-valued matrix: the sum of the three diagonal
    generators, a commuting family on the zero-weight subspace.

    With ``restrict`` set, domain and codomain are projected onto that weight
    subspace; the three summands keep their shifts (-1, 0, +1).
    """
    parts = {}
    for name in ("A1", "A2", "A3"):
        op = rep.entry(name, u)
        fn = op.fn
        if restrict is not None:
            proj = rep.space.projector(restrict)
            fn = (lambda f, p: lambda q: p @ f(q) @ p)(fn, proj)
        parts[op.shift] = fn
    return OperatorSum(rep.space.dim, rep.pars.two_eta, 0, parts)


class TrigFunction:
    """W-valued trigonometric polynomial sum_k exp(2 pi i k q) v_k.

    Difference operators need their argument at arbitrary lattice offsets;
    these evaluate everywhere without boundary artifacts.
    """

    def __init__(self, coeffs: dict[int, np.ndarray]):
        self.coeffs = {int(k): np.asarray(v, dtype=complex) for k, v in coeffs.items()}

    def __call__(self, q: complex) -> np.ndarray:
        out = None
        for k, v in self.coeffs.items():
            term = np.exp(2j * np.pi * k * q) * v
            out = term if out is None else out + term
        return out


def random_trig_function(space: WeightedSpace, rng: np.random.Generator,
                         weight: int | None = None, modes=(0, 1, 2)) -> TrigFunction:
    coeffs = {}
    for k in modes:
        v = rng.standard_normal(space.dim) + 1j * rng.standard_normal(space.dim)
        if weight is not None:
            v = v * space.weight_mask(weight)
        coeffs[k] = v
    return TrigFunction(coeffs)


def _embed_aux(lax_mat: np.ndarray, dw: int, slot: int) -> np.ndarray:
    """Embed a V (x) W matrix into V1 (x) V2 (x) W on auxiliary slot 1 or 2."""
    l4 = lax_mat.reshape(3, dw, 3, dw)
    eye3 = np.eye(3)
    if slot == 1:
        out = np.einsum("awbv,cd->acwbdv", l4, eye3)
    else:
        out = np.einsum("awbv,cd->cawdbv", l4, eye3)
    return out.reshape(9 * dw, 9 * dw)


def _aux_col_mask(dw: int, slot: int, letter: int) -> np.ndarray:
    """Diagonal projector onto basis states with the given auxiliary letter."""
    diag = np.zeros((3, 3, dw))
    if slot == 1:
        diag[letter, :, :] = 1.0
    else:
        diag[:, letter, :] = 1.0
    return np.diag(diag.reshape(-1).astype(complex))


def _lax_operator(rep: LaxRep, u: complex, slot: int) -> OperatorSum:
    """The difference-operator form of the representation matrix on auxiliary
    slot 1 or 2, acting on (V1 x V2 x W)-valued functions of q."""
    dw = rep.space.dim
    parts: dict = {}
    for b in range(3):
        shift = -int(H_WEIGHTS[b])
        mask = _aux_col_mask(dw, slot, b)
        fn = (lambda uu, s, m: lambda q: _embed_aux(rep.lax(q, uu), dw, s) @ m)(u, slot, mask)
        if shift in parts:
            prev = parts[shift]
            parts[shift] = (lambda a, c: lambda q: a(q) + c(q))(prev, fn)
        else:
            parts[shift] = fn
    return OperatorSum(9 * dw, rep.pars.two_eta, 0, parts)


def rll_residual(rep: LaxRep, q: complex, u1: complex, u2: complex,
                 conjugated: bool = True, modes=(0, 1, 2),
                 flags: list | None = None) -> float:
    """Residual of the exchange relation between two auxiliary copies.

    Left side: R12(q - 2 eta h_W, u1 - u2) L1(q, u1) L2(q, u2).  Right side:
    L2(q, u2) L1(q, u1) Rt12(q, u1 - u2), where Rt is the shift-conjugated
    matrix R12(q + 2 eta (h_1 + h_2), .) blockwise over the auxiliary pair
    weight.  ``conjugated=False`` uses plain R12(q, .) on the right instead
    (a diagnostic; the relation requires the conjugated form).

    Both sides are compared on the exponential test functions
    exp(2 pi i k q) v over a full basis of v, for each mode k.
    """
    pars = rep.pars
    e2 = pars.two_eta
    dw = rep.space.dim
    u12 = u1 - u2
    ww = rep.space.weights

    l1 = _lax_operator(rep, u1, 1)
    l2 = _lax_operator(rep, u2, 2)

    def rdyn_fn(qq):
        out = np.zeros((9 * dw, 9 * dw), dtype=complex)
        for mu in np.unique(ww):
            mask = np.diag((ww == mu).astype(complex))
            out += np.kron(build_r(pars, qq - e2 * int(mu), u12, flags), mask)
        return out

    aux_pair_w = (H_WEIGHTS[:, None] + H_WEIGHTS[None, :]).reshape(-1)

    def rtilde_fn(qq):
        if not conjugated:
            return np.kron(build_r(pars, qq, u12, flags), np.eye(dw))
        out = np.zeros((9 * dw, 9 * dw), dtype=complex)
        for nu in np.unique(aux_pair_w):
            pair_mask = np.diag((aux_pair_w == nu).astype(complex))
            out += np.kron(build_r(pars, qq + e2 * int(nu), u12, flags) @ pair_mask, np.eye(dw))
        return out

    rdyn = OperatorSum(9 * dw, e2, 0, {0: rdyn_fn})
    rtil = OperatorSum(9 * dw, e2, 0, {0: rtilde_fn})

    lhs = rdyn @ (l1 @ l2)
    rhs = (l2 @ l1) @ rtil

    worst = 0.0
    lhs_parts = lhs.part_matrices(q)
    rhs_parts = rhs.part_matrices(q)
    shifts = sorted(set(lhs_parts) | set(rhs_parts))
    for k in modes:
        phase = lambda s: np.exp(2j * np.pi * k * (q + e2 * s))
        ml = sum(phase(s) * lhs_parts.get(s, 0.0) for s in shifts)
        mr = sum(phase(s) * rhs_parts.get(s, 0.0) for s in shifts)
        scale = max(np.linalg.norm(ml), np.linalg.norm(mr))
        worst = max(worst, float(np.linalg.norm(ml - mr) / scale))
    return worst
