"""Differential operators over F_p[x] in the bases D (d/dx) and theta (x d/dx).

An operator with r x r matrix coefficients is stored as an int64 array of shape
(order + 1, r, r, length): index j holds the coefficient of X^j, X in {D, theta}.
Scalar operators are the r = 1 case.
"""

from dataclasses import dataclass, field
from math import comb, isqrt

import numpy as np

from . import modring as R
from ._kernels import check_prime_size, conv_rows, matmul_mod, polymat_mul
from .linalg import pm_deriv, pm_pad, pm_trim

DERIVATION = "D"
EULER = "theta"
RIGHT = "right"
LEFT = "left"


class PreconditionError(ValueError):
    """Input outside the domain an algorithm is defined on."""


class HypothesisError(PreconditionError):
    """The leading coefficient vanishes at every point of F_p."""


def _trim_op(c):
    if c.shape[-1]:
        c = pm_trim(c)
    while c.shape[0] and not c[-1].any():
        c = c[:-1]
    return c


class DiffOp:
    """Operator sum_j c_j X^j (right form) or sum_j X^j c_j (left form)."""

    def __init__(self, coeffs, p, basis=DERIVATION, form=RIGHT):
        check_prime_size(p)
        c = np.asarray(coeffs, dtype=np.int64) % p
        if c.ndim != 4 or c.shape[1] != c.shape[2]:
            raise ValueError("coefficients must have shape (order+1, r, r, length)")
        self.coeffs = _trim_op(c)
        self.coeffs.setflags(write=False)
        self.p = p
        self.basis = basis
        self.form = form

    @classmethod
    def scalar(cls, polys, p, basis=DERIVATION, form=RIGHT):
        polys = [R.poly([f] if np.isscalar(f) else f, p) for f in polys]
        n = max([len(f) for f in polys] + [0])
        c = np.zeros((len(polys), 1, 1, n), dtype=np.int64)
        for j, f in enumerate(polys):
            c[j, 0, 0, :len(f)] = f
        return cls(c, p, basis, form)

    @property
    def order(self):
        return self.coeffs.shape[0] - 1

    @property
    def size(self):
        return self.coeffs.shape[1]

    @property
    def degree(self):
        return self.coeffs.shape[-1] - 1

    @property
    def bidegree(self):
        return self.degree, self.order

    def coeff(self, j):
        if j > self.order:
            return np.zeros(self.coeffs.shape[1:3] + (0,), dtype=np.int64)
        return pm_trim(self.coeffs[j])

    def scalar_coeff(self, j):
        if j > self.order:
            return np.zeros(0, dtype=np.int64)
        return R.trim(self.coeffs[j, 0, 0])

    @property
    def leading(self):
        return self.scalar_coeff(self.order)

    def with_coeffs(self, coeffs, **kw):
        args = dict(p=self.p, basis=self.basis, form=self.form)
        args.update(kw)
        return DiffOp(coeffs, **args)

    def __eq__(self, other):
        return (isinstance(other, DiffOp) and self.p == other.p and self.basis == other.basis
                and self.form == other.form and self.coeffs.shape == other.coeffs.shape
                and np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash((self.p, self.basis, self.form, self.coeffs.tobytes()))

    def __repr__(self):
        return f"DiffOp(order={self.order}, degree={self.degree}, size={self.size}, basis={self.basis}, form={self.form}, p={self.p})"


@dataclass
class RatMat:
    """Matrix num / den^exp with polynomial numerator entries."""
    num: np.ndarray
    den: np.ndarray
    exp: int
    p: int = field(default=0)

    def denominator(self):
        return R.power(self.den, self.exp, self.p)

    def __eq__(self, other):
        if not isinstance(other, RatMat) or self.p != other.p or self.num.shape[:2] != other.num.shape[:2]:
            return False
        lhs = pm_trim(conv_rows(self.num, other.denominator(), self.p))
        rhs = pm_trim(conv_rows(other.num, self.denominator(), self.p))
        return lhs.shape == rhs.shape and np.array_equal(lhs, rhs)

    def normal_form(self):
        """(numerator matrix, monic denominator) with trivial common content."""
        p = self.p
        num = pm_trim(self.num) if self.num.shape[-1] else self.num
        shape = num.shape
        if not num.shape[-1]:
            return num, R.const(1, p)
        den = self.denominator()
        rows = [R.trim(f) for f in num.reshape(-1, shape[-1])]
        g = den
        for f in rows:
            if len(f) and len(g) > 1:
                g = R.gcd(g, f, p)
        if len(g) > 1:
            den = R.div_exact(den, g, p)
            rows = [R.div_exact(f, g, p) if len(f) else f for f in rows]
        lc = R.inv_mod(int(den[-1]), p)
        n = max(len(f) for f in rows)
        out = np.array([R._pad(R.scale(f, lc, p), n) for f in rows], dtype=np.int64)
        return out.reshape(shape[:-1] + (n,)), R.scale(den, lc, p)

    def entry(self, i, j):
        return R.trim(self.num[i, j])

    def trace_num(self):
        acc = np.zeros(0, dtype=np.int64)
        for i in range(self.num.shape[0]):
            acc = R.add(acc, self.entry(i, i), self.p)
        return acc

    def shift(self, c):
        """Substitute x -> x + c everywhere."""
        p = self.p
        if not self.num.shape[-1]:
            return RatMat(self.num, R.taylor_shift(self.den, c, p), self.exp, p)
        flat = [R.taylor_shift(R.trim(f), c, p) for f in self.num.reshape(-1, self.num.shape[-1])]
        n = max([len(f) for f in flat] + [0])
        num = np.array([R._pad(f, n) for f in flat], dtype=np.int64).reshape(self.num.shape[:2] + (n,))
        return RatMat(pm_trim(num) if n else num, R.taylor_shift(self.den, c, p), self.exp, p)


# ---------------------------------------------------------------------------
# naive algebra


def _derivation(P, basis, p):
    if basis == DERIVATION:
        return pm_deriv(P, p)
    return pm_trim(P * np.arange(P.shape[-1], dtype=np.int64) % p) if P.shape[-1] else P


def _derivation_power(P, basis, s, p):
    if basis == DERIVATION:
        for _ in range(s):
            P = pm_deriv(P, p)
        return P
    if not P.shape[-1]:
        return P
    w = np.array([pow(c, s, p) for c in range(P.shape[-1])], dtype=np.int64)
    return pm_trim(P * w % p)


def op_mul_naive(L1, L2):
    """Product L1 * L2 by the Leibniz expansion X^i b = sum_s C(i,s) X^s(b) X^(i-s)."""
    if L1.basis != L2.basis or L1.p != L2.p:
        raise ValueError("operators live in different algebras")
    if L1.form != RIGHT or L2.form != RIGHT:
        raise ValueError("right form expected")
    p, basis = L1.p, L1.basis
    n = L1.size
    if L1.order < 0 or L2.order < 0:
        return L1.with_coeffs(np.zeros((0, n, n, 0), dtype=np.int64))
    length = max(L1.coeffs.shape[-1] + L2.coeffs.shape[-1] - 1, 0)
    out = np.zeros((L1.order + L2.order + 1, n, n, length), dtype=np.int64)
    # derivatives of the right factor's coefficients, by order
    ders = [[L2.coeffs[j] for j in range(L2.order + 1)]]
    for s in range(1, L1.order + 1):
        ders.append([_derivation(P, basis, p) for P in ders[-1]])
    for i in range(L1.order + 1):
        a = L1.coeffs[i]
        if not a.any():
            continue
        for s in range(i + 1):
            cis = comb(i, s) % p
            if not cis:
                continue
            for j in range(L2.order + 1):
                b = ders[s][j]
                if not b.shape[-1] or not b.any():
                    continue
                prod = polymat_mul(a, b, p) * cis % p
                k = i - s + j
                out[k, :, :, :prod.shape[-1]] = (out[k, :, :, :prod.shape[-1]] + prod) % p
    return L1.with_coeffs(out)


def apply_poly_naive(L, E):
    """L applied to a polynomial matrix E (r x m x length), termwise."""
    p = L.p
    if E.ndim == 1:
        return R.trim(apply_poly_naive(L, E[None, None, :])[0, 0])
    n, m = E.shape[:2]
    if L.order < 0 or not E.shape[-1]:
        return np.zeros((L.size, m, 0), dtype=np.int64)
    if L.form == RIGHT:
        # one product [c_0 ... c_rho] times [E; X(E); ...; X^rho(E)]
        stack = [E]
        for _ in range(L.order):
            stack.append(pm_pad(_derivation(stack[-1], L.basis, p), E.shape[-1]))
        S = np.concatenate(stack, axis=0)
        C = L.coeffs.transpose(1, 0, 2, 3).reshape(L.size, (L.order + 1) * n, -1)
        out = polymat_mul(C, S, p)
        return pm_trim(out)
    acc = np.zeros(E.shape[:2] + (0,), dtype=np.int64)
    for j in range(L.order + 1):
        c = L.coeffs[j]
        if not c.any():
            continue
        term = _derivation_power(polymat_mul(c, E, p), L.basis, j, p)
        w = max(acc.shape[-1], term.shape[-1])
        acc = (pm_pad(acc, w) + pm_pad(term, w)) % p
    return pm_trim(acc)


# ---------------------------------------------------------------------------
# conversions


def stirling1(n, p):
    """Signed Stirling numbers of the first kind s(j, i) mod p for 0 <= i, j <= n."""
    S = np.zeros((n + 1, n + 1), dtype=np.int64)
    S[0, 0] = 1
    for j in range(n):
        S[j + 1, 1:] = (S[j, :-1] - j * S[j, 1:]) % p
    return S


def to_euler(L):
    """x^r L rewritten in theta, right form; uses x^j D^j = theta(theta-1)...(theta-j+1)."""
    if L.basis != DERIVATION or L.form != RIGHT:
        raise ValueError("expected a right-form operator in D")
    p, r, n = L.p, L.order, L.size
    length = L.coeffs.shape[-1] + r
    T = np.zeros((r + 1, n, n, length), dtype=np.int64)
    for j in range(r + 1):
        T[j, :, :, r - j:r - j + L.coeffs.shape[-1]] = L.coeffs[j]
    S = stirling1(r, p)
    out = matmul_mod(S.T.copy(), T.reshape(r + 1, -1), p).reshape(T.shape)
    return DiffOp(out, p, EULER, RIGHT)


def _shift_theta_slices(C, sign, p):
    """For each x-degree a, substitute theta -> theta + sign*a in the theta-polynomial."""
    order1, n, _, length = C.shape
    rows = C.transpose(3, 1, 2, 0).reshape(length, n * n, order1)  # (a, entry, theta power)
    shifts = (sign * np.arange(length, dtype=np.int64))[:, None]
    if order1 <= p:
        out = R.taylor_shift_rows(rows, shifts, p)
    else:
        out = np.array([[R._pad(R.taylor_shift(R.trim(f), sign * a, p), order1) for f in blk]
                        for a, blk in enumerate(rows)], dtype=np.int64)
    return np.ascontiguousarray(out.reshape(length, n, n, order1).transpose(3, 1, 2, 0))


def left_right_convert(L):
    """Toggle between right form sum c_i theta^i and left form sum theta^i c_i."""
    if L.basis != EULER:
        raise ValueError("left/right forms are defined for theta operators")
    if L.order < 0:
        return L.with_coeffs(L.coeffs, form=LEFT if L.form == RIGHT else RIGHT)
    if L.form == RIGHT:
        # x^a theta^i = (theta - a)^i x^a
        return L.with_coeffs(_shift_theta_slices(L.coeffs, -1, L.p), form=LEFT)
    # theta^i x^a = x^a (theta + a)^i
    return L.with_coeffs(_shift_theta_slices(L.coeffs, 1, L.p), form=RIGHT)


# ---------------------------------------------------------------------------
# fast application


def _theta_power_weights(length, e, p):
    c = np.arange(length, dtype=np.int64) % p
    out = np.ones(length, dtype=np.int64)
    base = c.copy()
    while e:
        if e & 1:
            out = out * base % p
        e >>= 1
        if e:
            base = base * base % p
    return out


class BsgsPlan:
    """Precomputed slices of a theta operator for repeated baby-step/giant-step application."""

    def __init__(self, L, block=None, baby=None):
        if L.basis != EULER or L.form != RIGHT:
            raise ValueError("expected a right-form theta operator")
        self.p = p = L.p
        self.rho = rho = L.order
        self.delta = L.degree
        self.n = n = L.size
        self.k = k = max(1, min(baby or isqrt(rho), rho + 1))
        self.h = h = -(-(rho + 1) // k)
        left = left_right_convert(L).coeffs
        width = left.shape[-1]
        if block is None:
            # blocks fill power-of-two transforms at least twice the operator width
            block = (1 << (2 * width - 1).bit_length()) - width + 1
        self.block = max(block, width - 1, 1)
        coeffs = np.zeros((h * k, n, n, width), dtype=np.int64)
        coeffs[:left.shape[0]] = left
        big = np.zeros((h * n, k * n, width), dtype=np.int64)
        for j in range(h):
            Lj = DiffOp(coeffs[j * k:(j + 1) * k], p, EULER, LEFT)
            dag = left_right_convert(Lj).coeffs
            for i in range(dag.shape[0]):
                big[j * n:(j + 1) * n, i * n:(i + 1) * n, :dag.shape[-1]] = dag[i]
        self.big = big
        self._spectra = {}

    def apply(self, E):
        p, n, k, h, blk = self.p, self.n, self.k, self.h, self.block
        m = E.shape[1]
        length = E.shape[-1]
        if not length:
            return E
        s = -(-length // blk)
        Epad = pm_pad(E, s * blk)
        Ebig = np.zeros((k * n, s * m, blk), dtype=np.int64)
        idx = np.arange(s * blk, dtype=np.int64) % p
        w = np.ones(s * blk, dtype=np.int64)
        for i in range(k):
            Ei = Epad * w % p  # theta^i E
            Ebig[i * n:(i + 1) * n] = Ei.reshape(n, m, s, blk).transpose(0, 2, 1, 3).reshape(n, s * m, blk)
            w = w * idx % p
        W = polymat_mul(self.big, Ebig, p, self._spectra)  # (h n, s m, blk + width - 1)
        wl = W.shape[-1]
        W = W.reshape(h, n, s, m, wl).transpose(0, 1, 3, 2, 4)
        total = (s + 1) * blk if wl > blk else s * blk
        acc = np.zeros((h, n, m, s + 1, blk), dtype=np.int64)
        acc[..., :s, :] = W[..., :blk]
        if wl > blk:
            # block u spills at most blk coefficients into block u + 1
            acc[..., 1:, :wl - blk] += W[..., blk:]
        acc = acc.reshape(h, n, m, -1)[..., :total] % p
        giant = np.ones((h, total), dtype=np.int64)
        step = _theta_power_weights(total, k, p)
        for j in range(1, h):
            giant[j] = giant[j - 1] * step % p
        out = (acc * giant[:, None, None, :] % p).sum(axis=0) % p
        return pm_trim(out)


def use_bsgs(rho, delta, eps):
    return rho >= 4 and eps <= 4 * rho ** 0.5 * delta


def apply_poly_bsgs(L, E, plan=None, block=None):
    """L E for a right-form theta operator and polynomial matrix E, by baby steps / giant steps.

    Falls back to the naive route outside the regime where slicing pays off.
    """
    if E.ndim == 1:
        return R.trim(apply_poly_bsgs(L, E[None, None, :], plan, block)[0, 0])
    if plan is None:
        if not use_bsgs(L.order, L.degree, E.shape[-1]):
            return apply_poly_naive(L, E)
        plan = BsgsPlan(L, block)
    return plan.apply(E)


class RatApplyPlan:
    """Theta form and BSGS slices of a D-operator, reusable across apply_rat calls."""

    def __init__(self, L, block=None, baby=None):
        self.op = L
        self.euler = to_euler(L)
        self.block = block
        self.baby = baby
        self._plan = None

    def bsgs(self):
        if self._plan is None:
            self._plan = BsgsPlan(self.euler, self.block, self.baby)
        return self._plan


def apply_rat(L, A, plan=None):
    """L applied to A = B / b^kappa, returned as B* / b^(kappa + order(L)).

    Works on the truncated series A mod x^eps, where eps bounds the degree of
    x^rho b^(kappa+rho) L(A), through the theta form of x^rho L. Requires b(0) != 0.
    """
    p = L.p
    b, kappa = A.den, A.exp
    if not len(b) or b[0] == 0:
        raise ZeroDivisionError("denominator must not vanish at 0")
    if plan is None:
        plan = RatApplyPlan(L)
    L = plan.op
    rho, delta = L.order, L.degree
    db = R.degree(b)
    degB = A.num.shape[-1] - 1
    eps = max(kappa * db, degB) + rho * db + delta + rho + 1
    inv = R.series_inv(R.power(b, kappa, p), eps, p)
    num = A.num[..., :eps]
    E = conv_rows(num, inv, p)[..., :eps] if num.shape[-1] else num
    if use_bsgs(rho, delta + rho, eps):
        LE = plan.bsgs().apply(E)
    else:
        LE = apply_poly_naive(plan.euler, E)
    LE = pm_pad(LE[..., :eps], eps)
    Bstar = conv_rows(LE, R.power(b, kappa + rho, p), p)[..., :eps]
    if Bstar[..., :rho].any():
        raise ArithmeticError("result not divisible by x^rho")
    Bstar = Bstar[..., rho:]
    return RatMat(pm_trim(Bstar), b, kappa + rho, p)


# ---------------------------------------------------------------------------
# scalar operators: companion matrix and regularization


def companion(L):
    """Companion matrix B_1 / l_r of a scalar operator, as a RatMat with exponent 1."""
    if L.size != 1:
        raise ValueError("companion matrix of a scalar operator only")
    r = L.order
    lr = L.leading
    if r < 1 or not len(lr):
        raise ValueError("operator must have positive order and nonzero leading coefficient")
    p = L.p
    width = L.coeffs.shape[-1]
    num = np.zeros((r, r, width), dtype=np.int64)
    for i in range(1, r):
        num[i, i - 1, :len(lr)] = lr
    for i in range(r):
        num[i, r - 1] = (-L.coeffs[i, 0, 0]) % p
    return RatMat(pm_trim(num), lr, 1, p)


def shift_op(L, c):
    """Coefficients translated x -> x + c."""
    p = L.p
    flat = L.coeffs.reshape(-1, L.coeffs.shape[-1])
    out = np.array([R._pad(R.taylor_shift(R.trim(f), c, p), flat.shape[1]) for f in flat], dtype=np.int64)
    return L.with_coeffs(out.reshape(L.coeffs.shape) if out.size else L.coeffs)


def satisfies_h(lr, p):
    if R.degree(lr) < p:
        return len(lr) > 0
    xp_minus_x = R.sub(R.monomial(p, p), R.monomial(1, p), p)
    return len(R.divrem(lr, xp_minus_x, p)[1]) > 0


def regularize(L):
    """Translate the origin to the smallest x0 >= 0 with l_r(x0) != 0.

    Returns (shifted operator, x0). Raises HypothesisError when l_r vanishes on F_p.
    """
    p = L.p
    lr = L.leading
    if not satisfies_h(lr, p):
        raise HypothesisError("leading coefficient vanishes on all of F_p; a field extension is needed")
    if lr[0] != 0:
        return L, 0
    cands = list(range(min(R.degree(lr), p - 1) + 1))
    vals = R.multipoint_eval(lr, cands, p)
    x0 = next(t for t, v in zip(cands, vals) if v)
    return shift_op(L, x0), x0


# ---------------------------------------------------------------------------
# operators with power-of-b denominators


class ScaledOp:
    """sum_{j<=h} (g_j / b^(h-j)) D^j with g_j r x r polynomial matrices.

    d is a degree bound with deg b <= d and deg g_j <= d (h - j); by default the
    smallest one compatible with the data.
    """

    def __init__(self, b, h, num, p, d=None):
        self.b = R.poly(b, p)
        self.h = h
        num = np.asarray(num, dtype=np.int64) % p
        if num.shape[0] != h + 1:
            raise ValueError("need h + 1 numerators")
        self.num = num
        self.p = p
        need = max(R.degree(self.b), 0)
        for j in range(h + 1):
            g = pm_trim(num[j]) if num.shape[-1] else num[j]
            dg = g.shape[-1] - 1
            if dg > 0 and j == h:
                raise ValueError("leading numerator must be constant")
            if dg > 0:
                need = max(need, -(-dg // (h - j)))
        if d is not None and d < need:
            raise ValueError(f"degree bound {d} below the data's {need}")
        self.d = need if d is None else d

    @property
    def size(self):
        return self.num.shape[1]

    def numerator(self, j):
        return pm_trim(self.num[j])

    def cleared(self):
        """b^h times the operator: a polynomial-coefficient DiffOp in D."""
        p = self.p
        coeffs = []
        bj = R.const(1, p)
        for j in range(self.h + 1):
            coeffs.append(conv_rows(self.num[j], bj, p) if self.num.shape[-1] else self.num[j])
            bj = R.mul(bj, self.b, p)
        width = max(c.shape[-1] for c in coeffs)
        return DiffOp(np.stack([pm_pad(c, width) for c in coeffs]), p, DERIVATION, RIGHT)

    def __repr__(self):
        return f"ScaledOp(h={self.h}, deg b={R.degree(self.b)}, size={self.size}, p={self.p})"


def _falling_table(rows, cols, p):
    """F[n, t] = n (n-1) ... (n-t+1) mod p."""
    n = np.arange(rows, dtype=np.int64) % p
    F = np.ones((rows, cols), dtype=np.int64)
    for t in range(1, cols):
        F[:, t] = F[:, t - 1] * ((n - (t - 1)) % p) % p
    return F


def _inverse_falling_square(H, p):
    """Inverse of F[i, t] = i^(t falling), 0 <= i, t <= H < p."""
    fact, ifact = R._factorials(H, p)
    i = np.arange(H + 1)
    C = np.zeros((H + 1, H + 1), dtype=np.int64)
    for t in range(H + 1):
        js = i[:t + 1]
        vals = fact[t] * ifact[js] % p * ifact[t - js] % p
        sign = np.where((t - js) % 2 == 1, p - 1, 1)
        C[t, :t + 1] = vals * sign % p * ifact[t] % p
    return C


def _series_coeffs(num, b, h, length, p):
    """Series num_j / b^(h-j) mod x^length, shape (h+1, r, r, length)."""
    if not num.shape[-1]:
        return np.zeros(num.shape[:3] + (length,), dtype=np.int64)
    # num_j b^j over the common denominator b^h
    pows = [R.const(1, p)]
    for _ in range(h):
        pows.append(R.mul(pows[-1], b, p))
    n = max(len(f) for f in pows)
    P = np.stack([R._pad(f, n) for f in pows])[:, None, None, :]
    lifted = conv_rows(num[..., :length], P, p)[..., :length]
    inv = R._pad(R.series_inv(pows[h], length, p), length)
    return pm_pad(conv_rows(lifted, inv, p)[..., :length], length)


def _skew_gather(Fp, rows, cols, off):
    """out[..., i, c] = Fp[..., i, c - i + off] where the index is >= 0, else 0."""
    i = np.arange(rows)[:, None]
    c = np.arange(cols)[None, :]
    idx = c - i + off
    mask = idx >= 0
    idx = np.where(mask, idx, 0)
    lead = Fp.shape[:-2]
    g = np.take_along_axis(Fp, np.broadcast_to(idx, lead + idx.shape), axis=-1)
    return g * mask


def scaled_op_mul(gamma, mu):
    """Product of two ScaledOps with the same b, by evaluation on the monomials x^i.

    Values of mu on x^0..x^H (H = h1 + h2) as truncated series are pushed through
    the matrix of gamma on monomials in one matrix product; the result is
    interpolated back from its values and its numerators recovered by
    multiplication with powers of b.
    """
    p = gamma.p
    if not np.array_equal(gamma.b, mu.b):
        raise ValueError("factors must share the denominator b")
    b = gamma.b
    if not len(b) or b[0] == 0:
        raise ZeroDivisionError("b(0) must be nonzero")
    h1, h2 = gamma.h, mu.h
    H = h1 + h2
    if H > p - 1:
        raise ValueError("h1 + h2 must not exceed p - 1")
    n = gamma.size
    db = max(gamma.d, mu.d)
    N = db * H + 1
    T = N + H
    K = T + h1
    # gamma on x^c for c < K, truncated mod x^T
    gs = _series_coeffs(gamma.num, b, h1, T + h1, p)
    Gam = np.zeros((h1 + 1, n, n, T + h1), dtype=np.int64)
    for t in range(h1 + 1):
        Gam[t, :, :, h1 - t:] = gs[t, :, :, :T + t]
    Gp = matmul_mod(_falling_table(K, h1 + 1, p), Gam.reshape(h1 + 1, -1), p)
    Gp = Gp.reshape(K, n, n, T + h1).transpose(1, 2, 0, 3)
    G = _skew_gather(Gp, K, T, h1)  # (a, b, row c, col)
    # mu on x^i for i <= H, truncated mod x^K
    ms = _series_coeffs(mu.num, b, h2, K + h2, p)
    Mu = np.zeros((h2 + 1, n, n, K + h2), dtype=np.int64)
    for t in range(h2 + 1):
        Mu[t, :, :, h2 - t:] = ms[t, :, :, :K + t]
    Sp = matmul_mod(_falling_table(H + 1, h2 + 1, p), Mu.reshape(h2 + 1, -1), p)
    Sp = Sp.reshape(H + 1, n, n, K + h2).transpose(1, 2, 0, 3)
    S = _skew_gather(Sp, H + 1, K, h2)  # (b, c, i, row)
    Sbig = S.transpose(1, 2, 0, 3).reshape(n * (H + 1), n * K)
    Gbig = G.transpose(1, 2, 0, 3).reshape(n * K, n * T)
    V = matmul_mod(Sbig, Gbig, p).reshape(n, H + 1, n, T).transpose(2, 0, 1, 3)  # (a, c, i, col)
    Vp = _skew_gather_back(V, H, T)
    eta = matmul_mod(_inverse_falling_square(H, p), Vp.transpose(2, 0, 1, 3).reshape(H + 1, -1), p)
    eta = eta.reshape(H + 1, n, n, T)
    # eta_t[c] = eta'[t, c + H - t]
    series = np.zeros((H + 1, n, n, N), dtype=np.int64)
    for t in range(H + 1):
        series[t] = eta[t, :, :, H - t:H - t + N]
    bp = [R.const(1, p)]
    for _ in range(H):
        bp.append(R.mul(bp[-1], b, p))
    P = np.stack([R._pad(bp[H - t], N)[:N] for t in range(H + 1)])[:, None, None, :]
    num = conv_rows(series, P, p)[..., :N]
    for t in range(H + 1):
        if num[t, :, :, db * (H - t) + 1:].any():
            raise ArithmeticError("numerator exceeds its degree bound")
    return ScaledOp(b, H, num[..., :N], p, db)


def _skew_gather_back(V, H, T):
    """Vp[..., i, m] = V[..., i, m - H + i] for m in [0, T)."""
    i = np.arange(H + 1)[:, None]
    m = np.arange(T)[None, :]
    idx = m - H + i
    mask = (idx >= 0) & (idx < T)
    idx = np.where(mask, idx, 0)
    lead = V.shape[:-2]
    g = np.take_along_axis(V, np.broadcast_to(idx, lead + idx.shape), axis=-1)
    return g * mask
