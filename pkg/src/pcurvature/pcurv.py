"""p-curvature of scalar differential operators over F_p[x].

For L of order r with companion matrix A = B_1 / l_r, the p-curvature is A_p where
A_1 = A and A_{k+1} = A_k' + A A_k. It is always returned as B_p / l_r^p.
"""

from dataclasses import dataclass, field
from math import isqrt
import numpy as np

from . import modring as R
from ._kernels import conv_rows
from .diffop import (DiffOp, PreconditionError, RatApplyPlan, RatMat, ScaledOp, apply_poly_naive,
                     companion, regularize, scaled_op_mul)
from .linalg import identity, pm_pad, pm_trim, wronskian_select
from .polsol import basis_G, dimension_G, min_degree_solution, rational_solution_space

TAIL_STEPS = 64
# block length k ~ m^BLOCK_EXPONENT for m remaining steps
BLOCK_EXPONENT = 0.55


@dataclass
class Curvature:
    Ap: RatMat
    pth_root: tuple = None  # (num, den) with (num / den)^p = the 1x1 entry, order one only
    shift: int = 0

    def normal_form(self):
        return self.Ap.normal_form()


def _scalar(L):
    if L.size != 1 or L.basis != "D" or L.form != "right":
        raise ValueError("scalar right-form operator in D expected")
    if L.order < 1:
        raise ValueError("operator of positive order expected")


def _katz_step(Bk, k, B1, ell, dell, p):
    """l B_k' - k l' B_k + B_1 B_k: the numerator of A_{k+1} over l^(k+1)."""
    r, c, n = Bk.shape
    if not n:
        return Bk
    M = B1.copy() if B1.shape[-1] >= len(dell) else pm_pad(B1, len(dell))
    if len(dell) and k % p:
        M[np.arange(r), np.arange(r), :len(dell)] -= (k % p) * dell
        M %= p
    lm = M.shape[-1]
    out = np.zeros((r, c, max(n + len(ell) - 2, n + lm - 1)), dtype=np.int64)
    # number of products summed into one slot before reduction
    lazy = (len(ell) + lm * r) * (p - 1) ** 2 < 1 << 63
    if n > 1:
        dB = Bk[..., 1:] * np.arange(1, n, dtype=np.int64) % p
        for s, ls in enumerate(ell):
            if ls:
                out[..., s:s + n - 1] += ls * dB
                if not lazy:
                    out %= p
    for s in range(lm):
        Ms = M[:, :, s]
        if not Ms.any():
            continue
        if r == 1:
            out[..., s:s + n] += Ms[0, 0] * Bk
        else:
            for i in range(r):
                for j in range(r):
                    if Ms[i, j]:
                        out[i, :, s:s + n] += Ms[i, j] * Bk[j]
                        if not lazy:
                            out[i] %= p
        if not lazy:
            out %= p
    return pm_trim(out % p)


def katz_recurrence(L, k=None):
    """A_k as B_k / l_r^k by the integral matrix recurrence; k defaults to p."""
    _scalar(L)
    p = L.p
    k = p if k is None else k
    A = companion(L)
    B1, ell = A.num, A.den
    dell = R.deriv(ell, p)
    Bk = B1
    for j in range(1, k):
        Bk = _katz_step(Bk, j, B1, ell, dell, p)
    return RatMat(Bk, ell, k, p)


def katz_vector(L):
    """Same output as katz_recurrence(L, p), from matrix-vector steps only.

    W_m = l^m (D + A)^m e_1 and column j of B_p is W_{p+j} / l^j.
    """
    _scalar(L)
    p, r = L.p, L.order
    A = companion(L)
    B1, ell = A.num, A.den
    dell = R.deriv(ell, p)
    W = _unit_column(r)
    cols = []
    for m in range(p + r - 1):
        W = _katz_step(W, m, B1, ell, dell, p)
        if m + 1 >= p:
            cols.append(W)
    return _from_columns(cols, ell, p)


def _unit_column(r):
    W = np.zeros((r, 1, 1), dtype=np.int64)
    W[0, 0, 0] = 1
    return W


def _from_columns(cols, ell, p):
    """B_p / l^p from the numerators W_p, ..., W_{p+r-1}: column j is W_{p+j} / l^j."""
    r = len(cols)
    n = max(c.shape[-1] for c in cols)
    num = np.zeros((r, r, n), dtype=np.int64)
    lj = R.const(1, p)
    for j, c in enumerate(cols):
        for i in range(r):
            q = R.div_exact(R.trim(c[i, 0]), lj, p)
            num[i, j, :len(q)] = q
        lj = R.mul(lj, ell, p)
    return RatMat(pm_trim(num), ell, p, p)


# ---------------------------------------------------------------------------
# order one


def _order1_parts(a, b, p):
    """(a s + b) where s^p = (b/a)^(p-1 derivatives); a(0) != 0."""
    d = max(R.degree(a), R.degree(b), 1)
    targets = [i * p + p - 1 for i in range(d)]
    u = R.coeff_jump(a, b, targets, 1, p)
    s = R.trim(np.array([(-int(w[0])) % p for w in u], dtype=np.int64))
    As = R.mul_trunc(a, s, d, p)
    return R.add(As, b, p)


def pcurvature_order1(L):
    """Closed form for L = a D - b: entry ((a s + b) / a)^p, with (a s + b, a) as p-th root."""
    _scalar(L)
    if L.order != 1:
        raise ValueError("order one operator expected")
    p = L.p
    L2, x0 = regularize(L)
    a, b = L2.scalar_coeff(1), R.neg(L2.scalar_coeff(0), p)
    root = _order1_parts(a, b, p)
    num = R.compose_xp(root, p)
    Ap = RatMat(num[None, None, :], a, p, p)
    if x0:
        Ap = Ap.shift(-x0)
        root, a = R.taylor_shift(root, -x0, p), R.taylor_shift(a, -x0, p)
    return Curvature(Ap, (root, a), x0)


# ---------------------------------------------------------------------------
# order two


def _order2_parts(L):
    if L.order != 2:
        raise ValueError("order two operator expected")
    if L.p == 2:
        raise PreconditionError("p = 2 is not supported for order two")
    return L.scalar_coeff(2), L.scalar_coeff(1), L.scalar_coeff(0)


def trace_pcurvature(L):
    """Trace of A_p as a 1x1 RatMat, from the order-one operator v D + w."""
    _scalar(L)
    v, w, _ = _order2_parts(L)
    return pcurvature_order1(DiffOp.scalar([w, v], L.p)).Ap


def nilpotence_test(L):
    """True iff A_p is nilpotent: zero trace and a nonzero polynomial solution."""
    _scalar(L)
    _order2_parts(L)
    tau = trace_pcurvature(L)
    if tau.num.shape[-1] and tau.num.any():
        return False
    return dimension_G(L) > 0


@dataclass
class EigenringSystem:
    """Coefficients of the first-order system for matrices commuting with D + A."""
    EigA: np.ndarray
    EigB: np.ndarray
    EigR: np.ndarray
    EigS: np.ndarray
    EigT: np.ndarray
    v: np.ndarray
    w: np.ndarray
    p: int

    def operator(self):
        """v^3 D^3 + A D + B, the scalar equation for the (2,1) entry."""
        v3 = R.power(self.v, 3, self.p)
        return DiffOp.scalar([self.EigB, self.EigA, [0], v3], self.p)


def eigenring_system(L):
    _scalar(L)
    v, w, u = _order2_parts(L)
    p = L.p
    m, a, s, D = R.mul, R.add, R.sub, R.deriv
    half = R.inv_mod(2, p)
    dv, dw, du = D(v, p), D(w, p), D(u, p)
    d2v, d2w = D(dv, p), D(dw, p)
    inner = R.sub(R.add(R.scale(m(dw, v, p), -2, p), R.scale(m(w, dv, p), 2, p), p),
                  m(w, w, p), p)
    inner = a(inner, R.scale(m(u, v, p), 4, p), p)
    EA = m(v, inner, p)
    EB = m(m(v, w, p), s(d2v, dw, p), p)
    EB = a(EB, m(m(dv, w, p), s(w, R.scale(dv, 2, p), p), p), p)
    EB = a(EB, R.scale(m(du, m(v, v, p), p), 2, p), p)
    EB = s(EB, R.scale(m(m(v, u, p), dv, p), 2, p), p)
    EB = s(EB, m(d2w, m(v, v, p), p), p)
    EB = a(EB, R.scale(m(m(dv, dw, p), v, p), 2, p), p)
    ER = R.scale(m(v, v, p), half, p)
    ES = R.scale(m(v, w, p), -half, p)
    ET = a(R.scale(s(m(dv, w, p), m(v, dw, p), p), half, p), m(u, v, p), p)
    return EigenringSystem(EA, EB, ER, ES, ET, v, w, p)


@dataclass
class Order2Report:
    """Outcome of the structural analysis of an order-two operator.

    kind is 'exact' (curvature), 'two_candidates' (candidates) or 'up_to_constant'
    (A_p = base + c * direction for a nonzero c in F_p[x^p] of degree <= p d;
    determined=False when the constant could not be constrained further).
    """
    tau: RatMat
    gamma: int
    beta: int
    kind: str
    curvature: RatMat = None
    candidates: list = field(default_factory=list)
    base: RatMat = None
    direction: RatMat = None
    determined: bool = True
    shift: int = 0

    def consistent_with(self, Ap):
        """Whether the matrix Ap (a RatMat) is compatible with this report."""
        if self.kind == "exact":
            return self.curvature == Ap
        if self.kind == "two_candidates":
            return any(c == Ap for c in self.candidates)
        return self.solve_constant(Ap) is not None

    def solve_constant(self, Ap):
        """c in F_p[x^p] with Ap = base + c * direction, or None."""
        p = Ap.p
        # bring everything over the direction's denominator
        diff = _ratmat_sub(Ap, self.base)
        dn = self.direction
        # c * dn.num[i,j] * diff.den^e = diff.num[i,j] * dn.den^e', entrywise
        left_scale = diff.denominator()
        right_scale = dn.denominator()
        c = None
        for i in range(2):
            for j in range(2):
                t = R.mul(R.trim(dn.num[i, j]), left_scale, p)
                q = R.mul(R.trim(diff.num[i, j]), right_scale, p)
                if not len(t):
                    if len(q):
                        return None
                    continue
                quo, rem = R.divrem(q, t, p)
                if len(rem):
                    return None
                if c is None:
                    c = quo
                elif not np.array_equal(c, quo):
                    return None
        if c is None or not len(c):
            return None
        try:
            R.pth_root_poly(c, p)
        except ValueError:
            return None
        return c


def _ratmat_sub(X, Y):
    p = X.p
    dx, dy = X.denominator(), Y.denominator()
    a = conv_rows(X.num, dy, p) if X.num.shape[-1] else X.num
    b = conv_rows(Y.num, dx, p) if Y.num.shape[-1] else Y.num
    n = max(a.shape[-1], b.shape[-1])
    num = (pm_pad(a, n) - pm_pad(b, n)) % p
    return RatMat(pm_trim(num), R.mul(dx, dy, p), 1, p)


def _diag_half(tau, p, extra):
    """(tau / 2) I over v^(p + extra), numerator times v^extra."""
    half = R.inv_mod(2, p)
    t = R.scale(R.trim(tau.num[0, 0]), half, p) if tau.num.shape[-1] else np.zeros(0, dtype=np.int64)
    t = R.mul(t, R.power(tau.den, extra, p), p)
    num = np.zeros((2, 2, max(len(t), 1)), dtype=np.int64)
    num[0, 0, :len(t)] = t
    num[1, 1, :len(t)] = t
    return RatMat(pm_trim(num), tau.den, tau.exp + extra, p)


def pcurvature_order2(L):
    """Trace, eigenring dimension gamma and solution dimension beta, and what they pin down."""
    _scalar(L)
    _order2_parts(L)
    p = L.p
    L2, x0 = regularize(L)
    v, w, _ = _order2_parts(L2)
    tau = trace_pcurvature(L2)
    eig = eigenring_system(L2)
    G3 = basis_G(eig.operator())
    gamma = 1 + len(wronskian_select(sorted(G3.basis, key=len), p))
    beta = rational_solution_space(L2).dimension
    tau_zero = not (tau.num.shape[-1] and tau.num.any())

    def out(rep):
        if x0:
            for name in ("tau", "curvature", "base", "direction"):
                val = getattr(rep, name)
                if val is not None:
                    setattr(rep, name, val.shift(-x0))
            rep.candidates = [c.shift(-x0) for c in rep.candidates]
            rep.shift = x0
        return rep

    if gamma == 4:
        return out(Order2Report(tau, gamma, beta, "exact", curvature=_diag_half(tau, p, 0)))
    if beta == 2:
        zero = RatMat(np.zeros((2, 2, 0), dtype=np.int64), v, p, p)
        return out(Order2Report(tau, gamma, beta, "exact", curvature=zero))
    phi = min_degree_solution(G3)
    half = R.inv_mod(2, p)
    dphi = R.deriv(phi, p)
    Q = R.sub(R.mul(w, phi, p), R.mul(v, dphi, p), p)  # w phi - v phi'
    Y = R.add(R.add(R.mul(eig.EigR, R.deriv(dphi, p), p), R.mul(eig.EigS, dphi, p), p),
              R.mul(eig.EigT, phi, p), p)
    entries = [[R.scale(R.mul(Q, v, p), half, p), R.neg(Y, p)],
               [R.mul(phi, R.mul(v, v, p), p), R.scale(R.mul(Q, v, p), -half, p)]]
    n = max(len(e) for row in entries for e in row)
    dnum = np.zeros((2, 2, n), dtype=np.int64)
    for i in range(2):
        for j in range(2):
            dnum[i, j, :len(entries[i][j])] = entries[i][j]
    direction = RatMat(dnum, v, p + 2, p)
    base = _diag_half(tau, p, 2)
    if tau_zero:
        return out(Order2Report(tau, gamma, beta, "up_to_constant", base=base, direction=direction))
    if beta == 1:
        tn = R.trim(tau.num[0, 0])
        top = R.mul(R.mul(tn, tn, p), R.mul(v, v, p), p)
        bottom = R.sub(R.mul(Q, Q, p), R.scale(R.mul(phi, Y, p), 4, p), p)
        c2, rem = R.divrem(top, bottom, p)
        if len(rem):
            raise AssertionError("c^2 is not a polynomial")
        croot = R.poly_sqrt(R.pth_root_poly(c2, p), p)
        if croot is None:
            raise AssertionError("c^2 is not a square in F_p[x^p]")
        c = R.compose_xp(croot, p)
        cands = []
        for sgn in (1, -1):
            cd = conv_rows(dnum, R.scale(c, sgn, p), p)
            width = max(cd.shape[-1], base.num.shape[-1])
            num = (pm_pad(cd, width) + pm_pad(base.num, width)) % p
            cands.append(RatMat(pm_trim(num), v, p + 2, p))
        return out(Order2Report(tau, gamma, beta, "two_candidates", candidates=cands))
    return out(Order2Report(tau, gamma, beta, "up_to_constant", base=base, direction=direction,
                            determined=False))


# ---------------------------------------------------------------------------
# general order


@dataclass
class LambdaPower:
    k: int
    op: ScaledOp


def _lambda(L):
    A = companion(L)
    r = L.order
    width = max(A.num.shape[-1], 1)
    num = np.zeros((2, r, r, width), dtype=np.int64)
    num[0, :, :, :A.num.shape[-1]] = A.num
    num[1, :, :, 0] = identity(r)
    return ScaledOp(A.den, 1, num, L.p, max(L.degree, 0))


def lambda_power(L, k):
    """(D + A)^k as a ScaledOp over b = l_r, by repeated squaring."""
    _scalar(L)
    p = L.p
    if k > p - 1:
        raise ValueError("k must be at most p - 1")
    lam = _lambda(L)
    if k == 0:
        num = identity(L.order)[None, :, :, None]
        return LambdaPower(0, ScaledOp(lam.b, 0, num, p, lam.d))
    res = lam
    for bit in bin(k)[3:]:
        res = scaled_op_mul(res, res)
        if bit == "1":
            res = scaled_op_mul(res, lam)
    return LambdaPower(k, res)


def block_size(m, exponent=BLOCK_EXPONENT):
    """Largest k >= 1 with k <= m^exponent."""
    k = max(1, int(m ** exponent))
    while k > 1 and k > m ** exponent:
        k -= 1
    while (k + 1) <= m ** exponent:
        k += 1
    return k


def _block_steps(gamma, num, kappa, times, ell, p, baby=None):
    """Apply the cleared block operator `times` times to num / ell^kappa.

    gamma(num / ell^kappa) * ell^kappa is the next numerator, so no division by a
    power of ell is needed. It is read off x^k gamma through the theta form.
    """
    k, delta = gamma.order, gamma.degree
    plan = RatApplyPlan(gamma, baby=baby)
    ellk = R.power(ell, k, p)
    lmax = k + delta + max(num.shape[-1] - 1, 0) + times * (delta + 1) + 1
    inv_k = R.series_inv(ellk, lmax, p)
    bpow = R.power(ell, kappa, p)
    inv = R.series_inv(bpow, lmax, p)
    for _ in range(times):
        eps = k + delta + num.shape[-1]
        E = conv_rows(num, inv[:eps], p)[..., :eps]
        # chunking keeps slicing profitable for long series, so only tiny k go naive
        if k >= 4:
            LE = plan.bsgs().apply(E)
        else:
            LE = apply_poly_naive(plan.euler, E)
        LE = pm_pad(LE[..., :eps], eps)
        nxt = conv_rows(LE, bpow[:eps], p)[..., :eps]
        if nxt[..., :k].any():
            raise ArithmeticError("result not divisible by x^k")
        num = pm_trim(nxt[..., k:])
        bpow = R.mul(bpow, ellk, p)
        inv = R.mul_trunc(inv, inv_k, lmax, p)
    return num


def pcurvature_general(L, threshold=TAIL_STEPS, exponent=BLOCK_EXPONENT, vector=True):
    """A_p as (D + A)^(p-1) applied to A, in blocks of k ~ m^exponent steps.

    Each block applies the cleared operator l^k (D + A)^k through its theta form;
    fewer than `threshold` leftover steps are single recurrence steps. With
    vector=True the blocks act on the column (D + A)^m e_1 only and A_p is read
    off the columns (D + A)^(p+j) e_1, j < r.
    """
    _scalar(L)
    p, d, r = L.p, max(L.degree, 0), L.order
    if p < 3:
        raise PreconditionError("p >= 3 required")
    L2, x0 = regularize(L)
    A = companion(L2)
    B1, ell = A.num, A.den
    dell = R.deriv(ell, p)
    num, kappa = (_unit_column(r), 0) if vector else (B1, 1)
    remaining = p - kappa
    while remaining > threshold:
        k = block_size(remaining, exponent)
        kp = remaining // k
        gamma = lambda_power(L2, k).op.cleared()
        num = _block_steps(gamma, num, kappa, kp, ell, p, baby=_baby(k))
        kappa += k * kp
        remaining -= k * kp
    for _ in range(remaining):
        num = _katz_step(num, kappa, B1, ell, dell, p)
        kappa += 1
    assert kappa == p
    if vector:
        cols = [num]
        for _ in range(r - 1):
            num = _katz_step(num, kappa, B1, ell, dell, p)
            kappa += 1
            cols.append(num)
        Ap = _from_columns(cols, ell, p)
    else:
        Ap = RatMat(pm_trim(num), ell, p, p)
    if Ap.num.shape[-1] - 1 > d * p:
        raise AssertionError("numerator exceeds the degree bound d p")
    if x0:
        Ap = Ap.shift(-x0)
    return Curvature(Ap, None, x0)


def _baby(k):
    # giant steps cost more than baby steps here, so take fewer of them
    return max(1, (3 * isqrt(k)) // 2)


METHODS = ("auto", "general", "katz", "katz_vector", "order1")


def p_curvature(L, method="auto"):
    """Dispatch to one of the algorithms; results are in the original coordinates."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "order1" if L.order == 1 else "general"
    if method == "order1":
        return pcurvature_order1(L)
    if method == "general":
        return pcurvature_general(L)
    if method == "katz":
        return Curvature(katz_recurrence(L))
    return Curvature(katz_vector(L))
