"""Polynomial and rational solutions of scalar operators L u = 0 over F_p.

A solution u = sum u_n x^n of degree < p*d is pinned down by the unknowns u_n with
n mod p < r: the recurrence attached to L determines every other coefficient, and
the equations left over form a small linear system whose kernel is the solution space.
"""

from dataclasses import dataclass, field

import numpy as np

from . import modring as R
from ._kernels import matmul_mod
from .diffop import PreconditionError, apply_poly_naive, regularize
from .linalg import matrix_factorial, nullspace, rref, wronskian_select


@dataclass
class RecurrenceData:
    """Coefficient n of L(u) is sum_{k <= d+r} c[k](n) u_{n-d+k}.

    d is the working degree max(deg L, order L). c[d+r](n) = lam (n+1)...(n+r).
    """
    c: list
    lam: int
    d: int
    r: int
    p: int

    @property
    def width(self):
        return self.d + self.r

    @property
    def A(self):
        """Free unknowns: blocks [tp, tp + r) for t < d."""
        return [range(t * self.p, t * self.p + self.r) for t in range(self.d)]

    @property
    def B1(self):
        return [range(t * self.p, t * self.p + self.r) for t in range(1, self.d)]

    @property
    def B2(self):
        return range(self.p * self.d, self.p * self.d + self.width)

    def in_A(self, n):
        return 0 <= n < self.p * self.d and n % self.p < self.r

    def shifted(self):
        """The polynomials c_k(n - r), k = 0..d+r."""
        return [R.taylor_shift(ck, -self.r, self.p) for ck in self.c]


@dataclass
class SolutionSpace:
    dimension: int
    basis: list = field(default_factory=list)
    degree_bound: int = -1
    p: int = 0


def _falling(s, j, p):
    """(n + s)(n + s - 1)...(n + s - j + 1) as a polynomial in n."""
    f = R.const(1, p)
    for i in range(j):
        f = R.mul(f, R.poly([s - i, 1], p), p)
    return f


def _check(L):
    if L.size != 1 or L.basis != "D" or L.form != "right":
        raise ValueError("scalar right-form operator in D expected")
    if L.order < 1:
        raise ValueError("operator of positive order expected")
    if L.order > L.p:
        raise PreconditionError(f"order {L.order} exceeds p = {L.p}")


def working_degree(L):
    return max(L.degree, L.order, 1)


def recurrence_data(L):
    _check(L)
    p, r = L.p, L.order
    d = working_degree(L)
    lr = L.leading
    if not len(lr) or lr[0] == 0:
        raise PreconditionError("leading coefficient vanishes at 0; regularize first")
    c = []
    for k in range(d + r + 1):
        acc = np.zeros(0, dtype=np.int64)
        for j in range(r + 1):
            a = j - k + d
            lj = L.scalar_coeff(j)
            if 0 <= a < len(lj) and lj[a]:
                acc = R.add(acc, R.scale(_falling(k - d, j, p), int(lj[a]), p), p)
        c.append(acc)
    return RecurrenceData(c, int(lr[0]), d, r, p)


def step_matrix(rec):
    """(A_hat, den) with A(n) = A_hat(n) / den(n) advancing [u_{n-d-r}..u_{n-1}] by one.

    Entries are polynomials in n: a (d+r, d+r, r+1) array.
    """
    p, D = rec.p, rec.width
    cs = rec.shifted()
    den = cs[D]
    Ahat = np.zeros((D, D, len(den)), dtype=np.int64)
    for i in range(D - 1):
        Ahat[i, i + 1, :] = den
    for k in range(D):
        Ahat[D - 1, k, :len(cs[k])] = (-cs[k]) % p
    return Ahat, den


def _windows(rec):
    """Extended windows W_i, i = 0..d, as (d + 2r, d*r) matrices over the free unknowns.

    Rows of W_i are u_{ip-d-r}, ..., u_{ip+r-1} written in the unknowns u_n, n in A.
    """
    p, d, r, D = rec.p, rec.d, rec.r, rec.width
    Ahat, den = step_matrix(rec)
    num = matrix_factorial(Ahat, r, p, p)
    sf = int(matrix_factorial(den[None, None, :], r, p, p)[0, 0])
    assert sf != 0
    B = num * R.inv_mod(sf, p) % p
    C = np.zeros((D, d * r), dtype=np.int64)
    out = []
    for i in range(d + 1):
        sel = np.zeros((r, d * r), dtype=np.int64)
        if i < d:
            sel[np.arange(r), i * r + np.arange(r)] = 1
        W = np.vstack([C, sel])
        out.append(W)
        if i < d:
            C = matmul_mod(B, W[r:], p)
    return out


def residual_system(L, rec=None):
    """The matrix E (d(r+1) x dr) of leftover equations on the unknowns indexed by A."""
    rec = rec or recurrence_data(L)
    p, d, r, D = rec.p, rec.d, rec.r, rec.width
    W = _windows(rec)
    cs = rec.shifted()
    pts, blocks = [], []
    for i in range(1, d):
        for j in range(r):
            pts.append(i * p + j)
            blocks.append(W[i][j:j + D])
    tail = np.vstack([W[d], np.zeros((D, d * r), dtype=np.int64)])
    for n in rec.B2:
        pts.append(n)
        blocks.append(tail[n - p * d:n - p * d + D])
    F = np.array([R._pad(ck, r + 1) for ck in cs[:D]], dtype=np.int64)
    vals = R.horner_many(F, [t % p for t in pts], p)  # (D, #pts)
    E = np.zeros((len(pts), d * r), dtype=np.int64)
    for row, U in enumerate(blocks):
        E[row] = (vals[:, row, None] * U % p).sum(axis=0) % p
    return E


def dimension_G(L):
    """Dimension over F_p of the polynomial solutions of degree < p * working degree."""
    L2, _ = regularize(L)
    E = residual_system(L2)
    return nullspace(E, L.p).shape[1]


def has_polynomial_solution(L):
    return dimension_G(L) > 0


def basis_G(L):
    """F_p-basis of the polynomial solutions of degree < p * working degree.

    Each vector is checked by applying L exactly.
    """
    p = L.p
    L2, x0 = regularize(L)
    rec = recurrence_data(L2)
    d, r, D = rec.d, rec.r, rec.width
    bound = p * d - 1
    Nsp = nullspace(residual_system(L2, rec), p)
    k = Nsp.shape[1]
    if k == 0:
        return SolutionSpace(0, [], bound, p)
    cs = rec.shifted()
    F = np.array([R._pad(ck, r + 1) for ck in cs], dtype=np.int64)
    residues = list(range(r, p))
    vals = R.horner_many(F, residues, p)  # (D+1, p-r)
    inv = R.inv_many(vals[D], p)
    coef = (-vals[:D] * inv) % p  # u_n = sum_k coef[k] u_{n-D+k}
    U = np.zeros((D + p * d, k), dtype=np.int64)
    for n in range(p * d):
        t, j = divmod(n, p)
        if j < r:
            U[D + n] = Nsp[t * r + j]
        else:
            U[D + n] = (coef[:, j - r, None] * U[n:n + D] % p).sum(axis=0) % p
    basis = []
    for col in range(k):
        u = R.trim(U[D:, col].copy())
        if x0:
            u = R.taylor_shift(u, -x0, p)
        if len(apply_poly_naive(L, u)):
            raise AssertionError("reconstructed vector is not a solution")
        basis.append(u)
    return SolutionSpace(k, basis, bound, p)


def rational_solution_space(L):
    """Dimension over F_p(x^p) of the solutions in F_p(x), with a basis of polynomials."""
    G = basis_G(L)
    cands = sorted(G.basis, key=lambda u: (len(u), list(u)))
    kept = wronskian_select(cands, L.p)
    return SolutionSpace(len(kept), kept, G.degree_bound, L.p)


def _p_sections(u, p):
    """Rows u_j(y) with u = sum_j u_j(x^p) x^j."""
    K = -(-len(u) // p)
    return R._pad(u, K * p).reshape(K, p).T


def min_degree_solution(us, p=None):
    """A nonzero element of least degree, stripped of its F_p[x^p] content."""
    if isinstance(us, SolutionSpace):
        basis, p = us.basis, p or us.p
    else:
        basis = list(us)
    basis = [R.trim(np.asarray(u, dtype=np.int64)) for u in basis]
    basis = [u for u in basis if len(u)]
    if not basis:
        raise ValueError("empty solution space")
    if p is None:
        raise ValueError("modulus required")
    if len(basis) == 1:
        u0 = basis[0]
    else:
        n = max(len(u) for u in basis)
        M = np.array([R._pad(u, n)[::-1] for u in basis])
        E, _ = rref(M, p)
        u0 = R.trim(E[-1][::-1].copy())
    g = np.zeros(0, dtype=np.int64)
    for row in _p_sections(u0, p):
        row = R.trim(row.copy())
        if len(row):
            g = R.gcd(g, row, p) if len(g) else R.monic(row, p)
    if R.degree(g) > 0:
        u0 = R.div_exact(u0, R.compose_xp(g, p), p)
    return u0


def dense_dimension(L):
    """Oracle for dimension_G: nullity of the matrix whose columns are L(x^n), n < p * working degree.

    Quadratic in p; meant for small moduli.
    """
    _check(L)
    p = L.p
    N = p * working_degree(L)
    cols = [apply_poly_naive(L, R.monomial(n, p)) for n in range(N)]
    rows = max([len(c) for c in cols] + [1])
    M = np.zeros((rows, N), dtype=np.int64)
    for n, c in enumerate(cols):
        M[:len(c), n] = c
    return nullspace(M, p).shape[1]
