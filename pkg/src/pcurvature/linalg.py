"""Dense matrices over F_p and F_p[x], and the baby-step/giant-step matrix factorial.

An F_p matrix is a 2-D int64 array. A polynomial matrix is a 3-D int64 array
(rows, cols, length) holding ascending coefficients along the last axis.
"""

from math import isqrt

import numpy as np

from . import modring as R
from ._kernels import conv_rows, matmul_mod, polymat_mul


def mat(rows, p):
    return np.asarray(rows, dtype=np.int64) % p


def identity(n):
    return np.eye(n, dtype=np.int64)


def mat_mul(A, B, p):
    if A.shape[-1] != B.shape[0]:
        raise ValueError(f"dimension mismatch {A.shape} x {B.shape}")
    return matmul_mod(A, B, p)


def pm_trim(P):
    """Drop trailing all-zero coefficient slices."""
    if not P.shape[-1] or not P.size:
        return P[..., :0]
    nz = np.flatnonzero(P.reshape(-1, P.shape[-1]).any(axis=0))
    return P[..., :nz[-1] + 1] if len(nz) else P[..., :0]


def pm_from_polys(entries, p):
    """Build a polynomial matrix from a nested list of coefficient sequences."""
    rows = [[R.poly(e, p) for e in row] for row in entries]
    n = max([len(e) for row in rows for e in row] + [0])
    out = np.zeros((len(rows), len(rows[0]), n), dtype=np.int64)
    for i, row in enumerate(rows):
        for j, e in enumerate(row):
            out[i, j, :len(e)] = e
    return out


def pm_entry(P, i, j):
    return R.trim(P[i, j])


def pm_pad(P, n):
    if P.shape[-1] >= n:
        return P
    pad = np.zeros(P.shape[:-1] + (n - P.shape[-1],), dtype=np.int64)
    return np.concatenate([P, pad], axis=-1)


def pm_add(P, Q, p):
    n = max(P.shape[-1], Q.shape[-1])
    return pm_trim((pm_pad(P, n) + pm_pad(Q, n)) % p)


def pm_sub(P, Q, p):
    n = max(P.shape[-1], Q.shape[-1])
    return pm_trim((pm_pad(P, n) - pm_pad(Q, n)) % p)


def poly_mat_mul(P, Q, p):
    if P.shape[1] != Q.shape[0]:
        raise ValueError(f"dimension mismatch {P.shape[:2]} x {Q.shape[:2]}")
    return pm_trim(polymat_mul(P, Q, p))


def pm_scale(P, f, p):
    """Multiply every entry by the scalar polynomial f."""
    if not len(f) or not P.shape[-1]:
        return P[..., :0]
    return pm_trim(conv_rows(P, f, p))


def pm_deriv(P, p):
    if P.shape[-1] <= 1:
        return P[..., :0]
    return pm_trim(P[..., 1:] * np.arange(1, P.shape[-1], dtype=np.int64) % p)


def pm_eval(P, t, p):
    acc = np.zeros(P.shape[:-1], dtype=np.int64)
    for j in range(P.shape[-1] - 1, -1, -1):
        acc = (acc * t + P[..., j]) % p
    return acc


def rref(A, p):
    """Reduced row echelon form and pivot columns."""
    A = np.array(A, dtype=np.int64) % p
    rows, cols = A.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(A[r:, c])
        if not len(nz):
            continue
        piv = r + nz[0]
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        A[r] = A[r] * R.inv_mod(int(A[r, c]), p) % p
        f = A[:, c].copy()
        f[r] = 0
        nzr = np.flatnonzero(f)
        if len(nzr):
            A[nzr] = (A[nzr] - f[nzr, None] * A[r] % p) % p
        pivots.append(c)
        r += 1
    return A[:r], pivots


def nullspace(A, p):
    """Basis of the right kernel, as the columns of the returned (cols, k) array.

    Vectors come from the reduced row echelon form: one per free column, with a 1
    in that column.
    """
    A = np.asarray(A)
    cols = A.shape[1]
    E, pivots = rref(A, p)
    pset = set(pivots)
    free = [c for c in range(cols) if c not in pset]
    basis = np.zeros((cols, len(free)), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[fc, k] = 1
        for i, pc in enumerate(pivots):
            basis[pc, k] = (-E[i, fc]) % p
    return basis


def rank(A, p):
    return A.shape[1] - nullspace(A, p).shape[1]


def _bareiss(P, p):
    """Fraction-free elimination of a square polynomial matrix given as nested lists.

    Returns (last pivot, sign, rank); the determinant is sign * last pivot when full rank.
    """
    M = [[R.trim(np.asarray(e, dtype=np.int64)) for e in row] for row in P]
    n = len(M)
    m = len(M[0]) if n else 0
    sign = 1
    prev = R.const(1, p)
    rk = 0
    row = 0
    for col in range(m):
        if row == n:
            break
        piv = next((i for i in range(row, n) if len(M[i][col])), None)
        if piv is None:
            continue
        if piv != row:
            M[row], M[piv] = M[piv], M[row]
            sign = -sign
        for i in range(row + 1, n):
            for j in range(col + 1, m):
                num = R.sub(R.mul(M[row][col], M[i][j], p), R.mul(M[i][col], M[row][j], p), p)
                M[i][j] = R.div_exact(num, prev, p)
            M[i][col] = M[i][col][:0]
        prev = M[row][col]
        row += 1
        rk += 1
    return prev, sign, rk


def poly_det(P, p):
    """Determinant of a square polynomial matrix (nested list of polys), fraction-free."""
    n = len(P)
    if n == 0:
        return R.const(1, p)
    last, sign, rk = _bareiss(P, p)
    if rk < n:
        return np.zeros(0, dtype=np.int64)
    return R.scale(last, sign, p)


def poly_mat_rank(P, p):
    """Rank over F_p(x) of a polynomial matrix (3-D array or nested list)."""
    if isinstance(P, np.ndarray):
        P = [[P[i, j] for j in range(P.shape[1])] for i in range(P.shape[0])]
    if not P:
        return 0
    return _bareiss(P, p)[2]


def wronskian(us, p):
    """Wronskian determinant of the family us."""
    n = len(us)
    rows = []
    cur = [R.trim(np.asarray(u, dtype=np.int64)) for u in us]
    for _ in range(n):
        rows.append(cur)
        cur = [R.deriv(u, p) for u in cur]
    return poly_det(rows, p)


def wronskian_rank(us, p):
    """Size of a greedy maximal subfamily that is independent over F_p(x^p)."""
    kept = []
    for u in us:
        if not len(R.trim(np.asarray(u, dtype=np.int64))):
            continue
        if len(kept) + 1 > p:
            break
        if len(wronskian(kept + [u], p)):
            kept.append(u)
    return len(kept)


def wronskian_select(us, p):
    """The greedy subfamily whose size wronskian_rank reports."""
    kept = []
    for u in us:
        if len(R.trim(np.asarray(u, dtype=np.int64))) and len(kept) < p and len(wronskian(kept + [u], p)):
            kept.append(u)
    return kept


# ---------------------------------------------------------------------------
# matrix factorial


def matrix_factorial_naive(M, a, k, p):
    """M(k-1) ... M(a+1) M(a) over F_p; M is a polynomial matrix in n."""
    if a > k:
        raise ValueError("empty range: a > k")
    m = M.shape[0]
    out = identity(m)
    for n in range(a, k):
        out = matmul_mod(pm_eval(M, n % p, p), out, p)
    return out


def _shifted(M, i, p):
    """Entries of M(n + i) as polynomials in n."""
    if i % p == 0 or M.shape[-1] <= 1:
        return M
    flat = M.reshape(-1, M.shape[-1])
    if M.shape[-1] <= p:
        return R.taylor_shift_rows(flat, i, p).reshape(M.shape)
    rows = [R._pad(R.taylor_shift(R.trim(f), i, p), M.shape[-1]) for f in flat]
    return np.array(rows, dtype=np.int64).reshape(M.shape)


def _ordered_product(mats, p):
    """mats[-1] @ ... @ mats[0] for polynomial matrices, by a balanced tree."""
    while len(mats) > 1:
        nxt = []
        for i in range(0, len(mats), 2):
            if i + 1 < len(mats):
                nxt.append(pm_trim(polymat_mul(mats[i + 1], mats[i], p)))
            else:
                nxt.append(mats[i])
        mats = nxt
    return mats[0]


def matrix_factorial(M, a, k, p, method="bsgs"):
    """M(k-1) ... M(a) over F_p.

    The BSGS route builds P(n) = M(n+s-1)...M(n) with s ~ sqrt(k-a), evaluates
    P at a, a+s, a+2s, ... by multipoint evaluation and finishes the tail naively.
    """
    if a > k:
        raise ValueError("empty range: a > k")
    if method == "naive":
        return matrix_factorial_naive(M, a, k, p)
    N = k - a
    if N >= p:
        raise ValueError("range length must be < p for distinct giant-step points")
    s = isqrt(N)
    if s < 4:
        return matrix_factorial_naive(M, a, k, p)
    M = pm_trim(M) if M.shape[-1] else M
    m = M.shape[0]
    if M.shape[-1] == 0:
        return np.zeros((m, m), dtype=np.int64)
    P = _ordered_product([_shifted(M, i, p) for i in range(s)], p)
    g = N // s
    pts = [(a + j * s) % p for j in range(g)]
    vals = R.multipoint_eval_many(P.reshape(m * m, -1), pts, p).reshape(m, m, g)
    out = identity(m)
    for j in range(g):
        out = matmul_mod(vals[:, :, j], out, p)
    tail = matrix_factorial_naive(M, a + g * s, k, p)
    return matmul_mod(tail, out, p)
