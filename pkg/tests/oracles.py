"""Slow, independent reference computations used to freeze expected values."""

import sympy
from sympy import QQ, Matrix, Poly, symbols
from sympy.polys.fields import FracElement, field

x = symbols("x")
QX, X = field("x", QQ)


def frac(f):
    """An element of Q(x) from a sympy expression, a field element or an ascending coefficient list."""
    if isinstance(f, FracElement):
        return f
    if isinstance(f, sympy.Basic) or isinstance(f, int):
        return QX.from_expr(sympy.sympify(f))
    return QX.from_expr(expr(f))


def falling(n, j):
    out = 1
    for i in range(j):
        out *= n - i
    return out


def rank_mod(rows, ncols, p):
    """Rank of an integer matrix mod p by plain Gaussian elimination on lists."""
    M = [[int(v) % p for v in row] for row in rows]
    rk = 0
    for c in range(ncols):
        piv = next((i for i in range(rk, len(M)) if M[i][c]), None)
        if piv is None:
            continue
        M[rk], M[piv] = M[piv], M[rk]
        inv = pow(M[rk][c], p - 2, p)
        M[rk] = [v * inv % p for v in M[rk]]
        for i in range(len(M)):
            if i != rk and M[i][c]:
                f = M[i][c]
                M[i] = [(a - f * b) % p for a, b in zip(M[i], M[rk])]
        rk += 1
    return rk


def dense_band_nullity(coeffs, p):
    """Nullity of L on polynomials of degree < p * max(d, r, 1).

    coeffs[j] lists the coefficients of l_j ascending. Every coefficient of L(u) is
    written out as a linear form in u_0..u_{N-1}.
    """
    r = len(coeffs) - 1
    d = max(max(len(c) for c in coeffs) - 1, r, 1)
    N = p * d
    rows = []
    for m in range(N + d):
        row = [0] * N
        for j, lj in enumerate(coeffs):
            for a, la in enumerate(lj):
                n = m + j - a
                la = int(la)
                if 0 <= n < N and la % p:
                    row[n] = (row[n] + la * falling(n, j)) % p
        rows.append(row)
    return N - rank_mod(rows, N, p)


def apply_op(coeffs, u, p):
    """L(u) coefficients for a scalar operator and a polynomial u (lists), mod p."""
    out = {}
    cur = list(u)
    for lj in coeffs:
        for a, la in enumerate(lj):
            for n, un in enumerate(cur):
                if la and un:
                    out[a + n] = (out.get(a + n, 0) + la * un) % p
        cur = [(n + 1) * cur[n + 1] % p for n in range(len(cur) - 1)]
    res = [out.get(k, 0) for k in range(max(out, default=-1) + 1)]
    while res and res[-1] == 0:
        res.pop()
    return res


def katz_sympy(coeffs, p):
    """p-curvature by the plain rational recurrence A_{k+1} = A_k' + A A_k over Q, reduced mod p.

    Returns (numerator matrix as lists of ints mod p, l_r) with A_p = num / l_r^p.
    """
    r = len(coeffs) - 1
    ell = [sum(c * x**i for i, c in enumerate(cs)) for cs in coeffs]
    A = Matrix.zeros(r, r)
    for i in range(1, r):
        A[i, i - 1] = 1
    for i in range(r):
        A[i, r - 1] = -ell[i] / ell[r]
    Ak = A
    for _ in range(p - 1):
        Ak = (Ak.diff(x) + A * Ak).applyfunc(lambda e: e.cancel())
    lr = ell[r]
    out = []
    for i in range(r):
        row = []
        for j in range(r):
            e = (Ak[i, j] * lr**p).cancel()
            P = Poly(e, x)
            cs = [int(c) % p for c in reversed(P.all_coeffs())]
            row.append(cs)
        out.append(row)
    return out


def expr(cs):
    return sum(int(c) * x**i for i, c in enumerate(cs))


def scaled_apply(num, b, h, vec):
    """sum_j num_j / b^(h-j) D^j applied over Q(x) to a column of field elements.

    num has shape (h+1, n, n, len); vec and the result live in QX.
    """
    n = num.shape[1]
    B = frac(b)
    out = [QX(0)] * n
    dv = list(vec)
    for j in range(num.shape[0]):
        if j:
            dv = [e.diff(X) for e in dv]
        for a in range(n):
            for c in range(n):
                g = frac(num[j, a, c])
                if g and dv[c]:
                    out[a] += g * dv[c] / B**(h - j)
    return out


def numerator_mod(e, den, p):
    """Coefficients mod p of e * den, which must be a polynomial over Q."""
    q = frac(e) * frac(den)
    if q.denom.degree() > 0:
        raise ValueError("not a polynomial")
    c0 = q.denom.LC
    out = [0] * (max(q.numer.degree(), 0) + 1)
    for (k,), c in q.numer.terms():
        c = c / c0
        out[k] = int(c.numerator) * pow(int(c.denominator), -1, p) % p
    while out and out[-1] == 0:
        out.pop()
    return out
