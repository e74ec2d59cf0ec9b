"""Arithmetic in F_p[x] and F_p[[x]].

Polynomials are 1-D int64 numpy arrays of coefficients in ascending degree,
reduced mod p, without trailing zeros. The zero polynomial is the empty array.
Every function takes the modulus ``p`` explicitly and never mutates inputs.
"""

import numpy as np

from ._kernels import conv_rows, kronecker_mul

# below these sizes the quadratic algorithms win in practice
SCHOOLBOOK_LEN = 64
NEWTON_DIV_LEN = 32
TREE_LEAF = 32


def poly(coeffs, p):
    """Normalise any integer sequence into a reduced, trimmed polynomial."""
    a = np.asarray([int(c) % p for c in coeffs] if not isinstance(coeffs, np.ndarray)
                   else np.asarray(coeffs, dtype=np.int64) % p, dtype=np.int64)
    return trim(a)


def trim(a):
    nz = np.flatnonzero(a)
    return a[:nz[-1] + 1] if len(nz) else a[:0]


def degree(f):
    return len(f) - 1 if len(f) else -1


def is_zero(f):
    return len(f) == 0


def const(c, p):
    return poly([c], p)


def monomial(n, p, c=1):
    f = np.zeros(n + 1, dtype=np.int64)
    f[n] = c % p
    return trim(f)


def to_list(f):
    return [int(c) for c in f]


def inv_mod(a, p):
    a %= p
    if a == 0:
        raise ZeroDivisionError("inverse of 0 mod p")
    return pow(a, p - 2, p)


def inv_many(a, p):
    """Elementwise inverses of a nonzero int64 array, by vectorized exponentiation."""
    a = np.asarray(a, dtype=np.int64) % p
    if np.any(a == 0):
        raise ZeroDivisionError("inverse of 0 mod p")
    out = np.ones_like(a)
    base = a.copy()
    e = p - 2
    while e:
        if e & 1:
            out = out * base % p
        e >>= 1
        if e:
            base = base * base % p
    return out


def sqrt_mod(a, p):
    """A square root of a mod an odd prime p (Tonelli-Shanks), or None."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


def add(f, g, p):
    if len(f) < len(g):
        f, g = g, f
    out = f.copy()
    out[:len(g)] += g
    return trim(out % p)


def sub(f, g, p):
    n = max(len(f), len(g))
    out = np.zeros(n, dtype=np.int64)
    out[:len(f)] += f
    out[:len(g)] -= g
    return trim(out % p)


def neg(f, p):
    return (-f) % p


def scale(f, c, p):
    c %= p
    return trim(f * c % p) if c else f[:0]


def shift_up(f, k):
    """Multiply by x^k."""
    if not len(f):
        return f
    return np.concatenate([np.zeros(k, dtype=np.int64), f])


def mul(f, g, p):
    if not len(f) or not len(g):
        return f[:0]
    short = min(len(f), len(g))
    if short <= SCHOOLBOOK_LEN and (p - 1) ** 2 * short < (1 << 63):
        return trim(np.convolve(f, g) % p)
    return trim(kronecker_mul(f, g, p))


def mul_trunc(f, g, n, p):
    """f * g mod x^n."""
    return trim(mul(f[:n], g[:n], p)[:n])


def power(f, e, p):
    result = const(1, p)
    base = f
    while e:
        if e & 1:
            result = mul(result, base, p)
        e >>= 1
        if e:
            base = mul(base, base, p)
    return result


def deriv(f, p):
    if len(f) <= 1:
        return f[:0]
    return trim(f[1:] * np.arange(1, len(f), dtype=np.int64) % p)


def evaluate(f, t, p):
    acc = 0
    for c in reversed(f.tolist()):
        acc = (acc * t + c) % p
    return acc


def horner_many(F, pts, p):
    """Evaluate each row of F (batch, n) at every point; returns (batch, len(pts))."""
    pts = np.asarray(pts, dtype=np.int64) % p
    acc = np.zeros((F.shape[0], len(pts)), dtype=np.int64)
    for j in range(F.shape[1] - 1, -1, -1):
        acc = (acc * pts + F[:, j:j + 1]) % p
    return acc


def series_inv(f, n, p):
    """g with f*g = 1 mod x^n, by Newton iteration."""
    if not len(f) or f[0] == 0:
        raise ZeroDivisionError("series with zero constant term is not invertible")
    g = np.array([inv_mod(int(f[0]), p)], dtype=np.int64)
    k = 1
    while k < n:
        k = min(2 * k, n)
        e = mul_trunc(f, g, k, p)
        # g <- g (2 - f g)
        two_minus = neg(e, p)
        two_minus = add(two_minus, const(2, p), p)
        g = mul_trunc(g, two_minus, k, p)
    return _pad(g, n)[:n]


def _pad(f, n):
    if len(f) >= n:
        return f
    return np.concatenate([f, np.zeros(n - len(f), dtype=np.int64)])


def series_div(f, g, n, p):
    return trim(mul_trunc(f, series_inv(g, n, p), n, p))


def divrem(f, g, p):
    if not len(g):
        raise ZeroDivisionError("polynomial division by zero")
    if len(f) < len(g):
        return f[:0], f
    m = len(f) - len(g) + 1
    if m > NEWTON_DIV_LEN and len(g) > 1:
        rf, rg = f[::-1], g[::-1]
        q = mul_trunc(rf, series_inv(rg, m, p), m, p)
        q = trim(_pad(q, m)[::-1])
        r = sub(f, mul(q, g, p), p)
        return q, r
    r = f.copy()
    lc_inv = inv_mod(int(g[-1]), p)
    q = np.zeros(m, dtype=np.int64)
    dg = len(g) - 1
    for i in range(m - 1, -1, -1):
        c = r[i + dg] * lc_inv % p
        q[i] = c
        if c:
            r[i:i + dg + 1] = (r[i:i + dg + 1] - c * g) % p
    return trim(q), trim(r[:dg])


def div_exact(f, g, p):
    q, r = divrem(f, g, p)
    if len(r):
        raise ArithmeticError("division is not exact")
    return q


def monic(f, p):
    if not len(f):
        return f
    return scale(f, inv_mod(int(f[-1]), p), p)


def gcd(f, g, p):
    """Monic greatest common divisor."""
    if not len(f) and not len(g):
        raise ValueError("gcd of two zero polynomials")
    while len(g):
        f, g = g, divrem(f, g, p)[1]
    return monic(f, p)


def compose_xp(f, p):
    """f(x^p)."""
    if not len(f):
        return f
    out = np.zeros((len(f) - 1) * p + 1, dtype=np.int64)
    out[::p] = f
    return out


def pth_root_poly(f, p):
    """g with g(x)^p = f, for f in F_p[x^p]."""
    mask = np.ones(len(f), dtype=bool)
    mask[::p] = False
    if np.any(f[mask]):
        raise ValueError("polynomial is not in F_p[x^p]")
    return trim(f[::p].copy())


def poly_sqrt(f, p):
    """g with g^2 = f, or None when f is not a square in F_p[x]."""
    f = trim(f)
    if not len(f):
        return f
    n = degree(f)
    if n % 2:
        return None
    m = n // 2
    lead = sqrt_mod(int(f[-1]), p)
    if lead is None:
        return None
    # coefficients from the top: reversed f is a series with unit constant term
    F = [int(c) for c in f[::-1]]
    G = [lead]
    half = inv_mod(2 * lead, p)
    for k in range(1, m + 1):
        acc = F[k] - sum(G[i] * G[k - i] for i in range(1, k))
        G.append(acc * half % p)
    g = trim(np.array(G[::-1], dtype=np.int64))
    return g if np.array_equal(mul(g, g, p), f) else None


def _factorials(n, p):
    fact = np.ones(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        fact[i] = fact[i - 1] * i % p
    inv = np.ones(n + 1, dtype=np.int64)
    inv[n] = inv_mod(int(fact[n]), p)
    for i in range(n, 0, -1):
        inv[i - 1] = inv[i] * i % p
    return fact, inv


def taylor_shift_rows(F, c, p):
    """Rows of F (batch, n) as polynomials, each replaced by f(x + c). Requires n <= p.

    c is a scalar or an array of per-row shifts broadcasting against F.shape[:-1].
    """
    n = F.shape[-1]
    scalar = np.ndim(c) == 0
    if n == 0 or (scalar and c % p == 0):
        return F.copy()
    if n > p:
        raise ValueError("row length exceeds p; use taylor_shift")
    fact, ifact = _factorials(n - 1, p)
    c = np.asarray(c, dtype=np.int64) % p
    powc = np.ones(c.shape + (n,), dtype=np.int64)
    for i in range(1, n):
        powc[..., i] = powc[..., i - 1] * c % p
    E = powc * ifact % p
    A = (F * fact % p)[..., ::-1]
    G = conv_rows(A, E, p)[..., :n][..., ::-1]
    return G * ifact % p


def taylor_shift(f, c, p):
    """f(x + c), valid for any degree.

    Degree >= p is handled by writing f = sum_k f_k(x) (x^p)^k with deg f_k < p and
    using (x + c)^p = x^p + c over F_p.
    """
    c %= p
    if not len(f) or c == 0:
        return f
    if len(f) <= p:
        return trim(taylor_shift_rows(f[None, :], c, p)[0])
    K = -(-len(f) // p)
    grid = _pad(f, K * p).reshape(K, p)
    grid = taylor_shift_rows(grid, c, p)
    cols = [taylor_shift(trim(grid[:, j].copy()), c, p) for j in range(p)]
    K2 = max(len(col) for col in cols)
    out = np.zeros((K2, p), dtype=np.int64)
    for j, col in enumerate(cols):
        out[:len(col), j] = col
    return trim(out.ravel())


def subproduct_tree(points, p):
    """Levels of the subproduct tree, leaves first; leaves hold up to TREE_LEAF points."""
    pts = [int(t) % p for t in points]
    leaves = []
    for i in range(0, len(pts), TREE_LEAF):
        m = const(1, p)
        for t in pts[i:i + TREE_LEAF]:
            m = mul(m, poly([-t, 1], p), p)
        leaves.append((pts[i:i + TREE_LEAF], m))
    levels = [[m for _, m in leaves]]
    while len(levels[-1]) > 1:
        prev = levels[-1]
        nxt = [mul(prev[i], prev[i + 1], p) if i + 1 < len(prev) else prev[i]
               for i in range(0, len(prev), 2)]
        levels.append(nxt)
    return [pts_ for pts_, _ in leaves], levels


def _rem_rows(F, g, p):
    """Remainders of each row of F (batch, n) modulo g."""
    dg = len(g) - 1
    if F.shape[1] <= dg:
        return F
    m = F.shape[1] - dg
    rg_inv = series_inv(g[::-1], m, p)
    q = conv_rows(F[:, ::-1][:, :m], rg_inv[:m], p)[:, :m][:, ::-1]
    qg = conv_rows(q, g, p)[:, :dg]
    return (F[:, :dg] - qg) % p


def multipoint_eval_many(F, points, p):
    """Evaluate each row of F (batch, n) at all points; returns (batch, npoints)."""
    F = np.atleast_2d(np.asarray(F, dtype=np.int64))
    if len(points) <= TREE_LEAF * 2 or F.shape[1] == 0:
        return horner_many(F, points, p) if F.shape[1] else np.zeros((F.shape[0], len(points)), dtype=np.int64)
    leaf_pts, levels = subproduct_tree(points, p)
    blocks = [_rem_rows(F, levels[-1][0], p)]
    for lvl in range(len(levels) - 2, -1, -1):
        nodes = levels[lvl]
        children = []
        for i, blk in enumerate(blocks):
            for j in (2 * i, 2 * i + 1):
                if j < len(nodes):
                    children.append(_rem_rows(blk, nodes[j], p))
        blocks = children
    vals = [horner_many(blk, pts, p) if blk.shape[1] else np.zeros((F.shape[0], len(pts)), dtype=np.int64)
            for blk, pts in zip(blocks, leaf_pts)]
    return np.concatenate(vals, axis=1)


def multipoint_eval(f, points, p):
    """Values f(t) for every t in points; product tree beyond 64 points."""
    return multipoint_eval_many(f[None, :], points, p)[0]


def interpolate(pairs, p):
    """Unique polynomial of degree < len(pairs) through the given (x, y) pairs."""
    xs = [int(a) % p for a, _ in pairs]
    ys = [int(b) % p for _, b in pairs]
    if len(set(xs)) != len(xs):
        raise ValueError("repeated abscissa in interpolation")
    if not xs:
        return np.zeros(0, dtype=np.int64)
    leaf_pts, levels = subproduct_tree(xs, p)
    root = levels[-1][0]
    dvals = multipoint_eval(deriv(root, p), xs, p)
    w = [y * inv_mod(int(dv), p) % p for y, dv in zip(ys, dvals)]
    # leaves: sum_i w_i prod_{j != i}(x - x_j), built naively inside each leaf
    cur = []
    pos = 0
    for pts in leaf_pts:
        acc = np.zeros(len(pts), dtype=np.int64)
        for i, t in enumerate(pts):
            term = const(w[pos + i], p)
            for j, s in enumerate(pts):
                if j != i:
                    term = mul(term, poly([-s, 1], p), p)
            acc[:len(term)] = (acc[:len(term)] + term) % p
        cur.append(trim(acc))
        pos += len(pts)
    for lvl in range(len(levels) - 1):
        nodes = levels[lvl]
        nxt = []
        for i in range(0, len(cur), 2):
            if i + 1 < len(cur):
                nxt.append(add(mul(cur[i], nodes[i + 1], p), mul(cur[i + 1], nodes[i], p), p))
            else:
                nxt.append(cur[i])
        cur = nxt
    return cur[0]


def powmod_x(n, modulus, p):
    """x^n mod a monic polynomial, by binary powering."""
    result = const(1, p)
    base = divrem(monomial(1, p), modulus, p)[1]
    while n:
        if n & 1:
            result = divrem(mul(result, base, p), modulus, p)[1]
        n >>= 1
        if n:
            base = divrem(mul(base, base, p), modulus, p)[1]
    return result


def coeff_jump(a, b, targets, window, p):
    """Coefficients u_N .. u_{N+window-1} of the series u = b/a, for each target N.

    Uses the recurrence a_0 u_n + ... + a_m u_{n-m} = 0 (n > deg b) and jumps to
    index N through x^N modulo the reversed, monic form of a.
    """
    if not len(a) or a[0] == 0:
        raise ZeroDivisionError("a(0) must be nonzero")
    if not len(b):
        return [np.zeros(window, dtype=np.int64) for _ in targets]
    m = degree(a)
    # recurrence valid for every index >= start + m
    start = max(degree(b) + 1 - m, 0)
    head_len = start + 2 * m + window
    head = _pad(series_div(b, a, head_len, p), head_len)
    if m == 0:
        return [np.array([head[N + i] if N + i < head_len else 0 for i in range(window)], dtype=np.int64)
                for N in targets]
    a0inv = inv_mod(int(a[0]), p)
    charpoly = trim(a[::-1] * a0inv % p)  # monic of degree m
    out = []
    for N in targets:
        if N + window <= head_len:
            out.append(head[N:N + window].copy())
            continue
        r = _pad(powmod_x(N - start, charpoly, p), m)
        # u_{N+j} = sum_i r_i u_{start+i+j}
        win = np.zeros(max(window, m), dtype=np.int64)
        for j in range(m):
            win[j] = sum(int(x) * int(y) for x, y in zip(r, head[start + j:start + j + m])) % p
        for j in range(m, window):
            # forward recurrence: u_n = -(a_1 u_{n-1} + ... + a_m u_{n-m}) / a_0
            s = sum(int(x) * int(y) for x, y in zip(a[1:], win[j - 1::-1][:m]))
            win[j] = (-s * a0inv) % p
        out.append(win[:window])
    return out
