"""Exact dense kernels over F_p built on numpy/BLAS and GMP.

All arrays are int64 with entries reduced to [0, p), p < 2**31.
"""

import math

import gmpy2
import numpy as np

MAX_P = 1 << 31

# float64 represents every integer below 2**53 exactly
_FLOAT_EXACT = 1 << 53
# bound on |output coefficient| for a rounded float FFT convolution
_FFT_SAFE_BITS = 42


def check_prime_size(p):
    if not 3 <= p < MAX_P:
        raise ValueError(f"modulus {p} outside [3, 2^31)")


def matmul_mod(a, b, p):
    """Exact ``a @ b mod p`` for reduced int64 arrays (batched like np.matmul)."""
    k = a.shape[-1]
    if k == 0:
        shape = np.broadcast_shapes(a.shape[:-2], b.shape[:-2]) + (a.shape[-2], b.shape[-1])
        return np.zeros(shape, dtype=np.int64)
    if (p - 1) ** 2 * k < _FLOAT_EXACT:
        c = np.matmul(a.astype(np.float64), b.astype(np.float64))
        return c.astype(np.int64) % p
    # split a into 16-bit limbs so that partial sums stay below 2**63
    chunk = max(1, ((1 << 62) // ((1 << 16) * (p - 1))))
    lo = a & 0xFFFF
    hi = a >> 16
    out = None
    for start in range(0, k, chunk):
        sl = slice(start, start + chunk)
        bb = b[..., sl, :]
        part_lo = np.matmul(lo[..., sl], bb) % p
        part_hi = np.matmul(hi[..., sl], bb) % p
        part = (part_hi * (1 << 16) + part_lo) % p
        out = part if out is None else (out + part) % p
    return out


def _fft_size(n):
    return 1 << max(0, (n - 1).bit_length())


def _limb_plan(p, terms):
    """Limb width and count so that limb products summed over ``terms`` stay FFT-safe."""
    pbits = (p - 1).bit_length()
    bits = (_FFT_SAFE_BITS - math.ceil(math.log2(max(terms, 2)))) // 2
    bits = max(1, min(pbits, bits))
    return bits, -(-pbits // bits)


def _split(a, bits, count):
    mask = (1 << bits) - 1
    return [((a >> (bits * i)) & mask).astype(np.float64) for i in range(count)]


def _recombine(parts, bits, p):
    out = None
    for s, part in enumerate(parts):
        term = np.rint(part).astype(np.int64) % p
        if s:
            term = term * pow(2, bits * s, p) % p
        out = term if out is None else (out + term) % p
    return out


def polymat_mul(P, Q, p, cache=None):
    """Product of polynomial matrices given as (m, k, la) and (k, n, lb) coefficient arrays.

    Returns an (m, n, la + lb - 1) array. Coefficients are ascending along the last axis.
    A dict passed as cache keeps the transforms of P for later calls with the same P.
    """
    m, k, la = P.shape
    k2, n, lb = Q.shape
    if k != k2:
        raise ValueError("inner dimensions differ")
    if la == 0 or lb == 0:
        return np.zeros((m, n, 0), dtype=np.int64)
    out_len = la + lb - 1
    if min(la, lb) <= 8 or k == 0:
        return _polymat_mul_direct(P, Q, p)
    bits, nl = _limb_plan(p, k * min(la, lb))
    size = _fft_size(out_len)
    key = (size, bits, nl)
    if cache is not None and key in cache:
        Pf = cache[key]
    else:
        Pf = [np.ascontiguousarray(np.fft.rfft(x, size).transpose(2, 0, 1)) for x in _split(P, bits, nl)]
        if cache is not None:
            cache[key] = Pf
    Qf = [np.ascontiguousarray(np.fft.rfft(x, size).transpose(2, 0, 1)) for x in _split(Q, bits, nl)]
    parts = []
    for s in range(2 * nl - 1):
        acc = None
        for i in range(max(0, s - nl + 1), min(s, nl - 1) + 1):
            t = np.matmul(Pf[i], Qf[s - i])
            acc = t if acc is None else acc + t
        parts.append(np.fft.irfft(acc.transpose(1, 2, 0), size)[..., :out_len])
    return _recombine(parts, bits, p)


def _polymat_mul_direct(P, Q, p):
    m, k, la = P.shape
    _, n, lb = Q.shape
    out = np.zeros((m, n, la + lb - 1), dtype=np.int64)
    if la <= lb:
        Qr = Q.reshape(k, n * lb)
        for i in range(la):
            out[:, :, i:i + lb] += matmul_mod(P[:, :, i], Qr, p).reshape(m, n, lb)
            out[:, :, i:i + lb] %= p
    else:
        Pr = P.transpose(0, 2, 1).reshape(m * la, k)
        for j in range(lb):
            prod = matmul_mod(Pr, Q[:, :, j], p).reshape(m, la, n).transpose(0, 2, 1)
            out[:, :, j:j + la] += prod
            out[:, :, j:j + la] %= p
    return out


def conv_rows(A, B, p):
    """Row-wise convolution of (..., la) and (..., lb) arrays (broadcasting leading axes)."""
    la, lb = A.shape[-1], B.shape[-1]
    lead = np.broadcast_shapes(A.shape[:-1], B.shape[:-1])
    if la == 0 or lb == 0:
        return np.zeros(lead + (0,), dtype=np.int64)
    out_len = la + lb - 1
    if min(la, lb) <= 16:
        if la < lb:
            A, B, la, lb = B, A, lb, la
        out = np.zeros(lead + (out_len,), dtype=np.int64)
        for j in range(lb):
            out[..., j:j + la] += A * B[..., j:j + 1] % p
            out[..., j:j + la] %= p
        return out
    bits, nl = _limb_plan(p, min(la, lb))
    size = _fft_size(out_len)
    Af = [np.fft.rfft(x, size) for x in _split(A, bits, nl)]
    Bf = [np.fft.rfft(x, size) for x in _split(B, bits, nl)]
    parts = []
    for s in range(2 * nl - 1):
        acc = None
        for i in range(max(0, s - nl + 1), min(s, nl - 1) + 1):
            t = Af[i] * Bf[s - i]
            acc = t if acc is None else acc + t
        parts.append(np.fft.irfft(acc, size)[..., :out_len])
    return _recombine(parts, bits, p)


def kronecker_mul(f, g, p):
    """Exact product of two coefficient vectors via packing into GMP integers."""
    n = len(f) + len(g) - 1
    bound = (p - 1) ** 2 * min(len(f), len(g))
    width = (bound.bit_length() + 7) // 8
    F = gmpy2.mpz(int.from_bytes(_pack(f, width), "little"))
    G = gmpy2.mpz(int.from_bytes(_pack(g, width), "little"))
    raw = np.frombuffer(int(F * G).to_bytes(n * width, "little"), dtype=np.uint8)
    return _unpack(raw.reshape(n, width), p)


def _pack(a, width):
    b = np.ascontiguousarray(a, dtype="<i8").view(np.uint8).reshape(len(a), 8)
    if width <= 8:
        return b[:, :width].tobytes()
    out = np.zeros((len(a), width), dtype=np.uint8)
    out[:, :8] = b
    return out.tobytes()


def _unpack(slots, p):
    n, width = slots.shape
    lo = np.zeros((n, 8), dtype=np.uint8)
    lo[:, :min(width, 8)] = slots[:, :8]
    res = lo.view("<u8").ravel() % np.uint64(p)
    if width > 8:
        hi = np.zeros((n, 8), dtype=np.uint8)
        hi[:, :width - 8] = slots[:, 8:]
        h = hi.view("<u8").ravel() % np.uint64(p)
        res = (h * np.uint64(pow(2, 64, p)) + res) % np.uint64(p)
    return res.astype(np.int64)
