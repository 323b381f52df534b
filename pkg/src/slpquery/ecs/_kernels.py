"""Arena gadgets and node-matrix loops as integer kernels.

Every kernel takes the arena columns explicitly:

    K  int8   node kind
    L  int64  left child
    R  int64  right child
    V  int64  shift value, or symbol id for output nodes
    D  int8   cached output-depth
    n  int64[1] next free id
    cnt int64[4] op counters (unions, prods, shifts, adds)

The caller guarantees spare capacity before each call (see ``WORST_*``).
"""

from __future__ import annotations

import numpy as np

from .._accel import jit

BOT = 0
EPS = 1
OUT = 2
UNION = 3
PROD = 4
SHIFT = 5

C_UNION = 0
C_PROD = 1
C_SHIFT = 2
C_ADD = 3

I64_MAX = np.iinfo(np.int64).max
I64_MIN = np.iinfo(np.int64).min

# worst-case appended nodes per public op
WORST_ADD = 2
WORST_SHIFT = 2
WORST_UNION = 8
WORST_PROD = 10


@jit
def _add64(a, b):
    if b > 0 and a > I64_MAX - b:
        raise OverflowError("shift value overflows signed 64-bit")
    if b < 0 and a < I64_MIN - b:
        raise OverflowError("shift value overflows signed 64-bit")
    return a + b


@jit
def _sub64(a, b):
    if b < 0 and a > I64_MAX + b:
        raise OverflowError("shift value overflows signed 64-bit")
    if b > 0 and a < I64_MIN + b:
        raise OverflowError("shift value overflows signed 64-bit")
    return a - b


@jit
def _new(K, L, R, V, D, n, kind, left, right, val, depth):
    i = n[0]
    K[i] = kind
    L[i] = left
    R[i] = right
    V[i] = val
    D[i] = depth
    n[0] = i + 1
    return i


@jit
def _is_out(K, v):
    return K[v] == OUT or K[v] == PROD


@jit
def _is_eps_union(K, L, v):
    return K[v] == UNION and L[v] == EPS


@jit
def _shift_over(K, L, R, V, D, n, child, k):
    return _new(K, L, R, V, D, n, SHIFT, child, -1, k, D[child] + 1)


@jit
def _link(K, L, R, V, D, n, head, head_off, below, below_off):
    # union(head, shift(below_off - head_off) over below)
    s = _shift_over(K, L, R, V, D, n, below, _sub64(below_off, head_off))
    return _new(K, L, R, V, D, n, UNION, head, s, 0, D[head] + 1)


@jit
def _add(K, L, R, V, D, n, sym):
    u = _new(K, L, R, V, D, n, OUT, -1, -1, sym, 0)
    return _shift_over(K, L, R, V, D, n, u, 0)


@jit
def _shift_safe(K, L, R, V, D, n, v, k):
    return _shift_over(K, L, R, V, D, n, L[v], _add64(V[v], k))


@jit
def _shift(K, L, R, V, D, n, v, k):
    if v == BOT or v == EPS:
        return v
    if _is_eps_union(K, L, v):
        s = _shift_safe(K, L, R, V, D, n, R[v], k)
        return _new(K, L, R, V, D, n, UNION, EPS, s, 0, 1)
    return _shift_safe(K, L, R, V, D, n, v, k)


@jit
def _union_safe(K, L, R, V, D, n, v3, v4):
    a3 = L[v3]
    a4 = L[v4]
    k3 = V[v3]
    k4 = V[v4]
    if _is_out(K, a3):
        u = _link(K, L, R, V, D, n, a3, k3, a4, k4)
        return _shift_over(K, L, R, V, D, n, u, k3)
    if _is_out(K, a4):
        u = _link(K, L, R, V, D, n, a4, k4, a3, k3)
        return _shift_over(K, L, R, V, D, n, u, k4)
    # both heads are unions whose right child is a shift
    r3 = R[a3]
    r4 = R[a4]
    o3 = _add64(k3, V[r3])
    o4 = _add64(k4, V[r4])
    u3 = _link(K, L, R, V, D, n, L[r3], o3, L[r4], o4)
    u2 = _link(K, L, R, V, D, n, L[a4], k4, u3, o3)
    u1 = _link(K, L, R, V, D, n, L[a3], k3, u2, k4)
    return _shift_over(K, L, R, V, D, n, u1, k3)


@jit
def _union(K, L, R, V, D, n, v3, v4):
    if v3 == BOT:
        return v4
    if v4 == BOT:
        return v3
    e3 = v3 == EPS
    e4 = v4 == EPS
    c3 = _is_eps_union(K, L, v3)
    c4 = _is_eps_union(K, L, v4)
    if e3:
        if e4 or c4:
            return v4
        return _new(K, L, R, V, D, n, UNION, EPS, v4, 0, 1)
    if e4:
        if c3:
            return v3
        return _new(K, L, R, V, D, n, UNION, EPS, v3, 0, 1)
    if not c3 and not c4:
        return _union_safe(K, L, R, V, D, n, v3, v4)
    b3 = R[v3] if c3 else v3
    b4 = R[v4] if c4 else v4
    s = _union_safe(K, L, R, V, D, n, b3, b4)
    return _new(K, L, R, V, D, n, UNION, EPS, s, 0, 1)


@jit
def _prod_safe(K, L, R, V, D, n, v1, v2):
    k1 = V[v1]
    s = _shift_over(K, L, R, V, D, n, L[v2], _sub64(V[v2], k1))
    p = _new(K, L, R, V, D, n, PROD, L[v1], s, 0, 0)
    return _shift_over(K, L, R, V, D, n, p, k1)


@jit
def _prod_both_eps(K, L, R, V, D, n, a, b):
    # ({e} + a)({e} + b) = e + ab + a + b, as one union chain under an e-union
    ka = V[a]
    kb = V[b]
    ha = L[a]
    hb = L[b]
    s = _shift_over(K, L, R, V, D, n, hb, _sub64(kb, ka))
    pn = _new(K, L, R, V, D, n, PROD, ha, s, 0, 0)
    if _is_out(K, ha):
        inner = _link(K, L, R, V, D, n, ha, ka, hb, kb)
    else:
        ra = R[ha]
        oa = _add64(ka, V[ra])
        tail = _link(K, L, R, V, D, n, L[ra], oa, hb, kb)
        inner = _link(K, L, R, V, D, n, L[ha], ka, tail, oa)
    u1 = _link(K, L, R, V, D, n, pn, ka, inner, ka)
    top = _shift_over(K, L, R, V, D, n, u1, ka)
    return _new(K, L, R, V, D, n, UNION, EPS, top, 0, 1)


@jit
def _prod(K, L, R, V, D, n, v1, v2):
    if v1 == BOT or v2 == BOT:
        return BOT
    if v1 == EPS:
        return v2
    if v2 == EPS:
        return v1
    c1 = _is_eps_union(K, L, v1)
    c2 = _is_eps_union(K, L, v2)
    if not c1 and not c2:
        return _prod_safe(K, L, R, V, D, n, v1, v2)
    if not c1:
        w = _prod_safe(K, L, R, V, D, n, v1, R[v2])
        return _union_safe(K, L, R, V, D, n, v1, w)
    if not c2:
        w = _prod_safe(K, L, R, V, D, n, R[v1], v2)
        return _union_safe(K, L, R, V, D, n, w, v2)
    return _prod_both_eps(K, L, R, V, D, n, R[v1], R[v2])


# ---------------------------------------------------------------------------
# public single-op kernels (counted)


@jit
def op_add(K, L, R, V, D, n, cnt, sym):
    cnt[C_ADD] += 1
    return _add(K, L, R, V, D, n, sym)


@jit
def op_shift(K, L, R, V, D, n, cnt, v, k):
    cnt[C_SHIFT] += 1
    return _shift(K, L, R, V, D, n, v, k)


@jit
def op_union(K, L, R, V, D, n, cnt, v3, v4):
    cnt[C_UNION] += 1
    return _union(K, L, R, V, D, n, v3, v4)


@jit
def op_prod(K, L, R, V, D, n, cnt, v1, v2):
    cnt[C_PROD] += 1
    return _prod(K, L, R, V, D, n, v1, v2)


# ---------------------------------------------------------------------------
# node matrices


@jit
def mat_mul(K, L, R, V, D, n, cnt, m1, m2):
    m = m1.shape[0]
    out = np.zeros((m, m), dtype=np.int64)
    for p in range(m):
        for q in range(m):
            acc = BOT
            for i in range(m):
                a = m1[p, i]
                if a == BOT:
                    continue
                b = m2[i, q]
                if b == BOT:
                    continue
                cnt[C_PROD] += 1
                e = _prod(K, L, R, V, D, n, a, b)
                cnt[C_UNION] += 1
                acc = _union(K, L, R, V, D, n, acc, e)
            out[p, q] = acc
    return out


@jit
def mat_shift(K, L, R, V, D, n, cnt, m1, k):
    m = m1.shape[0]
    out = np.zeros((m, m), dtype=np.int64)
    for p in range(m):
        for q in range(m):
            v = m1[p, q]
            if v == BOT:
                continue
            cnt[C_SHIFT] += 1
            out[p, q] = _shift(K, L, R, V, D, n, v, k)
    return out


@jit
def mat_shift_mul(K, L, R, V, D, n, cnt, m1, m2, k):
    """m1 (x) shift(m2, k), the inner update of the bottom-up pass."""
    if k == 0:
        return mat_mul(K, L, R, V, D, n, cnt, m1, m2)
    return mat_mul(K, L, R, V, D, n, cnt, m1, mat_shift(K, L, R, V, D, n, cnt, m2, k))


@jit
def terminal_matrix(K, L, R, V, D, n, cnt, m, wsrc, wdst, wsym, rsrc, rdst):
    out = np.zeros((m, m), dtype=np.int64)
    for t in range(wsrc.shape[0]):
        p = wsrc[t]
        q = wdst[t]
        cnt[C_ADD] += 1
        u = _add(K, L, R, V, D, n, wsym[t])
        cnt[C_UNION] += 1
        out[p, q] = _union(K, L, R, V, D, n, out[p, q], u)
    for t in range(rsrc.shape[0]):
        p = rsrc[t]
        q = rdst[t]
        cnt[C_UNION] += 1
        out[p, q] = _union(K, L, R, V, D, n, out[p, q], EPS)
    return out
