"""Compiled inner loops for the split scan.

For ranks ``R_1..R_n`` (a permutation of ``1..n``) and a split ``c``, let
``A_i(c) = #{m <= c : R_m <= i}``.  Then

    n^2 c d W_n(c) = S(c) = sum_i (n A_i(c) - i c)^2
                   = n^2 Q(c) - 2 n c L(c) + c^2 n(n+1)(2n+1)/6

with ``Q(c) = sum_i A_i^2`` and ``L(c) = sum_i i A_i``.  Both are integers
that change by a rank-dependent amount when observation ``c + 1`` joins the
first segment; the pairwise part of ``Q`` is maintained with two Fenwick
trees (count and rank-sum of the ranks seen so far), so a full scan costs
O(n log n) and is exact in integer arithmetic.
"""

import numpy as np
from numba import njit

# n^2 Q, 2ncL and c^2 K are each bounded by roughly n^5; 4000^5 ~ 1e18 < 2^63.
INT64_SAFE_N = 4000


@njit(cache=True, nogil=True)
def rank_moments(ranks):
    """Return int64 arrays ``Q`` and ``L`` of length n-1 (index c-1)."""
    n = ranks.shape[0]
    cnt_tree = np.zeros(n + 1, dtype=np.int64)
    sum_tree = np.zeros(n + 1, dtype=np.int64)
    q = np.empty(n - 1, dtype=np.int64)
    ell = np.empty(n - 1, dtype=np.int64)
    d_acc = 0
    l_acc = 0
    sum_all = 0
    half = n * (n + 1)
    for m in range(n - 1):
        r = ranks[m]
        cnt_less = 0
        sum_less = 0
        i = r - 1
        while i > 0:
            cnt_less += cnt_tree[i]
            sum_less += sum_tree[i]
            i -= i & (-i)
        d_acc += r + 2 * (r * cnt_less + (sum_all - sum_less))
        l_acc += (half - r * (r - 1)) // 2
        c = m + 1
        q[m] = c * c * (n + 1) - d_acc
        ell[m] = l_acc
        sum_all += r
        i = r
        while i <= n:
            cnt_tree[i] += 1
            sum_tree[i] += r
            i += i & (-i)
    return q, ell


@njit(cache=True, nogil=True)
def compensated_sum(values):
    """Neumaier-compensated sum of a float64 vector."""
    total = 0.0
    comp = 0.0
    for v in values:
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    return total + comp


@njit(cache=True, nogil=True)
def scan_ranks(ranks):
    """All W_n(c), c = 1..n-1, for n <= INT64_SAFE_N."""
    n = ranks.shape[0]
    q, ell = rank_moments(ranks)
    k = n * (n + 1) * (2 * n + 1) // 6
    w = np.empty(n - 1, dtype=np.float64)
    for m in range(n - 1):
        c = m + 1
        s = n * n * q[m] - 2 * n * c * ell[m] + c * c * k
        w[m] = s / (n * n * c * (n - c))
    return w


@njit(cache=True, nogil=True)
def scan_ranks_batch(ranks):
    """Row-wise (wbar, wmax, c_hat) for a (B, n) array of rank rows."""
    b, n = ranks.shape
    wbar = np.empty(b, dtype=np.float64)
    wmax = np.empty(b, dtype=np.float64)
    chat = np.empty(b, dtype=np.int64)
    for row in range(b):
        w = scan_ranks(ranks[row])
        wbar[row] = compensated_sum(w) / (n - 1)
        best = -1.0
        arg = 0
        for m in range(n - 1):
            if w[m] > best:
                best = w[m]
                arg = m + 1
        wmax[row] = best
        chat[row] = arg
    return wbar, wmax, chat
