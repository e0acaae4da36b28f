"""Hot numeric kernels with optional numba acceleration.

Every kernel has a pure-numpy implementation (the ``*_py`` functions) and,
when numba is importable, a compiled loop version.  The module-level names
(``select_kth``, ``knapsack_window``, ...) are bound to one or the other at
import time: set ``DDID_NO_NUMBA=1`` in the environment to force the numpy
path.  ``BACKEND`` records which path is active.
"""

from __future__ import annotations

import heapq
import os

import numpy as np

_env = os.environ.get("DDID_NO_NUMBA", "").strip().lower()
_want_numba = _env not in {"1", "true", "yes", "on"}

if _want_numba:
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"

# variable status codes shared with the simplex driver
BASIC = 0
AT_LO = 1
AT_UP = 2
NB_FREE = 3
NB_FIXED = 4


# ---------------------------------------------------------------------------
# order statistics


def select_kth_py(values: np.ndarray, k: int) -> float:
    """Value of rank k (0-based) via numpy's introselect partition."""
    return float(np.partition(values, k)[k])


def _select_kth_loop(values, k):
    a = values.copy()
    lo = 0
    hi = a.shape[0] - 1
    # depth budget; past it, sort the slice outright
    budget = 2 * int(np.log2(a.shape[0] + 1)) + 8
    while True:
        if hi - lo < 24:
            for i in range(lo + 1, hi + 1):
                key = a[i]
                j = i - 1
                while j >= lo and a[j] > key:
                    a[j + 1] = a[j]
                    j -= 1
                a[j + 1] = key
            return a[k]
        if budget <= 0:
            a[lo : hi + 1] = np.sort(a[lo : hi + 1])
            return a[k]
        budget -= 1
        mid = (lo + hi) // 2
        x, y, z = a[lo], a[mid], a[hi]
        if x > y:
            x, y = y, x
        if y > z:
            y, z = z, y
        if x > y:
            x, y = y, x
        pivot = y
        i = lo
        j = hi
        while i <= j:
            while a[i] < pivot:
                i += 1
            while a[j] > pivot:
                j -= 1
            if i <= j:
                a[i], a[j] = a[j], a[i]
                i += 1
                j -= 1
        if k <= j:
            hi = j
        elif k >= i:
            lo = i
        else:
            return a[k]


def sum_smallest_py(values: np.ndarray, k: int) -> float:
    """Sum of the k smallest entries."""
    if k <= 0:
        return 0.0
    n = values.shape[0]
    if k >= n:
        return float(values.sum())
    part = np.partition(values, k - 1)
    return float(part[:k].sum())


def _sum_smallest_loop(values, k):
    n = values.shape[0]
    if k <= 0:
        return 0.0
    if k >= n:
        s = 0.0
        for i in range(n):
            s += values[i]
        return s
    t = _select_kth_loop(values, k - 1)
    s = 0.0
    cnt = 0
    for i in range(n):
        if values[i] < t:
            s += values[i]
            cnt += 1
    s += t * (k - cnt)
    return s


def smallest_mask_py(values: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of the k smallest entries, ties resolved to low indices."""
    n = values.shape[0]
    mask = np.zeros(n, dtype=np.bool_)
    if k <= 0:
        return mask
    if k >= n:
        mask[:] = True
        return mask
    t = np.partition(values, k - 1)[k - 1]
    mask[values < t] = True
    need = k - int(mask.sum())
    if need > 0:
        eq = np.flatnonzero(values == t)[:need]
        mask[eq] = True
    return mask


def _smallest_mask_loop(values, k):
    n = values.shape[0]
    mask = np.zeros(n, dtype=np.bool_)
    if k <= 0:
        return mask
    if k >= n:
        for i in range(n):
            mask[i] = True
        return mask
    t = _select_kth_loop(values, k - 1)
    cnt = 0
    for i in range(n):
        if values[i] < t:
            mask[i] = True
            cnt += 1
    for i in range(n):
        if cnt >= k:
            break
        if values[i] == t and not mask[i]:
            mask[i] = True
            cnt += 1
    return mask


# ---------------------------------------------------------------------------
# query-window loop for knapsack families (items presorted by nominal cost)


def knapsack_window_py(a_sorted: np.ndarray, gamma: int, cap: float):
    """Slide a gamma-sized min-weight window over cost-sorted items.

    Maintains the gamma lightest among the first k items (ties evict the
    higher index) and stops at the first k whose window weight fits ``cap``.
    Returns ``(found, stop, in_set)`` where ``stop`` is the 0-based index of
    the item whose arrival made the window feasible and ``in_set`` marks the
    window contents at that point.
    """
    n = a_sorted.shape[0]
    in_set = np.zeros(n, dtype=np.bool_)
    if gamma <= 0:
        return (0.0 <= cap), 0, in_set
    heap: list[tuple[float, int]] = []
    weight = 0.0
    m = min(gamma, n)
    for i in range(m):
        heapq.heappush(heap, (-float(a_sorted[i]), -i))
        in_set[i] = True
        weight += float(a_sorted[i])
    if gamma > n:
        return False, n, in_set
    if weight <= cap:
        return True, m - 1, in_set
    for k in range(gamma, n):
        heapq.heappush(heap, (-float(a_sorted[k]), -k))
        in_set[k] = True
        weight += float(a_sorted[k])
        na, npos = heapq.heappop(heap)
        in_set[-npos] = False
        weight -= -na
        if weight <= cap:
            return True, k, in_set
    return False, n, in_set


def _kp_heap_push(wa, wp, size, a, p):
    i = size
    wa[i] = a
    wp[i] = p
    while i > 0:
        par = (i - 1) // 2
        if wa[par] > wa[i] or (wa[par] == wa[i] and wp[par] > wp[i]):
            break
        wa[par], wa[i] = wa[i], wa[par]
        wp[par], wp[i] = wp[i], wp[par]
        i = par
    return size + 1


def _kp_heap_pop(wa, wp, size):
    top_a = wa[0]
    top_p = wp[0]
    size -= 1
    wa[0] = wa[size]
    wp[0] = wp[size]
    i = 0
    while True:
        l = 2 * i + 1
        r = l + 1
        big = i
        if l < size and (wa[l] > wa[big] or (wa[l] == wa[big] and wp[l] > wp[big])):
            big = l
        if r < size and (wa[r] > wa[big] or (wa[r] == wa[big] and wp[r] > wp[big])):
            big = r
        if big == i:
            break
        wa[big], wa[i] = wa[i], wa[big]
        wp[big], wp[i] = wp[i], wp[big]
        i = big
    return top_a, top_p, size


def _knapsack_window_loop(a_sorted, gamma, cap):
    n = a_sorted.shape[0]
    in_set = np.zeros(n, dtype=np.bool_)
    if gamma <= 0:
        return (0.0 <= cap), 0, in_set
    wa = np.empty(gamma + 1, dtype=np.float64)
    wp = np.empty(gamma + 1, dtype=np.int64)
    size = 0
    weight = 0.0
    m = gamma if gamma < n else n
    for i in range(m):
        size = _kp_heap_push(wa, wp, size, a_sorted[i], i)
        in_set[i] = True
        weight += a_sorted[i]
    if gamma > n:
        return False, n, in_set
    if weight <= cap:
        return True, m - 1, in_set
    for k in range(gamma, n):
        size = _kp_heap_push(wa, wp, size, a_sorted[k], k)
        in_set[k] = True
        weight += a_sorted[k]
        pa, pp, size = _kp_heap_pop(wa, wp, size)
        in_set[pp] = False
        weight -= pa
        if weight <= cap:
            return True, k, in_set
    return False, n, in_set


# ---------------------------------------------------------------------------
# worst-case coverage value on a query set (costs presorted ascending)
#
# phi_on_mask computes, for the p-selection problem with failure allowance b
# and deviation budget gamma, the value of a query set given as a membership
# mask over cost-sorted positions.  The adversary reveals failures on the
# gamma_i cheapest observed items (any other pattern is dominated), and the
# value decomposes into two capacity-restricted selections.


def _merged_prefix_py(c, first, second, jmax):
    """Prefix sums of the ascending merge of two ascending position lists."""
    merged = np.sort(np.concatenate((c[first], c[second])))[:jmax]
    out = np.empty(merged.shape[0] + 1)
    out[0] = 0.0
    np.cumsum(merged, out=out[1:])
    return out


def phi_on_mask_py(c_sorted: np.ndarray, memb: np.ndarray, p: int, b: int, gamma: int) -> float:
    """Worst-case value of the query set ``memb`` (positions into c_sorted)."""
    n = c_sorted.shape[0]
    m = memb.shape[0]
    rest = np.setdiff1d(np.arange(n), memb, assume_unique=True)
    pm = np.concatenate(([0.0], np.cumsum(c_sorted[memb])))
    best_total = -np.inf
    for gi in range(0, min(m, gamma) + 1):
        # branch one: at most b failures among revealed-failed and unobserved
        lo_k = max(0, p - (m - gi))
        hi_k = min(b, gi + (n - m), p)
        v1 = np.inf
        if lo_k <= hi_k:
            mp = _merged_prefix_py(c_sorted, memb[:gi], rest, hi_k)
            hi_k = min(hi_k, mp.shape[0] - 1)
            for k in range(lo_k, hi_k + 1):
                v = mp[k] + (pm[gi + (p - k)] - pm[gi])
                if v < v1:
                    v1 = v
        # branch two: leftover budget lands outside, failures capped tighter
        cap2 = b - (gamma - gi)
        v2 = np.inf
        if cap2 >= 0:
            lo_k = max(0, p - (n - gi))
            hi_k = min(cap2, gi, p)
            if lo_k <= hi_k:
                mp = _merged_prefix_py(c_sorted, memb[gi:], rest, p)
                for k in range(lo_k, hi_k + 1):
                    v = pm[k] + mp[p - k]
                    if v < v2:
                        v2 = v
        v = v1 if v1 < v2 else v2
        if v > best_total:
            best_total = v
    return float(best_total)


def _phi_on_mask_loop(c_sorted, memb, p, b, gamma, rest, buf):
    n = c_sorted.shape[0]
    m = memb.shape[0]
    nr = rest.shape[0]
    best_total = -np.inf
    gmax = m if m < gamma else gamma
    for gi in range(0, gmax + 1):
        # branch one: pool = first gi observed + all unobserved, cap b
        v1 = np.inf
        lo_k = p - (m - gi)
        if lo_k < 0:
            lo_k = 0
        hi_k = b
        if gi + nr < hi_k:
            hi_k = gi + nr
        if p < hi_k:
            hi_k = p
        if lo_k <= hi_k:
            # merge first gi members with rest, prefix sums into buf
            i1 = 0
            i2 = 0
            buf[0] = 0.0
            for j in range(hi_k):
                if i1 < gi and (i2 >= nr or c_sorted[memb[i1]] <= c_sorted[rest[i2]]):
                    buf[j + 1] = buf[j] + c_sorted[memb[i1]]
                    i1 += 1
                else:
                    buf[j + 1] = buf[j] + c_sorted[rest[i2]]
                    i2 += 1
            # prefix sums of members after gi give the forced remainder
            for k in range(lo_k, hi_k + 1):
                s = buf[k]
                for t in range(gi, gi + (p - k)):
                    s += c_sorted[memb[t]]
                if s < v1:
                    v1 = s
        # branch two: pool = first gi observed only, cap b - (gamma - gi)
        v2 = np.inf
        cap2 = b - (gamma - gi)
        if cap2 >= 0:
            lo_k = p - (n - gi)
            if lo_k < 0:
                lo_k = 0
            hi_k = cap2
            if gi < hi_k:
                hi_k = gi
            if p < hi_k:
                hi_k = p
            if lo_k <= hi_k:
                i1 = gi
                i2 = 0
                buf[0] = 0.0
                for j in range(p):
                    if i1 < m and (i2 >= nr or c_sorted[memb[i1]] <= c_sorted[rest[i2]]):
                        buf[j + 1] = buf[j] + c_sorted[memb[i1]]
                        i1 += 1
                    elif i2 < nr:
                        buf[j + 1] = buf[j] + c_sorted[rest[i2]]
                        i2 += 1
                    else:
                        buf[j + 1] = np.inf
                s0 = 0.0
                for k in range(lo_k, hi_k + 1):
                    s0 = 0.0
                    for t in range(k):
                        s0 += c_sorted[memb[t]]
                    v = s0 + buf[p - k]
                    if v < v2:
                        v2 = v
        v = v1 if v1 < v2 else v2
        if v > best_total:
            best_total = v
    return best_total


def scan_family_min_phi_py(c_sorted, a_sorted, p, b, gamma, cap):
    """Exhaustive minimum of the coverage value over all weight-feasible sets.

    Enumerates every subset of cost-sorted positions whose weight total fits
    ``cap`` and returns ``(best_value, best_mask_bits)``; selection families
    are the unit-weight special case.  Intended for validation at n around 20
    and below; exponential in n by design.
    """
    n = c_sorted.shape[0]
    best = np.inf
    best_mask = 0
    positions = np.arange(n)
    for mask in range(1 << n):
        sel = (mask >> positions) & 1 == 1
        if float(a_sorted[sel].sum()) > cap:
            continue
        memb = positions[sel]
        val = phi_on_mask_py(c_sorted, memb, p, b, gamma)
        if val < best:
            best = val
            best_mask = mask
    return best, best_mask


def _scan_family_min_phi_loop(c_sorted, a_sorted, p, b, gamma, cap):
    n = c_sorted.shape[0]
    memb = np.empty(n, dtype=np.int64)
    rest = np.empty(n, dtype=np.int64)
    buf = np.empty(n + 2, dtype=np.float64)
    best = np.inf
    best_mask = np.int64(0)
    for mask in range(1 << n):
        m = 0
        nr = 0
        wt = 0.0
        for i in range(n):
            if (mask >> i) & 1:
                memb[m] = i
                m += 1
                wt += a_sorted[i]
            else:
                rest[nr] = i
                nr += 1
        if wt > cap:
            continue
        val = _phi_on_mask_loop(c_sorted, memb[:m], p, b, gamma, rest[:nr], buf)
        if val < best:
            best = val
            best_mask = np.int64(mask)
    return best, best_mask


# ---------------------------------------------------------------------------
# simplex step primitives


def chuzc_primal_py(d, vstat, dtol, bland):
    """Entering column: most negative dual infeasibility, or Bland's rule."""
    at_lo = vstat == AT_LO
    at_up = vstat == AT_UP
    free = vstat == NB_FREE
    viol = np.zeros(d.shape[0])
    viol[at_lo] = -d[at_lo]
    viol[at_up] = d[at_up]
    viol[free] = np.abs(d[free])
    eligible = viol > dtol
    if not eligible.any():
        return -1
    if bland:
        return int(np.flatnonzero(eligible)[0])
    return int(np.argmax(viol))


def _chuzc_primal_loop(d, vstat, dtol, bland):
    n = d.shape[0]
    best = -1
    best_v = dtol
    for j in range(n):
        s = vstat[j]
        if s == AT_LO:
            v = -d[j]
        elif s == AT_UP:
            v = d[j]
        elif s == NB_FREE:
            v = abs(d[j])
        else:
            continue
        if v > best_v:
            if bland:
                return j
            best_v = v
            best = j
    return best


def ratio_primal_py(beta, xb, lob, hib, own_range, ptol):
    """Primal ratio test.

    ``beta`` is the basis-direction column for a unit increase of the entering
    variable along its improving direction; basics move by ``-t * beta``.
    Returns ``(r, t, kind)`` with kind 0 = leaves at lower bound, 1 = leaves
    at upper bound, 2 = entering flips to its other bound (r == -1),
    3 = unbounded (r == -2).
    """
    m = beta.shape[0]
    t = np.full(m, np.inf)
    dn = (beta > ptol) & np.isfinite(lob)
    up = (beta < -ptol) & np.isfinite(hib)
    t[dn] = np.maximum(xb[dn] - lob[dn], 0.0) / beta[dn]
    t[up] = np.minimum(xb[up] - hib[up], 0.0) / beta[up]
    tmin = t.min() if m else np.inf
    if own_range < tmin:
        tmin = own_range
    if not np.isfinite(tmin):
        return -2, np.inf, 3
    thresh = tmin + 1e-9 * (1.0 + abs(tmin))
    cand = np.flatnonzero(t <= thresh)
    if cand.size == 0:
        return -1, own_range, 2
    r = int(cand[np.argmax(np.abs(beta[cand]))])
    if own_range <= thresh and own_range < t[r]:
        # flip only if strictly earlier than every pivot candidate
        return -1, own_range, 2
    kind = 0 if beta[r] > 0 else 1
    return r, float(max(t[r], 0.0)), kind


def _ratio_primal_loop(beta, xb, lob, hib, own_range, ptol):
    m = beta.shape[0]
    tmin = own_range
    for i in range(m):
        bi = beta[i]
        if bi > ptol:
            if np.isfinite(lob[i]):
                ti = xb[i] - lob[i]
                if ti < 0.0:
                    ti = 0.0
                ti = ti / bi
                if ti < tmin:
                    tmin = ti
        elif bi < -ptol:
            if np.isfinite(hib[i]):
                ti = xb[i] - hib[i]
                if ti > 0.0:
                    ti = 0.0
                ti = ti / bi
                if ti < tmin:
                    tmin = ti
    if not np.isfinite(tmin):
        return -2, np.inf, 3
    thresh = tmin + 1e-9 * (1.0 + abs(tmin))
    best = -1
    best_beta = 0.0
    best_t = np.inf
    for i in range(m):
        bi = beta[i]
        if bi > ptol:
            if not np.isfinite(lob[i]):
                continue
            ti = xb[i] - lob[i]
            if ti < 0.0:
                ti = 0.0
            ti = ti / bi
        elif bi < -ptol:
            if not np.isfinite(hib[i]):
                continue
            ti = xb[i] - hib[i]
            if ti > 0.0:
                ti = 0.0
            ti = ti / bi
        else:
            continue
        if ti <= thresh and abs(bi) > best_beta:
            best_beta = abs(bi)
            best = i
            best_t = ti
    if best == -1:
        return -1, own_range, 2
    if own_range <= thresh and own_range < best_t:
        return -1, own_range, 2
    kind = 0 if beta[best] > 0 else 1
    t = best_t if best_t > 0.0 else 0.0
    return best, t, kind


def eta_ftran_py(emat, erows, k, v):
    """Apply k stored pivot updates to v in place, oldest first."""
    for t in range(k):
        r = erows[t]
        vr = v[r]
        if vr != 0.0:
            v += emat[t] * vr
            v[r] = emat[t, r] * vr


def eta_btran_py(emat, erows, k, v):
    """Apply the transposed pivot updates to v in place, newest first."""
    for t in range(k - 1, -1, -1):
        v[erows[t]] = emat[t] @ v


def _eta_ftran_loop(emat, erows, k, v):
    m = v.shape[0]
    for t in range(k):
        r = erows[t]
        vr = v[r]
        if vr != 0.0:
            for i in range(m):
                v[i] += emat[t, i] * vr
            v[r] = emat[t, r] * vr


def _eta_btran_loop(emat, erows, k, v):
    m = v.shape[0]
    for t in range(k - 1, -1, -1):
        acc = 0.0
        for i in range(m):
            acc += emat[t, i] * v[i]
        v[erows[t]] = acc


# ---------------------------------------------------------------------------
# dispatch

if HAVE_NUMBA:
    _select_kth_loop = njit(cache=True)(_select_kth_loop)
    _kp_heap_push = njit(cache=True)(_kp_heap_push)
    _kp_heap_pop = njit(cache=True)(_kp_heap_pop)
    _phi_on_mask_loop = njit(cache=True)(_phi_on_mask_loop)
    select_kth = _select_kth_loop
    sum_smallest = njit(cache=True)(_sum_smallest_loop)
    smallest_mask = njit(cache=True)(_smallest_mask_loop)
    knapsack_window = njit(cache=True)(_knapsack_window_loop)
    scan_family_min_phi = njit(cache=True)(_scan_family_min_phi_loop)

    def phi_on_mask(c_sorted, memb, p, b, gamma):
        n = c_sorted.shape[0]
        rest = np.setdiff1d(np.arange(n), memb, assume_unique=True)
        buf = np.empty(n + 2, dtype=np.float64)
        return float(
            _phi_on_mask_loop(
                np.asarray(c_sorted, dtype=np.float64),
                np.asarray(memb, dtype=np.int64),
                p,
                b,
                gamma,
                rest.astype(np.int64),
                buf,
            )
        )

    chuzc_primal = njit(cache=True)(_chuzc_primal_loop)
    ratio_primal = njit(cache=True)(_ratio_primal_loop)
    eta_ftran = njit(cache=True)(_eta_ftran_loop)
    eta_btran = njit(cache=True)(_eta_btran_loop)
else:
    select_kth = select_kth_py
    sum_smallest = sum_smallest_py
    smallest_mask = smallest_mask_py
    knapsack_window = knapsack_window_py
    phi_on_mask = phi_on_mask_py
    scan_family_min_phi = scan_family_min_phi_py
    chuzc_primal = chuzc_primal_py
    ratio_primal = ratio_primal_py
    eta_ftran = eta_ftran_py
    eta_btran = eta_btran_py
