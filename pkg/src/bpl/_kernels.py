"""Batched listener/speaker recursion with availability sampling.

Two interchangeable backends run the same arithmetic over a vector of claims
for one agent:

* a numba ``@njit`` kernel (default when numba imports), parallel over claims;
* a pure-numpy path, vectorised over claims, selected with ``BPL_DISABLE_NUMBA=1``
  or when numba is missing.

Both consume the counter-based uniforms of :mod:`bpl._rng`, so they draw the
same recall indices. Sums are accumulated in a different order, so agreement
across backends is to ~1e-15 rather than bitwise; each backend alone is
bit-reproducible.
"""

import os

import numpy as np

from . import _rng

_DISABLED = os.environ.get("BPL_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError("disabled by BPL_DISABLE_NUMBA")
    import numba
    from numba import njit, prange

    # prefer OpenMP/workqueue: some images ship a TBB older than numba supports
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def backend() -> str:
    return "numba" if HAS_NUMBA else "numpy"


def set_threads(n: int) -> None:
    """Cap the numba worker count (no-op on the numpy backend)."""
    if HAS_NUMBA and n and n > 0:
        numba.set_num_threads(min(int(n), numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------- numpy path


def _speaker_np(l_true, alpha, pi, eps):
    lc = np.clip(l_true, eps, 1.0 - eps)
    a = lc**alpha
    b = (1.0 - lc) ** alpha
    h1 = a / (a + b)
    s1 = (1.0 - pi) * h1 + pi * (1.0 - h1)
    s0 = (1.0 - pi) * (1.0 - h1) + pi * h1
    return s0, s1


def _recall_true_np(seeds, stream, n_samples, cum_phi, phi, is_true, self_idx):
    """Salience-weighted fraction of recalled-True items, one sample per row."""
    m = cum_phi.shape[0]
    n = seeds.shape[0]
    out = np.full(n, 0.5)
    if m == 0 or n_samples <= 0:
        return out
    total = cum_phi[-1]
    has_self = self_idx >= 0
    safe_self = np.where(has_self, self_idx, 0)
    phi_self = np.where(has_self, phi[safe_self], 0.0)
    before_self = np.where(has_self & (safe_self > 0), cum_phi[safe_self - 1], 0.0)
    before_self = np.where(has_self & (safe_self == 0), 0.0, before_self)
    reduced = total - phi_self
    ok = reduced > 0.0
    chunk = max(1, 2_000_000 // max(n_samples, 1))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        u = _rng.uniform_matrix(seeds[lo:hi], stream * n_samples, n_samples)
        x = u * reduced[lo:hi, None]
        x = np.where(has_self[lo:hi, None] & (x >= before_self[lo:hi, None]), x + phi_self[lo:hi, None], x)
        idx = np.searchsorted(cum_phi, x, side="right")
        idx = np.minimum(idx, m - 1)
        clash = has_self[lo:hi, None] & (idx == safe_self[lo:hi, None])
        if clash.any():
            alt = np.where(safe_self[lo:hi, None] + 1 < m, safe_self[lo:hi, None] + 1, safe_self[lo:hi, None] - 1)
            idx = np.where(clash, alt, idx)
        w = phi[idx]
        wt = np.where(is_true[idx], w, 0.0)
        frac = wt.sum(axis=1) / w.sum(axis=1)
        out[lo:hi] = np.where(ok[lo:hi], frac, 0.5)
    return out


def _recursion_numpy(p_tilde, s_lit, pi2, k_eff, alpha, lam, n_samples, seeds, cum_phi, phi, is_true, self_idx, eps):
    n = p_tilde.shape[0]
    levels = np.full((n, 3), np.nan)
    l_prev = s_lit * p_tilde / (s_lit * p_tilde + (1.0 - s_lit) * (1.0 - p_tilde))
    levels[:, 0] = l_prev
    s_hat = np.stack([1.0 - s_lit, s_lit], axis=1)
    kmax = int(k_eff.max()) if n else 0
    for level in range(1, kmax + 1):
        active = k_eff >= level
        pi = np.zeros(n) if level == 1 else pi2
        s0, s1 = _speaker_np(l_prev, alpha, pi, eps)
        if lam > 0.0:
            w1 = np.full(n, 0.5)
            if active.any():
                w1[active] = _recall_true_np(
                    seeds[active], level - 1, n_samples, cum_phi, phi, is_true, self_idx[active]
                )
            h0 = (1.0 - lam) * s0 + lam * (1.0 - w1)
            h1 = (1.0 - lam) * s1 + lam * w1
        else:
            h0, h1 = s0, s1
        num = h1 * p_tilde
        l_new = num / (num + h0 * (1.0 - p_tilde))
        levels[:, level] = np.where(active, l_new, np.nan)
        s_hat[active, 0] = h0[active]
        s_hat[active, 1] = h1[active]
        l_prev = np.where(active, l_new, l_prev)
    return levels, s_hat


# ---------------------------------------------------------------- numba path

if HAS_NUMBA:
    _G = np.uint64(0x9E3779B97F4A7C15)
    _A = np.uint64(0xBF58476D1CE4E5B9)
    _B = np.uint64(0x94D049BB133111EB)

    @njit(cache=True, inline="always")
    def _uniform_nb(seed, counter):
        z = seed + (counter + np.uint64(1)) * _G
        z = (z ^ (z >> np.uint64(30))) * _A
        z = (z ^ (z >> np.uint64(27))) * _B
        z = z ^ (z >> np.uint64(31))
        return np.float64(z >> np.uint64(11)) * (1.0 / 9007199254740992.0)

    @njit(cache=True)
    def _search_right(cum, x):
        lo = 0
        hi = cum.shape[0]
        while lo < hi:
            mid = (lo + hi) // 2
            if cum[mid] <= x:
                lo = mid + 1
            else:
                hi = mid
        return lo

    @njit(cache=True)
    def _guide_table(cum):
        """Bucket b covers [b * width, (b + 1) * width); guide[b] is the first
        index whose cumulative weight exceeds the bucket's left edge."""
        m = cum.shape[0]
        width = cum[m - 1] / m
        guide = np.empty(m + 2, dtype=np.int64)
        for b in range(m + 2):
            guide[b] = _search_right(cum, b * width)
        return guide, width

    @njit(cache=True)
    def _search_guided(cum, guide, width, x):
        """Same result as ``_search_right(cum, x)``; the guide narrows the range."""
        nb = guide.shape[0] - 1
        b = int(x / width)
        if b > nb - 1:
            b = nb - 1
        while b > 0 and b * width > x:
            b -= 1
        while b + 1 < nb and (b + 1) * width <= x:
            b += 1
        lo = guide[b]
        hi = guide[b + 1] + 1
        if hi > cum.shape[0]:
            hi = cum.shape[0]
        while lo < hi:
            mid = (lo + hi) // 2
            if cum[mid] <= x:
                lo = mid + 1
            else:
                hi = mid
        return lo

    @njit(cache=True)
    def _recall_true_nb(seed, stream, n_samples, cum_phi, phi, is_true, self_i, guide, width):
        m = cum_phi.shape[0]
        if m == 0 or n_samples <= 0:
            return 0.5
        total = cum_phi[m - 1]
        phi_self = 0.0
        before = 0.0
        if self_i >= 0:
            phi_self = phi[self_i]
            if self_i > 0:
                before = cum_phi[self_i - 1]
        reduced = total - phi_self
        if reduced <= 0.0:
            return 0.5
        wt = 0.0
        ws = 0.0
        base = np.uint64(stream) * np.uint64(n_samples)
        for j in range(n_samples):
            u = _uniform_nb(seed, base + np.uint64(j))
            x = u * reduced
            if self_i >= 0 and x >= before:
                x = x + phi_self
            idx = _search_guided(cum_phi, guide, width, x)
            if idx > m - 1:
                idx = m - 1
            if self_i >= 0 and idx == self_i:
                idx = self_i + 1 if self_i + 1 < m else self_i - 1
            w = phi[idx]
            ws += w
            if is_true[idx]:
                wt += w
        return wt / ws

    @njit(cache=True, parallel=True)
    def _recursion_numba(p_tilde, s_lit, pi2, k_eff, alpha, lam, n_samples, seeds, cum_phi, phi, is_true, self_idx, eps):
        n = p_tilde.shape[0]
        levels = np.full((n, 3), np.nan)
        s_hat = np.empty((n, 2))
        if cum_phi.shape[0] > 0:
            guide, width = _guide_table(cum_phi)
        else:
            guide, width = np.zeros(2, dtype=np.int64), 1.0
        for i in prange(n):
            p = p_tilde[i]
            s = s_lit[i]
            l_prev = s * p / (s * p + (1.0 - s) * (1.0 - p))
            levels[i, 0] = l_prev
            s_hat[i, 0] = 1.0 - s
            s_hat[i, 1] = s
            for level in range(1, k_eff[i] + 1):
                pi = 0.0 if level == 1 else pi2[i]
                lc = min(max(l_prev, eps), 1.0 - eps)
                a = lc**alpha
                b = (1.0 - lc) ** alpha
                h = a / (a + b)
                s1 = (1.0 - pi) * h + pi * (1.0 - h)
                s0 = (1.0 - pi) * (1.0 - h) + pi * h
                if lam > 0.0:
                    w1 = _recall_true_nb(seeds[i], level - 1, n_samples, cum_phi, phi, is_true, self_idx[i], guide, width)
                    s0 = (1.0 - lam) * s0 + lam * (1.0 - w1)
                    s1 = (1.0 - lam) * s1 + lam * w1
                num = s1 * p
                l_prev = num / (num + s0 * (1.0 - p))
                levels[i, level] = l_prev
                s_hat[i, 0] = s0
                s_hat[i, 1] = s1
        return levels, s_hat


def recursion_batch(
    p_tilde,
    s_lit,
    pi2,
    k_eff,
    alpha,
    lam,
    n_samples,
    seeds,
    cum_phi,
    phi,
    is_true,
    self_idx,
    eps=1e-12,
    use_numba=None,
):
    """Run listener levels 0..k_eff[i] for every claim i.

    Returns ``(levels, s_hat)``: ``levels[i, l]`` is L_l(w=1|u_i) (NaN above
    the claim's effective depth) and ``s_hat[i]`` is the top-level adjusted
    speaker likelihood pair (S(u|w=0), S(u|w=1)).
    """
    args = (
        np.ascontiguousarray(p_tilde, dtype=np.float64),
        np.ascontiguousarray(s_lit, dtype=np.float64),
        np.ascontiguousarray(pi2, dtype=np.float64),
        np.ascontiguousarray(k_eff, dtype=np.int64),
        float(alpha),
        float(lam),
        int(n_samples),
        np.ascontiguousarray(seeds, dtype=np.uint64),
        np.ascontiguousarray(cum_phi, dtype=np.float64),
        np.ascontiguousarray(phi, dtype=np.float64),
        np.ascontiguousarray(is_true, dtype=np.bool_),
        np.ascontiguousarray(self_idx, dtype=np.int64),
        float(eps),
    )
    if use_numba is None:
        use_numba = HAS_NUMBA
    if use_numba:
        if not HAS_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable")
        return _recursion_numba(*args)
    return _recursion_numpy(*args)
