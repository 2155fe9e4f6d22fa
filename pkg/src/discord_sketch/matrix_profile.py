"""Exact matrix profiles: AB-joins, self-joins and discord extraction.

The join walks the distance matrix row by row. Each row of window
covariances is derived from the previous one with the mean-centred update

    cov[i+1, j+1] = cov[i, j] + df_a[i] * dg_b[j] + df_b[j] * dg_a[i]

so a row costs O(n_train) instead of O(n_train * m). Rows are processed in
fixed-size blocks; every block seeds its first row with direct dot products,
which bounds drift and lets blocks run on separate threads with results
that do not depend on the thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .errors import NoAdmissibleNeighbor, SeriesTooShort
from .timeseries import as_series, window_stats, windows_of

BLOCK_ROWS = 512


@dataclass(frozen=True)
class ProfileResult:
    """Matrix profile of a test series against a train series.

    ``profile[i]`` is the distance from test window ``i`` to its nearest
    admissible train window, which starts at ``nn_index[i]``. Rows with no
    admissible neighbour (self-joins with a wide exclusion zone) hold
    ``inf`` and index ``-1``.
    """

    profile: np.ndarray
    nn_index: np.ndarray
    m: int
    exclusion_radius: int = 0

    def __len__(self):
        return self.profile.size


def default_exclusion(m: int) -> int:
    return int(math.ceil(m / 2))


def _prepare(x, m):
    x = as_series(x)
    xc = x - x.mean()
    st = window_stats(xc, m)
    inv = st.inv_norm
    df = 0.5 * (xc[m:] - xc[:-m])
    dg = (xc[m:] - st.mu[1:]) + (xc[:-m] - st.mu[:-1])
    return xc, st, inv, df, dg


@numba.njit(nogil=True, cache=True)
def _join_block(r0, r1, first_row, col0, df_a, dg_a, inv_a, const_a,
                df_b, dg_b, inv_b, base_nc, base_c, m, excl,
                out_idx, out_d2):
    lb = inv_b.size
    cur = first_row.copy()
    nxt = np.empty(lb)
    two_m = 2.0 * m
    for i in range(r0, r1):
        w = two_m * inv_a[i]
        base = base_c if const_a[i] else base_nc
        # excluded columns are lo..hi inclusive; lo > hi means none
        if excl < 0:
            lo, hi = lb, -1
        else:
            lo, hi = i - excl, i + excl
        best = np.inf
        bj = -1
        if i > r0:
            fa = df_a[i - 1]
            ga = dg_a[i - 1]
            c = col0[i]
            nxt[0] = c
            d = base[0] - w * c * inv_b[0]
            if d < best and (0 < lo or 0 > hi):
                best = d
                bj = 0
            for j in range(1, lb):
                c = cur[j - 1] + fa * dg_b[j - 1] + df_b[j - 1] * ga
                nxt[j] = c
                d = base[j] - w * c * inv_b[j]
                if d < best and (j < lo or j > hi):
                    best = d
                    bj = j
            cur, nxt = nxt, cur
        else:
            for j in range(lb):
                d = base[j] - w * cur[j] * inv_b[j]
                if d < best and (j < lo or j > hi):
                    best = d
                    bj = j
        out_idx[i] = bj
        out_d2[i] = best


def _join(a, b, m, excl, n_jobs=1):
    """Rows are windows of ``a`` (test), columns windows of ``b`` (train)."""
    ac, sa, inv_a, df_a, dg_a = _prepare(a, m)
    if b is a:
        bc, sb, inv_b, df_b, dg_b = ac, sa, inv_a, df_a, dg_a
    else:
        bc, sb, inv_b, df_b, dg_b = _prepare(b, m)
    la, lb = inv_a.size, inv_b.size
    wa, wb = windows_of(ac, m), windows_of(bc, m)

    # first column of every row, centred on the train side
    col0 = wa @ (bc[:m] - sb.mu[0])
    base_nc = np.where(sb.constant, float(m), 2.0 * m)
    base_c = np.where(sb.constant, 0.0, float(m))
    const_a = sa.constant.copy()

    idx = np.empty(la, dtype=np.int64)
    d2 = np.empty(la)
    starts = list(range(0, la, BLOCK_ROWS))

    def run(r0):
        r1 = min(r0 + BLOCK_ROWS, la)
        first = wb @ (ac[r0:r0 + m] - sa.mu[r0])
        _join_block(r0, r1, first, col0, df_a, dg_a, inv_a, const_a,
                    df_b, dg_b, inv_b, base_nc, base_c, m, excl, idx, d2)

    if n_jobs is None or n_jobs <= 1 or len(starts) == 1:
        for r0 in starts:
            run(r0)
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(run, starts))

    prof = np.full(la, np.inf)
    ok = idx >= 0
    # recompute the chosen pairs explicitly; the correlation form is
    # imprecise for near-identical windows
    prof[ok] = _pair_distances(wa, sa, wb, sb, np.flatnonzero(ok), idx[ok])
    idx[~ok] = -1
    return prof, idx


def _pair_distances(wa, sa, wb, sb, rows, cols):
    za = _zwin(wa[rows], sa.mu[rows], sa.sigma[rows], sa.constant[rows])
    zb = _zwin(wb[cols], sb.mu[cols], sb.sigma[cols], sb.constant[cols])
    return np.sqrt(np.sum((za - zb) ** 2, axis=1))


def _zwin(w, mu, sigma, const):
    safe = np.where(const, 1.0, sigma)
    z = (w - mu[:, None]) / safe[:, None]
    z[const] = 0.0
    return z


def ab_join(train, test, m: int, n_jobs: int = 1) -> ProfileResult:
    """Nearest-neighbour distance of every test window into ``train``."""
    train = as_series(train, "train")
    test = as_series(test, "test")
    if m < 2:
        raise ValueError(f"window length must be >= 2, got {m}")
    if train.size < m or test.size < m:
        raise SeriesTooShort(
            f"series lengths {train.size}/{test.size} shorter than m={m}")
    prof, idx = _join(test, train, m, -1, n_jobs)
    return ProfileResult(prof, idx, m, 0)


def self_join(t, m: int, exclusion_radius: int | None = None,
              n_jobs: int = 1) -> ProfileResult:
    """Self-join matrix profile; neighbours within the radius are trivial
    matches and are skipped."""
    t = as_series(t)
    if exclusion_radius is None:
        exclusion_radius = default_exclusion(m)
    if exclusion_radius < 0:
        raise ValueError("exclusion_radius must be >= 0")
    if m < 2:
        raise ValueError(f"window length must be >= 2, got {m}")
    if t.size < 2 * m:
        raise SeriesTooShort(f"self-join needs n >= 2m, got n={t.size}, m={m}")
    if exclusion_radius >= t.size - m:
        raise NoAdmissibleNeighbor(
            f"exclusion radius {exclusion_radius} leaves no candidates "
            f"for n={t.size}, m={m}")
    prof, idx = _join(t, t, m, int(exclusion_radius), n_jobs)
    return ProfileResult(prof, idx, m, int(exclusion_radius))


def top_discord(p: ProfileResult | np.ndarray) -> tuple[int, float]:
    """Arg-max of the profile over finite entries (first index on ties)."""
    prof = p.profile if isinstance(p, ProfileResult) else np.asarray(p, float)
    if prof.size == 0:
        raise ValueError("empty profile")
    finite = np.isfinite(prof)
    if not finite.any():
        raise NoAdmissibleNeighbor("profile has no finite entries")
    masked = np.where(finite, prof, -np.inf)
    i = int(np.argmax(masked))
    return i, float(prof[i])


def top_k_discords(p: ProfileResult | np.ndarray, k: int,
                   exclusion_radius: int) -> list[tuple[int, float]]:
    """Greedy top-k: take the arg-max, mask its neighbourhood, repeat."""
    if k < 1:
        raise ValueError("k must be >= 1")
    prof = p.profile if isinstance(p, ProfileResult) else np.asarray(p, float)
    masked = np.where(np.isfinite(prof), prof, -np.inf).astype(float)
    out = []
    for _ in range(k):
        i = int(np.argmax(masked))
        if masked[i] == -np.inf:
            break
        out.append((i, float(prof[i])))
        masked[max(0, i - exclusion_radius):i + exclusion_radius + 1] = -np.inf
    return out
