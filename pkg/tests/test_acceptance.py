"""Acceptance gate: one test per criterion, run at the stated tolerances.

Each test prints a one-line PASS/FAIL verdict with its measured numbers; the
conftest hook repeats the verdicts in the terminal summary.
"""

import time

import numpy as np
import pytest

from discord_sketch import evaluation as ev
from discord_sketch.count_sketch import (
    add_dimension,
    delete_dimension,
    identity_plan,
    make_plan,
    sketch,
)
from discord_sketch.datagen import WalkConfig, gen_random_walk
from discord_sketch.detection import DetectionConfig, detect, exact_discord
from discord_sketch.matrix_profile import ab_join, default_exclusion, self_join
from oracles import trapezoid_auc


def verdict(label, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")


def _zwindows(x, m):
    """Explicit two-pass z-normalization of every window."""
    W = np.lib.stride_tricks.sliding_window_view(x, m)
    mu = W.mean(axis=1, keepdims=True)
    sd = np.sqrt(((W - mu) ** 2).mean(axis=1, keepdims=True))
    flat = sd[:, 0] <= 1e-12 * (np.abs(W).max(axis=1) + 1)
    Z = (W - mu) / np.where(flat[:, None], 1.0, sd)
    Z[flat] = 0.0
    return Z


def _brute(train, test, m, excl=None):
    Zq, Zt = _zwindows(test, m), _zwindows(train, m)
    D = np.sqrt(((Zq[:, None, :] - Zt[None, :, :]) ** 2).sum(axis=2))
    if excl is not None:
        i, j = np.indices(D.shape)
        D[np.abs(i - j) <= excl] = np.inf
    idx = np.argmin(D, axis=1)
    prof = D[np.arange(D.shape[0]), idx]
    idx[~np.isfinite(prof)] = -1
    return prof, idx


def test_criterion_1_matrix_profile_oracle():
    t0 = time.perf_counter()
    worst, idx_mismatch = 0.0, 0
    for s in range(200):
        rng = np.random.default_rng([1, s])
        m = int(rng.choice([8, 16, 32]))
        n_tr = int(rng.integers(2 * m + 2, 301))
        n_te = int(rng.integers(m, 301))
        tr = np.cumsum(rng.normal(size=n_tr))
        te = np.cumsum(rng.normal(size=n_te))
        res = ab_join(tr, te, m)
        prof, idx = _brute(tr, te, m)
        worst = max(worst, float(np.max(np.abs(res.profile - prof))))
        idx_mismatch += int(np.sum(res.nn_index != idx))
        res = self_join(tr, m)
        prof, idx = _brute(tr, tr, m, excl=default_exclusion(m))
        fin = np.isfinite(prof)
        assert np.array_equal(np.isfinite(res.profile), fin)
        worst = max(worst, float(np.max(np.abs(res.profile[fin] - prof[fin]))))
        idx_mismatch += int(np.sum(res.nn_index != idx))
    secs = time.perf_counter() - t0
    ok = worst <= 1e-6 and idx_mismatch == 0 and secs < 120
    verdict("1 matrix-profile oracle", ok,
            f"max abs err {worst:.2e}, index mismatches {idx_mismatch}, {secs:.1f}s")
    assert ok


def test_criterion_2_degenerate_sketch():
    t0 = time.perf_counter()
    bad = []
    for s in range(50):
        rng = np.random.default_rng([2, s])
        d = int(rng.integers(1, 17))
        m = int(rng.choice([8, 12, 16, 24]))
        n_tr, n_te = int(rng.integers(3 * m, 400)), int(rng.integers(m + 1, 300))
        T = gen_random_walk(WalkConfig(d, n_tr + n_te, 1.0, 10_000 + s))
        tr, te = T.slice(0, n_tr), T.slice(n_tr, n_tr + n_te)
        fast = detect(tr, te, DetectionConfig(m=m, refine=True, plan=identity_plan(tr.names, s)))
        ex = exact_discord(tr, te, m)
        if (fast.i_star, fast.j_star) != (ex.i_star, ex.j_star) or abs(fast.score - ex.score) > 1e-6:
            bad.append(s)
    secs = time.perf_counter() - t0
    ok = not bad and secs < 60
    verdict("2 degenerate-sketch equivalence", ok, f"{50 - len(bad)}/50 identical, {secs:.1f}s")
    assert ok


def test_criterion_3_success_rate_and_speedup():
    t0 = time.perf_counter()
    res = ev.success_rate_experiment([250], n=10_000, m=100, trials=100, threshold=0.001,
                                     seed=1, k=16, refine=True)[250]
    secs = time.perf_counter() - t0
    ok = res["success_rate"] >= 0.90 and res["mean_speedup"] >= 5.0
    verdict("3 desk-scale success rate", ok,
            f"success {res['success_rate']:.2f} (need >= 0.90), speedup "
            f"{res['mean_speedup']:.1f}x (need >= 5), median rank fraction "
            f"{res['median_rank_fraction']:.2e}, {secs / 60:.1f} min")
    assert ok


def test_criterion_4_estimator():
    t0 = time.perf_counter()
    r = ev.estimator_suite(d=64, k=8, trials=10_000, probes=20, seed=4)
    secs = time.perf_counter() - t0
    ratios = [p["var"] / p["target_var"] for p in r["probes"]]
    ok = r["passed"] and secs < 60
    verdict("4 point-estimate mean/variance", ok,
            f"means ok {sum(p['mean_ok'] for p in r['probes'])}/20, variance ratio "
            f"{min(ratios):.3f}..{max(ratios):.3f}, {secs:.1f}s")
    assert ok


def test_criterion_5_chebyshev():
    t0 = time.perf_counter()
    rows = [ev.chebyshev_suite(delta, d=256, k=16, m=64, seeds=400, seed=5) for delta in (0.25, 0.5)]
    secs = time.perf_counter() - t0
    ok = all(r["passed"] for r in rows) and secs < 300
    verdict("5 detection threshold bound", ok,
            ", ".join(f"delta={r['delta']}: miss {r['miss_rate']:.3f} <= {r['bound']:.3f}"
                      for r in rows) + f", {secs:.1f}s")
    assert ok


def test_criterion_6_periodic():
    t0 = time.perf_counter()
    r = ev.periodic_suite(eta=0.05, period=48, num_periods=20, d=32, seeds=50, seed=6)
    secs = time.perf_counter() - t0
    ok = r["passed"] and r["delta_norm"] > 8 * r["m"] * 0.05 and secs < 120
    verdict("6 periodic recovery", ok,
            f"detection rate {r['detection_rate']:.2f} (need >= 0.95), |delta| "
            f"{r['delta_norm']:.1f} > {8 * r['m'] * 0.05:.1f}, {secs:.1f}s")
    assert ok


def test_criterion_7_linearity():
    t0 = time.perf_counter()
    err_split = err_roundtrip = err_incr = 0.0
    for s in range(100):
        rng = np.random.default_rng([7, s])
        d = int(rng.integers(2, 30))
        T = gen_random_walk(WalkConfig(d, int(rng.integers(20, 300)), 1.0, s))
        plan = make_plan(T.names, int(rng.integers(1, 8)), s)
        full = sketch(T, plan)
        mask = rng.random(d) < 0.5
        A = [nm for nm, b in zip(T.names, mask) if b]
        B = [nm for nm, b in zip(T.names, mask) if not b]
        parts = np.zeros_like(full.groups)
        for part in (A, B):
            if part:
                parts += sketch(T.select(part), plan.subset(part)).groups
        err_split = max(err_split, float(np.max(np.abs(full.groups - parts))))
        nm = T.names[int(rng.integers(d))]
        extra = np.cumsum(rng.normal(size=T.n))
        back = delete_dimension(add_dimension(full, "extra", extra), "extra", extra)
        err_roundtrip = max(err_roundtrip, float(np.max(np.abs(back.groups - full.groups))))
        r = sketch(T.select([nm]), plan.subset([nm]))
        for other in T.names:
            if other != nm:
                r = add_dimension(r, other, T[other])
        err_incr = max(err_incr, float(np.max(np.abs(r.groups - full.groups))))
    secs = time.perf_counter() - t0
    ok = max(err_split, err_roundtrip, err_incr) <= 1e-12 and secs < 30
    verdict("7 sketch linearity and updates", ok,
            f"split {err_split:.1e}, add/delete {err_roundtrip:.1e}, incremental "
            f"{err_incr:.1e}, {secs:.1f}s")
    assert ok


def test_criterion_8_auc():
    t0 = time.perf_counter()
    worst = 0.0
    for s in range(500):
        rng = np.random.default_rng([8, s])
        n = int(rng.integers(2, 300))
        if s % 2:
            scores = rng.integers(0, int(rng.integers(2, 10)), n).astype(float)
        else:
            scores = rng.normal(size=n)
        labels = rng.integers(0, 2, n)
        labels[0], labels[1] = 0, 1
        worst = max(worst, abs(ev.roc_auc(scores, labels) - trapezoid_auc(scores, labels)))
    perfect = ev.roc_auc(np.arange(100.0), (np.arange(100) >= 60).astype(int))
    secs = time.perf_counter() - t0
    ok = worst <= 1e-9 and perfect == 1.0 and secs < 10
    verdict("8 AUC correctness", ok, f"max diff {worst:.1e}, perfect split {perfect}, {secs:.1f}s")
    assert ok


def test_criterion_9_noise_robustness():
    t0 = time.perf_counter()
    r = ev.noise_robustness_suite(seeds=25, d=20, extra=200, seed=9)
    secs = time.perf_counter() - t0
    ok = r["passed"] and secs < 300
    verdict("9 robustness to added noise dimensions", ok,
            f"j* unchanged in {r['unchanged_rate']:.2f} (need >= 0.80), {secs:.1f}s")
    assert ok
