import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from discord_sketch import evaluation as ev
from discord_sketch.datagen import WalkConfig, gen_random_walk
from discord_sketch.detection import exact_discord
from discord_sketch.errors import SingleClass, UnknownDimension
from oracles import brute_profile, trapezoid_auc


def _split(d, n, seed):
    return ev.walk_split(d, n, seed)


def test_rank_list_matches_flatten_and_sort():
    tr, te = _split(3, 240, 0)
    rl = ev.build_rank_list(tr, te, 10)
    entries = []
    for nm in tr.names:
        prof, _ = brute_profile(tr[nm], te[nm], 10)
        entries += [((i, nm), s) for i, s in enumerate(prof)]
    entries.sort(key=lambda e: (-e[1], tr.names.index(e[0][1]), e[0][0]))
    assert len(rl) == len(entries) == 3 * 111
    for r in range(len(entries)):
        (i, nm), s = rl.entry(r)
        assert (i, nm) == entries[r][0]
        assert s == pytest.approx(entries[r][1], abs=1e-6)
    assert np.all(np.diff(rl.scores) <= 0)


def test_rank_list_head_is_exact_discord():
    tr, te = _split(5, 400, 1)
    rl = ev.build_rank_list(tr, te, 16)
    ex = exact_discord(tr, te, 16)
    (i, nm), s = rl.entry(0)
    assert (i, nm, s) == (ex.i_star, ex.j_star, ex.score)
    assert rl.rank_of(nm, i) == 1


def test_single_entry_rank_list():
    tr, te = _split(1, 40, 2)
    rl = ev.build_rank_list(tr, te.slice(0, 8), 8)
    assert len(rl) == 1


def test_threshold_one_is_always_success():
    res = ev.success_rate_experiment([6], 400, 16, 3, 1.0, seed=1, k=2, refine=False)
    assert res[6]["success_rate"] == 1.0


def test_identity_hook_is_always_rank_one():
    res = ev.success_rate_experiment([5], 400, 16, 4, 1 / (5 * 185), seed=2, identity=True)
    assert res[5]["success_rate"] == 1.0
    assert all(t["rank_fraction"] * (5 * 185) == 1 for t in res[5]["trials"])


def test_success_experiment_reproducible_except_timings():
    a = ev.success_rate_experiment([8], 500, 20, 3, 0.01, seed=5)
    b = ev.success_rate_experiment([8], 500, 20, 3, 0.01, seed=5)
    strip = lambda r: [{k: v for k, v in t.items() if not k.endswith("_ms")} for t in r[8]["trials"]]
    assert strip(a) == strip(b)
    with pytest.raises(ValueError):
        ev.success_rate_experiment([8], 500, 20, 3, 0.0, seed=5)


def test_score_density_properties():
    T = gen_random_walk(WalkConfig(30, 1200, 1.0, 4))
    tr, te = T.slice(0, 600), T.slice(600, 1200)
    res = ev.score_density(tr, te, 32, trials=8, seed=3)
    assert res["all"].count == 30 * (600 - 31)
    assert res["exact"].count == res["sketched"].count == 8
    assert res["all"].mean < res["exact"].mean
    assert res["sketched"].max <= res["exact"].mean + 1e-12
    assert sum(res["all"].hist_counts) == res["all"].count
    rows = ev.density_csv_rows(res)
    assert len(rows) == 40


def test_density_identity_case_coincides(monkeypatch):
    # with one dimension every sketched pick is the exact pick
    tr, te = _split(1, 500, 6)
    res = ev.score_density(tr, te, 20, trials=4, seed=0, refine=True)
    assert res["sketched"].hist_counts == res["exact"].hist_counts
    assert res["exact_deviation_sd"] == 0.0


def test_anomaly_scores():
    tr, te = _split(2, 200, 7)
    sc = ev.anomaly_scores(tr, te, "d1", 12)
    prof, _ = brute_profile(tr["d1"], te["d1"], 12)
    assert np.allclose(sc, prof, atol=1e-6)
    with pytest.raises(UnknownDimension):
        ev.anomaly_scores(tr, te, "nope", 12)


def test_auc_basics():
    assert ev.roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert ev.roc_auc([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]) == 0.0
    assert ev.roc_auc([1, 1, 1, 1], [0, 1, 0, 1]) == 0.5
    with pytest.raises(SingleClass):
        ev.roc_auc([1, 2, 3], [1, 1, 1])


def test_auc_null_case():
    rng = np.random.default_rng(0)
    n = 20000
    auc = ev.roc_auc(rng.normal(size=n), rng.integers(0, 2, n))
    se = np.sqrt((n + 1) / (12 * (n / 2) ** 2))
    assert abs(auc - 0.5) < 3 * se


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 200), st.booleans())
def test_auc_matches_trapezoid_and_is_rank_invariant(seed, n, ties):
    rng = np.random.default_rng(seed)
    scores = rng.integers(0, 5, n).astype(float) if ties else rng.normal(size=n)
    labels = rng.integers(0, 2, n)
    labels[0], labels[-1] = 0, 1
    auc = ev.roc_auc(scores, labels)
    assert abs(auc - trapezoid_auc(scores, labels)) < 1e-9
    assert ev.roc_auc(np.exp(scores) * 3 + 1, labels) == auc


def test_window_labels():
    assert ev.window_labels([0, 0, 1, 0, 0, 0], 2).tolist() == [0, 1, 1, 0, 0]


def test_estimator_identity_has_no_collision_variance():
    r = ev.estimator_suite(d=16, trials=500, probes=5, identity=True)
    assert r["passed"] and all(p["var"] < 1e-20 for p in r["probes"])


def test_estimator_small():
    r = ev.estimator_suite(d=32, k=4, trials=3000, probes=6, seed=3)
    assert r["passed"], r["probes"]


def test_chebyshev_tau():
    assert ev.chebyshev_tau(0.25, 64, 256) == pytest.approx(64 * 4 / 0.5)
