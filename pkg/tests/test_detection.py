import numpy as np
import pytest

from discord_sketch.count_sketch import (
    force_positive,
    identity_plan,
    make_plan,
    sketch,
    sketch_pair,
)
from discord_sketch.datagen import PlantSpec, WalkConfig, gen_random_walk, plant_discord
from discord_sketch.detection import (
    DetectionConfig,
    detect,
    detect_top_k,
    dimension_detection,
    exact_discord,
    refine,
    time_detection,
)
from discord_sketch.errors import (
    AllGroupsInert,
    EmptyGroup,
    MissingDimension,
    PlanMismatch,
)
from discord_sketch.matrix_profile import ab_join, self_join, top_discord
from discord_sketch.timeseries import MultiSeries, global_stats, nn_dist
from oracles import brute_exact, brute_profile


def _split(d, n_train, n_test, seed):
    T = gen_random_walk(WalkConfig(d, n_train + n_test, 1.0, seed))
    return T.slice(0, n_train), T.slice(n_train, n_train + n_test)


def test_exact_matches_triple_loop():
    tr, te = _split(4, 150, 150, 1)
    rep = exact_discord(tr, te, 12)
    s, i, nm = brute_exact(tr.values, te.values, tr.names, 12)
    assert (rep.i_star, rep.j_star) == (i, nm)
    assert rep.score == pytest.approx(s, abs=1e-9)


def test_exact_single_dimension():
    tr, te = _split(1, 100, 80, 2)
    rep = exact_discord(tr, te, 10)
    assert (rep.i_star, rep.score) == top_discord(ab_join(tr["d0"], te["d0"], 10))


@pytest.mark.parametrize("seed", range(10))
def test_identity_plan_equals_exact(seed):
    tr, te = _split(7, 200, 160, seed)
    cfg = DetectionConfig(m=16, refine=True, plan=identity_plan(tr.names, seed))
    fast = detect(tr, te, cfg)
    ex = exact_discord(tr, te, 16)
    assert (fast.i_star, fast.j_star) == (ex.i_star, ex.j_star)
    assert fast.score == pytest.approx(ex.score, abs=1e-6)


def test_single_positive_group_finds_time():
    # five dimensions summed with positive signs; the anomaly in the first one
    # must still show up in time
    tr, te = _split(5, 600, 300, 3)
    st = global_stats(tr["d0"])
    te = plant_discord(te, PlantSpec("d0", 140, 32, 60.0, "burst"), stats=st)
    plan = force_positive(make_plan(tr.names, 1, 0))
    r_tr, r_te = sketch_pair(tr, te, plan)
    i, g, _ = time_detection(r_tr, r_te, 32)
    assert g == 0 and 140 - 32 <= i <= 140 + 32


def test_planted_anomaly_recovered_most_seeds():
    hits = 0
    seeds = 50
    for s in range(seeds):
        tr, te = _split(20, 1000, 500, 100 + s)
        rng = np.random.default_rng(s)
        dim = tr.names[rng.integers(20)]
        start = int(rng.integers(0, 500 - 32))
        te = plant_discord(te, PlantSpec(dim, start, 32, 40.0, "burst"),
                           stats=global_stats(tr[dim]))
        plan = make_plan(tr.names, 5, s)
        rep = detect(tr, te, DetectionConfig(m=32, plan=plan))
        hits += abs(rep.i_star - start) <= 32 and rep.g_star == plan.group_of(dim) \
            and rep.j_star == dim
    assert hits / seeds >= 0.9


def test_report_invariants_and_score_soundness():
    tr, te = _split(16, 300, 200, 5)
    for refine_flag in (False, True):
        rep = detect(tr, te, DetectionConfig(m=20, seed=4, refine=refine_flag))
        plan = make_plan(tr.names, 0, 4)
        assert rep.j_star in plan.members(rep.g_star)
        assert 0 <= rep.i_star <= te.n - 20
        s, _ = nn_dist(te[rep.j_star][rep.i_star:rep.i_star + 20], tr[rep.j_star], 20)
        assert s == pytest.approx(rep.score, abs=1e-6)
        assert set(rep.timings) == {"sketch_ms", "phase1_ms", "phase2_ms", "refine_ms"}


def test_refine_is_monotone_and_matches_oracle():
    for seed in range(20):
        tr, te = _split(6, 120, 90, 50 + seed)
        plain = detect(tr, te, DetectionConfig(m=10, seed=seed))
        ref = detect(tr, te, DetectionConfig(m=10, seed=seed, refine=True))
        assert ref.score >= plain.phase2_score - 1e-12
        prof, _ = brute_profile(tr[ref.j_star], te[ref.j_star], 10)
        assert ref.score == pytest.approx(prof.max(), abs=1e-9)
        assert ref.i_star == int(np.argmax(prof))


def test_refine_idempotent_at_argmax():
    tr, te = _split(1, 150, 100, 9)
    i, s = refine(tr, te, "d0", 12)
    assert (i, s) == top_discord(ab_join(tr["d0"], te["d0"], 12))


def test_dimension_detection_picks_novel_dimension():
    rng = np.random.default_rng(7)
    m = 16
    copy = np.cumsum(rng.normal(size=200))
    fresh_train = np.cumsum(rng.normal(size=200))
    tr = MultiSeries(("a", "b", "c"), np.vstack([copy, fresh_train, np.sin(np.arange(200) / 5)]))
    win = MultiSeries(("a", "b", "c"), np.vstack([
        copy[50:50 + m], np.cumsum(rng.normal(size=m)), np.sin(np.arange(m) / 5)]))
    j, s = dimension_detection(tr, win, m, ["a", "b", "c"])
    scores = {nm: min(brute_profile(tr[nm], win[nm], m)[0][0], 1e9) for nm in "abc"}
    assert j == max(scores, key=scores.get) == "b"
    assert s == pytest.approx(scores["b"], abs=1e-9)
    assert dimension_detection(tr, win, m, ["c"])[0] == "c"
    with pytest.raises(EmptyGroup):
        dimension_detection(tr, win, m, [])


def test_self_mode_matches_exact_self_join():
    rng = np.random.default_rng(11)
    n, m = 600, 24
    base = np.sin(np.arange(n) * 2 * np.pi / 40)
    vals = np.vstack([base + 0.01 * rng.normal(size=n), np.roll(base, 7) + 0.01 * rng.normal(size=n)])
    vals[1, 300:324] += np.hanning(24) * 1.5
    T = MultiSeries(("x", "y"), vals)
    ex = exact_discord(T, None, m, mode="self")
    fast = detect(T, None, DetectionConfig(m=m, mode="self", refine=True,
                                           plan=identity_plan(T.names)))
    assert (fast.i_star, fast.j_star) == (ex.i_star, ex.j_star) and ex.j_star == "y"
    assert abs(ex.i_star - 300) <= m
    i, s = top_discord(self_join(T["y"], m))
    assert (ex.i_star, ex.score) == (i, s)


def test_top_k_reports():
    tr, te = _split(9, 300, 300, 13)
    reps = detect_top_k(tr, te, DetectionConfig(m=20, seed=1), top_k=3)
    assert len(reps) == 3
    scores = [r.sketched_score for r in reps]
    assert scores == sorted(scores, reverse=True)
    assert detect_top_k(tr, te, DetectionConfig(m=20, seed=1), top_k=1)[0].i_star == reps[0].i_star


def test_deterministic_across_workers():
    tr, te = _split(10, 1500, 1200, 17)
    a = detect(tr, te, DetectionConfig(m=30, seed=3, refine=True, n_jobs=1))
    b = detect(tr, te, DetectionConfig(m=30, seed=3, refine=True, n_jobs=3))
    assert (a.i_star, a.g_star, a.j_star, a.score) == (b.i_star, b.g_star, b.j_star, b.score)


def test_errors():
    tr, te = _split(4, 100, 100, 0)
    r1 = sketch(tr, make_plan(tr.names, 2, 0))
    r2 = sketch(te, make_plan(tr.names, 2, 1), r1.stats)
    with pytest.raises(PlanMismatch):
        time_detection(r1, r2, 10)
    with pytest.raises(MissingDimension):
        exact_discord(tr, te.select(["d0"]), 10)
    flat = MultiSeries(("a",), np.vstack([np.arange(50.0)]))
    plan = make_plan(["a"], 1, 0)
    r = sketch(flat, plan)
    with pytest.raises(AllGroupsInert):
        time_detection(r, sketch(flat.slice(0, 30), plan, r.stats).__class__(
            np.zeros((1, 30)), plan, r.stats), 8)
    with pytest.raises(ValueError):
        DetectionConfig(m=3)
    with pytest.raises(ValueError):
        DetectionConfig(m=8, top_k=0)
