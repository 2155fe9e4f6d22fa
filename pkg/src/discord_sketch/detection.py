"""Sketched two-phase discord detection and the exact per-dimension baseline.

Phase 1 runs one matrix-profile join per sketched group and keeps the
group whose top discord scores highest; phase 2 looks only at the
dimensions of that group, at the window phase 1 found. An optional
refinement joins the recovered dimension over the whole test series.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .count_sketch import (
    SketchPlan,
    SketchedSeries,
    make_plan,
    sketch,
    sketch_pair,
)
from .errors import (
    AllGroupsInert,
    EmptyGroup,
    MissingDimension,
    PlanMismatch,
    SeriesTooShort,
    UnknownDimension,
)
from .matrix_profile import (
    ProfileResult,
    ab_join,
    default_exclusion,
    self_join,
    top_discord,
    top_k_discords,
)
from .timeseries import MultiSeries, nn_dist


@dataclass
class DetectionConfig:
    m: int
    k: int = 0  # 0 = ceil(sqrt(d))
    seed: int = 0
    refine: bool = False
    mode: str = "ab"
    top_k: int = 1
    n_jobs: int = 1
    plan: SketchPlan | None = None  # overrides k/seed when given

    def __post_init__(self):
        if self.m < 4:
            raise ValueError(f"m must be >= 4, got {self.m}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.mode not in ("ab", "self"):
            raise ValueError(f"mode must be 'ab' or 'self', got {self.mode!r}")
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")


@dataclass
class DiscordReport:
    i_star: int
    g_star: int | None
    j_star: str
    score: float
    refined: bool = False
    k: int | None = None
    seed: int | None = None
    m: int | None = None
    mode: str = "ab"
    sketched_score: float | None = None
    phase2_index: int | None = None
    phase2_score: float | None = None
    inert_groups: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def total_ms(self) -> float:
        return float(sum(self.timings.values()))


def _ms(t0):
    return 1000.0 * (time.perf_counter() - t0)


def _join(train, test, m, mode, n_jobs):
    if mode == "self":
        return self_join(train, m, default_exclusion(m), n_jobs=n_jobs)
    return ab_join(train, test, m, n_jobs=n_jobs)


def group_profiles(r_train: SketchedSeries, r_test: SketchedSeries, m: int,
                   mode: str = "ab", n_jobs: int = 1):
    """Matrix profile of every non-inert group, plus the inert group ids."""
    if r_train.plan != r_test.plan:
        raise PlanMismatch("train and test sketches use different plans")
    if r_train.n < m or r_test.n < m:
        raise SeriesTooShort(f"sketch lengths {r_train.n}/{r_test.n} < m={m}")
    inert = sorted(set(r_train.inert_groups()) | set(r_test.inert_groups()))
    profiles = {}
    for g in range(r_train.k):
        if g in inert:
            continue
        profiles[g] = _join(r_train.groups[g], r_test.groups[g], m, mode, n_jobs)
    if not profiles:
        raise AllGroupsInert("every sketched group is empty or constant")
    return profiles, inert


def time_detection(r_train: SketchedSeries, r_test: SketchedSeries, m: int,
                   mode: str = "ab", n_jobs: int = 1) -> tuple[int, int, float]:
    """Time index, group and sketched score of the strongest group discord."""
    profiles, _ = group_profiles(r_train, r_test, m, mode, n_jobs)
    return _best_group(profiles)


def _best_group(profiles: dict[int, ProfileResult]):
    best = None
    for g in sorted(profiles):
        i, s = top_discord(profiles[g])
        if best is None or s > best[2]:
            best = (i, g, s)
    return best


def dimension_detection(t_train: MultiSeries, t_test_window: MultiSeries, m: int,
                        group: Sequence[str],
                        exclude: tuple[int, int] | None = None) -> tuple[str, float]:
    """Which member of ``group`` makes the test window most anomalous.

    ``t_test_window`` holds exactly the length-``m`` window for (at least)
    the group's dimensions. ``exclude`` is the trivial-match zone for
    self-joins.
    """
    if not group:
        raise EmptyGroup("group has no dimensions")
    if t_test_window.n != m:
        raise ValueError(f"test window has length {t_test_window.n}, expected {m}")
    best_name, best = None, -1.0
    for nm in sorted(group):
        if nm not in t_train or nm not in t_test_window:
            raise UnknownDimension(f"dimension {nm!r} missing from data")
        s, _ = nn_dist(t_test_window[nm], t_train[nm], m, exclude)
        if s > best:
            best_name, best = nm, s
    return best_name, best


def refine(t_train: MultiSeries, t_test: MultiSeries, j_star: str, m: int,
           mode: str = "ab", n_jobs: int = 1) -> tuple[int, float]:
    """Top discord of dimension ``j_star`` over the whole test series."""
    if j_star not in t_train or j_star not in t_test:
        raise UnknownDimension(f"dimension {j_star!r} missing from data")
    prof = _join(t_train[j_star], t_test[j_star], m, mode, n_jobs)
    return top_discord(prof)


def exact_discord(t_train: MultiSeries, t_test: MultiSeries | None, m: int,
                  mode: str = "ab", n_jobs: int = 1,
                  profiles: dict | None = None) -> DiscordReport:
    """Brute-force multidimensional discord: one join per dimension.

    Pass a dict as ``profiles`` to collect the per-dimension results.
    """
    t_test = t_train if mode == "self" else t_test
    _check_dims(t_train, t_test)
    t0 = time.perf_counter()
    best = None
    for nm in t_train.names:
        prof = _join(t_train[nm], t_test[nm], m, mode, n_jobs)
        if profiles is not None:
            profiles[nm] = prof
        i, s = top_discord(prof)
        if best is None or s > best[2]:
            best = (i, nm, s)
    i, nm, s = best
    return DiscordReport(i_star=i, g_star=None, j_star=nm, score=s, refined=False,
                         m=m, mode=mode, timings={"exact_ms": _ms(t0)})


def _check_dims(t_train, t_test):
    if set(t_train.names) != set(t_test.names):
        missing = sorted(set(t_train.names) ^ set(t_test.names))
        raise MissingDimension(f"train/test dimensions differ: {missing[:5]}")


def _recover(t_train, t_test, cfg, plan, i, g, sketched_score, inert, timings):
    m = cfg.m
    exclude = None
    if cfg.mode == "self":
        r = default_exclusion(m)
        exclude = (i - r, i + r)
    t0 = time.perf_counter()
    members = plan.members(g)
    window = t_test.select(members).slice(i, i + m)
    j, s2 = dimension_detection(t_train, window, m, members, exclude)
    timings = dict(timings, phase2_ms=_ms(t0), refine_ms=0.0)
    report = DiscordReport(
        i_star=i, g_star=g, j_star=j, score=s2, refined=False, k=plan.k,
        seed=plan.seed, m=m, mode=cfg.mode, sketched_score=sketched_score,
        phase2_index=i, phase2_score=s2, inert_groups=list(inert), timings=timings)
    if cfg.refine:
        t0 = time.perf_counter()
        ri, rs = refine(t_train, t_test, j, m, cfg.mode, cfg.n_jobs)
        report.timings["refine_ms"] = _ms(t0)
        report.i_star, report.score, report.refined = ri, rs, True
    return report


def _sketch_phase(t_train, t_test, cfg):
    t0 = time.perf_counter()
    plan = cfg.plan if cfg.plan is not None else make_plan(t_train.names, cfg.k, cfg.seed)
    if cfg.mode == "self":
        r_train = r_test = sketch(t_train, plan)
    else:
        r_train, r_test = sketch_pair(t_train, t_test, plan)
    return plan, r_train, r_test, _ms(t0)


def detect(t_train: MultiSeries, t_test: MultiSeries | None,
           cfg: DetectionConfig) -> DiscordReport:
    """Sketch, locate the discord time and group, then recover the dimension."""
    return detect_top_k(t_train, t_test, cfg, top_k=1)[0]


def detect_top_k(t_train: MultiSeries, t_test: MultiSeries | None,
                 cfg: DetectionConfig, top_k: int | None = None) -> list[DiscordReport]:
    """Up to ``top_k`` discords in descending sketched score."""
    if cfg.mode == "self":
        t_test = t_train
    _check_dims(t_train, t_test)
    plan, r_train, r_test, sketch_ms = _sketch_phase(t_train, t_test, cfg)
    return detect_from_sketches(t_train, t_test, r_train, r_test, cfg, top_k,
                                sketch_ms=sketch_ms)


def detect_from_sketches(t_train: MultiSeries, t_test: MultiSeries | None,
                         r_train: SketchedSeries, r_test: SketchedSeries,
                         cfg: DetectionConfig, top_k: int | None = None,
                         sketch_ms: float = 0.0) -> list[DiscordReport]:
    """Run both detection phases on sketches that already exist.

    Useful after dynamic updates (added or deleted dimensions). Candidates
    for ``top_k > 1`` come from greedy masking (radius ceil(m/2)) of each
    group's profile; each candidate then gets its own dimension recovery.
    """
    top_k = cfg.top_k if top_k is None else top_k
    if cfg.mode == "self":
        t_test = t_train
    plan = r_train.plan
    t0 = time.perf_counter()
    profiles, inert = group_profiles(r_train, r_test, cfg.m, cfg.mode, cfg.n_jobs)
    if top_k == 1:
        i, g, s = _best_group(profiles)
        candidates = [(i, g, s)]
    else:
        radius = default_exclusion(cfg.m)
        candidates = []
        for g in sorted(profiles):
            candidates += [(i, g, s) for i, s in top_k_discords(profiles[g], top_k, radius)]
        candidates.sort(key=lambda c: (-c[2], c[1], c[0]))
        candidates = candidates[:top_k]
    phase1_ms = _ms(t0)

    timings = {"sketch_ms": sketch_ms, "phase1_ms": phase1_ms}
    return [_recover(t_train, t_test, cfg, plan, i, g, s, inert, timings)
            for i, g, s in candidates]
