"""Experiment harness: rank lists, success rate and speedup, score
densities, anomaly scoring with ROC-AUC, and statistical checks of the
sketch's estimator and detection bounds."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from .count_sketch import (
    add_dimension,
    auto_k,
    hash_assignment,
    identity_plan,
    make_plan,
    sketch,
    sketch_pair,
)
from .datagen import (
    PeriodicConfig,
    PlantSpec,
    WalkConfig,
    gen_periodic,
    gen_random_walk,
    plant_discord,
)
from .detection import (
    DetectionConfig,
    detect,
    detect_from_sketches,
    exact_discord,
)
from .errors import SingleClass, UnknownDimension
from .matrix_profile import ab_join
from .timeseries import MultiSeries, global_stats


def derive_seed(*parts: int) -> int:
    """Stable 32-bit seed from integer parts (per trial, per dimension...)."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


# ---------------------------------------------------------------- rank list

@dataclass
class RankList:
    """All (window, dimension) discord scores, best first.

    ``profiles`` is the ``d x L`` score matrix in dimension order; ``order``
    sorts its flattened entries by descending score, then dimension, then
    window.
    """

    names: tuple[str, ...]
    profiles: np.ndarray
    order: np.ndarray

    def __len__(self):
        return self.profiles.size

    @property
    def scores(self) -> np.ndarray:
        return self.profiles.ravel()[self.order]

    def entry(self, r: int) -> tuple[tuple[int, str], float]:
        """The ``r``-th entry (0-based) as ``((i, name), score)``."""
        flat = int(self.order[r])
        j, i = divmod(flat, self.profiles.shape[1])
        return (i, self.names[j]), float(self.profiles[j, i])

    def head(self, n: int = 10):
        return [self.entry(r) for r in range(min(n, len(self)))]

    def rank_of(self, name: str, i: int) -> int:
        """1-based rank of window ``i`` of ``name``: one plus the number of
        strictly higher scores."""
        s = self.profiles[self.names.index(name), i]
        return 1 + int(np.count_nonzero(self.profiles > s))

    def rank_fraction(self, name: str, i: int) -> float:
        return self.rank_of(name, i) / len(self)


def rank_list_from_profiles(names, profiles: dict) -> RankList:
    P = np.vstack([profiles[nm].profile for nm in names])
    L = P.shape[1]
    jj, ii = np.divmod(np.arange(P.size), L)
    order = np.lexsort((ii, jj, -P.ravel()))
    return RankList(tuple(names), P, order)


def build_rank_list(t_train: MultiSeries, t_test: MultiSeries, m: int,
                    n_jobs: int = 1) -> RankList:
    profiles = {}
    exact_discord(t_train, t_test, m, n_jobs=n_jobs, profiles=profiles)
    return rank_list_from_profiles(t_train.names, profiles)


# ------------------------------------------------------ success/speedup

@dataclass
class TrialOutcome:
    trial: int
    success: bool
    rank_fraction: float
    fast_ms: float
    exact_ms: float
    i_star: int
    j_star: str
    exact_i: int
    exact_j: str
    fast_score: float
    exact_score: float
    refined: bool

    @property
    def speedup(self) -> float:
        return self.exact_ms / self.fast_ms if self.fast_ms > 0 else math.inf


def walk_split(d: int, n: int, seed: int, train_fraction: float = 0.5):
    """One random walk per dimension, cut into a train and a test part."""
    T = gen_random_walk(WalkConfig(d, n, 1.0, seed))
    cut = int(round(n * train_fraction))
    return T.slice(0, cut), T.slice(cut, n)


def run_trial(t_train, t_test, m, threshold, cfg: DetectionConfig,
              trial: int = 0) -> TrialOutcome:
    """Time the sketched and exact pipelines on one dataset and rank the
    sketched pick among all (window, dimension) scores."""
    profiles = {}
    ex = exact_discord(t_train, t_test, m, n_jobs=cfg.n_jobs, profiles=profiles)
    t0 = time.perf_counter()
    fast = detect(t_train, t_test, cfg)
    fast_ms = 1000.0 * (time.perf_counter() - t0)
    ranks = rank_list_from_profiles(t_train.names, profiles)
    frac = ranks.rank_fraction(fast.j_star, fast.i_star)
    return TrialOutcome(
        trial=trial, success=frac <= threshold, rank_fraction=frac,
        fast_ms=fast_ms, exact_ms=ex.timings["exact_ms"], i_star=fast.i_star,
        j_star=fast.j_star, exact_i=ex.i_star, exact_j=ex.j_star,
        fast_score=fast.score, exact_score=ex.score, refined=fast.refined)


def success_rate_experiment(grid: Sequence[int], n: int, m: int, trials: int,
                            threshold: float, seed: int, k: int = 0,
                            refine: bool = True, identity: bool = False,
                            n_jobs: int = 1,
                            progress: Callable | None = None) -> dict:
    """Success rate and mean speedup of the sketched detector per ``d``.

    Every trial draws fresh random walks (length ``n``, first half train,
    second half test) and a fresh hash seed. A trial succeeds when the
    sketched pick ranks within the top ``threshold`` fraction of all scores.
    """
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    out = {}
    for d in grid:
        outcomes = []
        for t in range(trials):
            t_train, t_test = walk_split(d, n, derive_seed(seed, d, t, 0))
            hash_seed = derive_seed(seed, d, t, 1)
            plan = identity_plan(t_train.names, hash_seed) if identity else None
            cfg = DetectionConfig(m=m, k=k, seed=hash_seed, refine=refine,
                                  n_jobs=n_jobs, plan=plan)
            oc = run_trial(t_train, t_test, m, threshold, cfg, trial=t)
            outcomes.append(oc)
            if progress is not None:
                progress(d, oc)
        out[d] = {
            "d": d,
            "k": len(t_train.names) if identity else (k or auto_k(d)),
            "success_rate": float(np.mean([o.success for o in outcomes])),
            "mean_speedup": float(np.mean([o.speedup for o in outcomes])),
            "median_rank_fraction": float(np.median([o.rank_fraction for o in outcomes])),
            "refined": refine,
            "trials": [asdict(o) for o in outcomes],
        }
    return out


# ---------------------------------------------------------- score density

@dataclass
class ScoreDistribution:
    label: str
    count: int
    mean: float
    std: float
    min: float
    max: float
    quantiles: dict
    hist_edges: list
    hist_counts: list

    @classmethod
    def of(cls, label, values, edges):
        v = np.asarray(values, dtype=float)
        counts, _ = np.histogram(v, bins=edges)
        q = {str(p): float(np.quantile(v, p)) for p in (0.05, 0.25, 0.5, 0.75, 0.95)}
        return cls(label, int(v.size), float(v.mean()), float(v.std()),
                   float(v.min()), float(v.max()), q, list(map(float, edges)),
                   counts.tolist())


def score_density(t_train: MultiSeries, t_test: MultiSeries, m: int, trials: int,
                  seed: int, k: int = 0, refine: bool = False, bins: int = 40,
                  n_jobs: int = 1) -> dict:
    """Score distributions of all windows, exact discords and sketched
    discords (one per hash seed) on fixed data."""
    profiles = {}
    ex = exact_discord(t_train, t_test, m, n_jobs=n_jobs, profiles=profiles)
    all_scores = np.concatenate([profiles[nm].profile for nm in t_train.names])
    sketched = []
    for t in range(trials):
        cfg = DetectionConfig(m=m, k=k, seed=derive_seed(seed, t), refine=refine,
                              n_jobs=n_jobs)
        sketched.append(detect(t_train, t_test, cfg).score)
    exact_scores = np.full(trials, ex.score)
    edges = np.histogram_bin_edges(
        np.concatenate([all_scores, sketched, [ex.score]]), bins=bins)
    sk = np.asarray(sketched)
    sd = sk.std()
    deviation = float((ex.score - sk.mean()) / sd) if sd > 0 else (
        0.0 if ex.score == sk.mean() else math.inf)
    return {
        "all": ScoreDistribution.of("all", all_scores, edges),
        "exact": ScoreDistribution.of("exact", exact_scores, edges),
        "sketched": ScoreDistribution.of("sketched", sk, edges),
        "exact_deviation_sd": deviation,
    }


def density_csv_rows(dists: dict) -> list[list]:
    """Histogram rows ``[lo, hi, all, exact, sketched]`` for CSV export."""
    a, e, s = dists["all"], dists["exact"], dists["sketched"]
    edges = a.hist_edges
    return [[edges[b], edges[b + 1], a.hist_counts[b], e.hist_counts[b], s.hist_counts[b]]
            for b in range(len(edges) - 1)]


# ------------------------------------------------------- anomaly scoring

@dataclass
class LabeledScores:
    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        self.labels = np.asarray(self.labels).astype(int)
        if self.scores.shape != self.labels.shape or self.scores.ndim != 1:
            raise ValueError("scores and labels must be 1-D and equally long")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")


def anomaly_scores(t_train: MultiSeries, t_test: MultiSeries, j: str, m: int,
                   n_jobs: int = 1) -> np.ndarray:
    """Per-window anomaly score of dimension ``j``: its AB-join profile."""
    if j not in t_train or j not in t_test:
        raise UnknownDimension(f"unknown dimension {j!r}")
    return ab_join(t_train[j], t_test[j], m, n_jobs=n_jobs).profile


def roc_auc(ls: LabeledScores | Sequence, labels: Sequence | None = None) -> float:
    """Probability that a random positive outscores a random negative (ties
    count one half), via the Mann-Whitney rank sum with average ranks."""
    if not isinstance(ls, LabeledScores):
        ls = LabeledScores(ls, labels)
    pos = ls.labels == 1
    n_pos = int(pos.sum())
    n_neg = ls.labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both positive and negative labels")
    ranks = rankdata(ls.scores, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def window_labels(point_labels, m: int) -> np.ndarray:
    """A window is anomalous if any of its points is."""
    p = np.asarray(point_labels).astype(int)
    return np.lib.stride_tricks.sliding_window_view(p, m).max(axis=1)


# ------------------------------------------------------ statistical suites

def _plan_arrays(names, k, seeds):
    G = np.empty((len(seeds), len(names)), dtype=np.int64)
    S = np.empty((len(seeds), len(names)))
    for t, s in enumerate(seeds):
        for j, nm in enumerate(names):
            G[t, j], S[t, j] = hash_assignment(nm, s, k)
    return G, S


def zscored_walks(d: int, n: int, seed: int) -> MultiSeries:
    T = gen_random_walk(WalkConfig(d, n, 1.0, seed))
    vals = (T.values - T.values.mean(axis=1, keepdims=True)) / T.values.std(axis=1, keepdims=True)
    return MultiSeries(T.names, vals)


def estimator_suite(d: int = 64, k: int = 8, trials: int = 10_000, probes: int = 20,
                 n: int = 200, seed: int = 0, identity: bool = False,
                 var_rtol: float = 0.2) -> dict:
    """Monte-Carlo check that the sketch point estimate is unbiased and has
    variance ``sum_{j' != j} T[j', i]**2 / k`` over random hash choices."""
    T = zscored_walks(d, n, seed)
    X = T.values
    seeds = [derive_seed(seed, 7, t) for t in range(trials)]
    if identity:
        k = d
        G = np.tile(np.arange(d), (trials, 1))
        S = np.array([[hash_assignment(nm, s, 1)[1] for nm in T.names] for s in seeds],
                     dtype=float)
    else:
        G, S = _plan_arrays(T.names, k, seeds)
    rng = np.random.default_rng([seed, 8])
    rows = []
    for _ in range(probes):
        j = int(rng.integers(d))
        i = int(rng.integers(n))
        same = G == G[:, j:j + 1]
        est = S[:, j] * ((same * S) @ X[:, i])
        truth = X[j, i]
        mean = est.mean()
        var = est.var(ddof=1)
        se = math.sqrt(var / trials) if var > 0 else 0.0
        others = np.delete(X[:, i], j)
        target = 0.0 if identity else float(np.sum(others ** 2) / k)
        # small absolute floor absorbs rounding when the variance is ~0
        mean_ok = abs(mean - truth) <= 3 * se + 1e-12
        if identity:
            var_ok = var <= 1e-20
        else:
            var_ok = abs(var / target - 1.0) <= var_rtol
        rows.append({"j": T.names[j], "i": i, "truth": float(truth), "mean": float(mean),
                     "se": se, "var": float(var), "target_var": target,
                     "mean_ok": bool(mean_ok), "var_ok": bool(var_ok)})
    return {
        "suite": "estimator", "d": d, "k": k, "trials": trials,
        "average_target_var": (d - 1) / k if not identity else 0.0,
        "passed": all(r["mean_ok"] and r["var_ok"] for r in rows),
        "probes": rows,
    }


def chebyshev_tau(delta: float, m: int, d: int) -> float:
    """Displacement norm above which detection holds with prob. >= 1 - delta
    at k = sqrt(d)."""
    return m * d ** 0.25 / math.sqrt(delta)


def _detected(rep, start, m, plan, dim):
    return abs(rep.i_star - start) <= m and rep.g_star == plan.group_of(dim)


def chebyshev_suite(delta: float, d: int = 256, k: int = 16, m: int = 64,
                    seeds: int = 400, seed: int = 0, factor: float = 1.05,
                    shape: str = "bump", period: int = 128, num_periods: int = 8,
                    eta: float = 0.1) -> dict:
    """Miss rate of the sketched time detection for one planted discord of
    norm ``factor * tau(delta)`` on fixed data, over random hash seeds."""
    cfg_data = PeriodicConfig(d=d, period=period, num_periods=num_periods, eta=eta,
                              seed=seed, test_periods=2)
    t_train, t_test = gen_periodic(cfg_data)
    rng = np.random.default_rng([seed, 11])
    dim = t_train.names[int(rng.integers(d))]
    start = int(rng.integers(0, t_test.n - m + 1))
    tau = chebyshev_tau(delta, m, d)
    t_test = plant_discord(t_test, PlantSpec(dim, start, m, factor * tau, shape),
                           stats=global_stats(t_train[dim]))
    misses = 0
    for t in range(seeds):
        plan = make_plan(t_train.names, k, derive_seed(seed, 12, t))
        rep = detect(t_train, t_test, DetectionConfig(m=m, plan=plan))
        misses += not _detected(rep, start, m, plan, dim)
    rate = misses / seeds
    se = math.sqrt(delta * (1 - delta) / seeds)
    return {"suite": "chebyshev", "delta": delta, "tau": tau, "delta_norm": factor * tau,
            "d": d, "k": k, "m": m, "seeds": seeds, "dimension": dim, "start": start,
            "miss_rate": rate, "bound": delta + 3 * se, "passed": rate <= delta + 3 * se}


def periodic_suite(eta: float = 0.05, period: int = 48, num_periods: int = 20,
                   d: int = 32, m: int = 24, c: float = 4.0, factor: float = 1.25,
                   seeds: int = 50, seed: int = 0, k: int = 0,
                   shape: str = "bump", min_rate: float = 0.95) -> dict:
    """Detection rate of a planted discord of norm ``factor * 2*m*eta*c`` on
    noisy periodic data; time within +-m and the right dimension both count."""
    norm = factor * 2 * m * eta * c
    hits = []
    for t in range(seeds):
        s = derive_seed(seed, 21, t)
        cfg = PeriodicConfig(d=d, period=period, num_periods=num_periods, eta=eta,
                             seed=s, test_periods=2)
        t_train, t_test = gen_periodic(cfg)
        rng = np.random.default_rng([s, 22])
        dim = t_train.names[int(rng.integers(d))]
        start = int(rng.integers(0, t_test.n - m + 1))
        t_test = plant_discord(t_test, PlantSpec(dim, start, m, norm, shape),
                               stats=global_stats(t_train[dim]))
        rep = detect(t_train, t_test, DetectionConfig(m=m, k=k, seed=derive_seed(s, 23)))
        hits.append(abs(rep.i_star - start) <= m and rep.j_star == dim)
    rate = float(np.mean(hits))
    return {"suite": "periodic", "eta": eta, "period": period, "d": d, "m": m,
            "delta_norm": norm, "threshold": 2 * m * eta * c, "seeds": seeds,
            "detection_rate": rate, "passed": rate >= min_rate}


def lemma_suite(seed: int = 0, trials: int = 10_000, quick: bool = False) -> dict:
    """All three statistical suites with pass/fail and measured statistics."""
    if quick:
        return {
            "estimator": estimator_suite(trials=min(trials, 2000), seed=seed),
            "chebyshev": [chebyshev_suite(dl, seeds=60, seed=seed) for dl in (0.25, 0.5)],
            "periodic": periodic_suite(seeds=20, seed=seed),
        }
    return {
        "estimator": estimator_suite(trials=trials, seed=seed),
        "chebyshev": [chebyshev_suite(dl, seed=seed) for dl in (0.25, 0.5)],
        "periodic": periodic_suite(seed=seed),
    }


# ------------------------------------------------------ noise robustness

def noise_robustness_suite(seeds: int = 25, d: int = 20, extra: int = 200,
                           n_train: int = 2000, n_test: int = 1000, m: int = 64,
                           delta_norm: float = 40.0, shape: str = "burst",
                           seed: int = 0, min_rate: float = 0.8) -> dict:
    """Append random-walk dimensions to existing sketches and check that the
    recovered discord dimension stays the same."""
    same = []
    rows = []
    for t in range(seeds):
        s = derive_seed(seed, 31, t)
        T = gen_random_walk(WalkConfig(d, n_train + n_test, 1.0, s))
        t_train, t_test = T.slice(0, n_train), T.slice(n_train, n_train + n_test)
        rng = np.random.default_rng([s, 32])
        dim = t_train.names[int(rng.integers(d))]
        start = int(rng.integers(0, n_test - m + 1))
        t_test = plant_discord(t_test, PlantSpec(dim, start, m, delta_norm, shape),
                               stats=global_stats(t_train[dim]))
        plan = make_plan(t_train.names, 0, derive_seed(s, 33))
        cfg = DetectionConfig(m=m, plan=plan)
        r_train, r_test = sketch_pair(t_train, t_test, plan)
        before = detect_from_sketches(t_train, t_test, r_train, r_test, cfg)[0]

        noise = gen_random_walk(WalkConfig(extra, n_train + n_test, 1.0,
                                           derive_seed(s, 34)), prefix="noise")
        big_train, big_test = t_train, t_test
        for nm in noise.names:
            x = noise[nm]
            r_train = add_dimension(r_train, nm, x[:n_train])
            r_test = add_dimension(r_test, nm, x[n_train:], stats=r_train.stats[nm])
            big_train = big_train.with_dimension(nm, x[:n_train])
            big_test = big_test.with_dimension(nm, x[n_train:])
        after = detect_from_sketches(big_train, big_test, r_train, r_test, cfg)[0]
        same.append(after.j_star == before.j_star)
        rows.append({"planted": dim, "before": before.j_star, "after": after.j_star})
    rate = float(np.mean(same))
    return {"suite": "noise_robustness", "d": d, "extra": extra, "seeds": seeds,
            "unchanged_rate": rate, "passed": rate >= min_rate, "trials": rows}
