"""Count sketch of a multidimensional series into ``k`` signed group sums.

Each dimension gets a group and a sign from a keyed 64-bit hash of its
name, so assignments do not move when other dimensions are added or
removed. The sketch is linear: dimensions and single points can be added
or subtracted after the fact.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    ConstantSeries,
    DuplicateDimension,
    IndexOutOfRange,
    LengthMismatch,
    MissingDimension,
    UnknownDimension,
)
from .timeseries import MultiSeries, as_series, global_stats

_MASK64 = (1 << 64) - 1


def auto_k(d: int) -> int:
    return max(1, math.ceil(math.sqrt(d)))


def hash_assignment(name: str, seed: int, k: int) -> tuple[int, int]:
    """Group in ``[0, k)`` and sign in ``{-1, +1}`` for one dimension."""
    key = (int(seed) & _MASK64).to_bytes(8, "little")
    digest = hashlib.blake2b(name.encode("utf-8"), key=key, digest_size=16).digest()
    group = int.from_bytes(digest[:8], "little") % k
    sign = 1 if digest[8] & 1 else -1
    return group, sign


@dataclass(frozen=True)
class SketchPlan:
    """Group and sign of every dimension, in insertion order."""

    seed: int
    k: int
    assignments: Mapping[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        asg = dict(self.assignments)
        for nm, (g, s) in asg.items():
            if not 0 <= g < self.k or s not in (-1, 1):
                raise ValueError(f"bad assignment for {nm!r}: ({g}, {s})")
        object.__setattr__(self, "assignments", asg)

    @property
    def d(self) -> int:
        return len(self.assignments)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.assignments)

    def group_of(self, name: str) -> int:
        return self._get(name)[0]

    def sign_of(self, name: str) -> int:
        return self._get(name)[1]

    def _get(self, name):
        try:
            return self.assignments[name]
        except KeyError:
            raise UnknownDimension(f"dimension {name!r} is not in the plan") from None

    def members(self, g: int) -> list[str]:
        """The dimensions hashed to group ``g`` (J_g), in plan order."""
        return [nm for nm, (gg, _) in self.assignments.items() if gg == g]

    def groups(self) -> list[list[str]]:
        out = [[] for _ in range(self.k)]
        for nm, (g, _) in self.assignments.items():
            out[g].append(nm)
        return out

    def with_dimension(self, name: str) -> "SketchPlan":
        if name in self.assignments:
            raise DuplicateDimension(f"dimension {name!r} already assigned")
        asg = dict(self.assignments)
        asg[name] = hash_assignment(name, self.seed, self.k)
        return SketchPlan(self.seed, self.k, asg)

    def subset(self, names: Iterable[str]) -> "SketchPlan":
        """The same assignments restricted to ``names``."""
        return SketchPlan(self.seed, self.k, {nm: self._get(nm) for nm in names})

    def without_dimension(self, name: str) -> "SketchPlan":
        self._get(name)
        asg = {nm: v for nm, v in self.assignments.items() if nm != name}
        return SketchPlan(self.seed, self.k, asg)


def make_plan(dim_names: Iterable[str], k: int = 0, seed: int = 0) -> SketchPlan:
    """Hash every dimension into one of ``k`` groups; ``k=0`` picks ceil(sqrt(d))."""
    names = [str(s) for s in dim_names]
    if len(set(names)) != len(names):
        dup = next(s for s in names if names.count(s) > 1)
        raise DuplicateDimension(f"duplicate dimension name {dup!r}")
    if k == 0:
        k = auto_k(len(names))
    if k < 1:
        raise ValueError(f"k must be >= 1 (or 0 for auto), got {k}")
    return SketchPlan(seed, k, {nm: hash_assignment(nm, seed, k) for nm in names})


def identity_plan(dim_names: Iterable[str], seed: int = 0) -> SketchPlan:
    """One dimension per group (k = d). Debug/test hook, not for production:
    the sketch then carries no compression at all."""
    names = [str(s) for s in dim_names]
    base = make_plan(names, 1, seed)
    return SketchPlan(seed, max(1, len(names)),
                      {nm: (j, base.sign_of(nm)) for j, nm in enumerate(names)})


def force_positive(plan: SketchPlan) -> SketchPlan:
    """Same grouping with every sign set to +1 (plain summation)."""
    return SketchPlan(plan.seed, plan.k,
                      {nm: (g, 1) for nm, (g, _) in plan.assignments.items()})


@dataclass(frozen=True)
class SketchedSeries:
    """``k x n`` matrix of signed group sums bound to its plan.

    ``stats`` holds the (mean, std) used to normalize each dimension before
    it was accumulated; deletions reuse them so they cancel exactly.
    """

    groups: np.ndarray
    plan: SketchPlan
    stats: Mapping[str, tuple[float, float]]

    def __post_init__(self):
        g = np.array(self.groups, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != self.plan.k:
            raise ValueError(f"groups must be k x n with k={self.plan.k}")
        g.setflags(write=False)
        object.__setattr__(self, "groups", g)
        object.__setattr__(self, "stats", dict(self.stats))

    @property
    def k(self) -> int:
        return self.plan.k

    @property
    def n(self) -> int:
        return self.groups.shape[1]

    def inert_groups(self) -> list[int]:
        """Groups that cannot carry a discord: empty or constant."""
        out = []
        for g in range(self.k):
            row = self.groups[g]
            if not self.plan.members(g) or np.ptp(row) <= 1e-12 * (np.max(np.abs(row)) + 1):
                out.append(g)
        return out


def _normalize(x, mu, sigma):
    return (x - mu) / sigma


def _dimension_stats(name, x, stats):
    if stats is None:
        try:
            return global_stats(x, name)
        except ConstantSeries:
            raise ConstantSeries(f"dimension {name!r} is constant") from None
    try:
        mu, sigma = stats[name]
    except KeyError:
        raise MissingDimension(f"no normalization stats for {name!r}") from None
    return float(mu), float(sigma)


def sketch(t: MultiSeries, plan: SketchPlan,
           stats: Mapping[str, tuple[float, float]] | None = None) -> SketchedSeries:
    """Normalize each plan dimension and add it, signed, into its group.

    With ``stats=None`` every dimension is normalized by its own mean and
    std. Pass the train sketch's ``stats`` when sketching test data so both
    sides share one scale.
    """
    missing = [nm for nm in plan.names if nm not in t]
    if missing:
        raise MissingDimension(f"dimensions missing from data: {missing[:5]}")
    R = np.zeros((plan.k, t.n))
    used = {}
    for nm, (g, s) in plan.assignments.items():
        x = t[nm]
        mu, sigma = _dimension_stats(nm, x, stats)
        used[nm] = (mu, sigma)
        R[g] += s * _normalize(x, mu, sigma)
    return SketchedSeries(R, plan, used)


def sketch_pair(train: MultiSeries, test: MultiSeries, plan: SketchPlan):
    """Sketch train with its own statistics and test with the train ones."""
    r_train = sketch(train, plan)
    return r_train, sketch(test, plan, r_train.stats)


def add_dimension(r: SketchedSeries, name: str, s,
                  stats: tuple[float, float] | None = None) -> SketchedSeries:
    x = as_series(s, name)
    if x.size != r.n:
        raise LengthMismatch(
            f"{name}: length {x.size} != sketch length {r.n}; dimensions must "
            "cover the full series")
    plan = r.plan.with_dimension(name)
    if stats is None:
        mu, sigma = _dimension_stats(name, x, None)
    else:
        mu, sigma = float(stats[0]), float(stats[1])
    g, sign = plan.assignments[name]
    R = np.array(r.groups)
    R[g] += sign * _normalize(x, mu, sigma)
    new_stats = dict(r.stats)
    new_stats[name] = (mu, sigma)
    return SketchedSeries(R, plan, new_stats)


def delete_dimension(r: SketchedSeries, name: str, s) -> SketchedSeries:
    """Subtract a dimension's contribution; ``s`` must be the series that
    was originally added (the sketch does not keep raw data)."""
    g, sign = r.plan._get(name)
    x = as_series(s, name)
    if x.size != r.n:
        raise LengthMismatch(f"{name}: length {x.size} != sketch length {r.n}")
    mu, sigma = r.stats[name]
    R = np.array(r.groups)
    R[g] -= sign * _normalize(x, mu, sigma)
    new_stats = {nm: v for nm, v in r.stats.items() if nm != name}
    return SketchedSeries(R, r.plan.without_dimension(name), new_stats)


def update_point(r: SketchedSeries, name: str, i: int, delta: float) -> SketchedSeries:
    """Add ``delta`` (normalized units) to point ``i`` of dimension ``name``."""
    g, sign = r.plan._get(name)
    if not 0 <= i < r.n:
        raise IndexOutOfRange(f"index {i} outside [0, {r.n})")
    R = np.array(r.groups)
    R[g, i] += sign * float(delta)
    return SketchedSeries(R, r.plan, r.stats)


def estimate_value(r: SketchedSeries, name: str, i: int) -> float:
    """Count-sketch point estimate of normalized dimension ``name`` at ``i``."""
    g, sign = r.plan._get(name)
    if not 0 <= i < r.n:
        raise IndexOutOfRange(f"index {i} outside [0, {r.n})")
    return float(sign * r.groups[g, i])


def sketch_to_dict(r: SketchedSeries) -> dict:
    dims = []
    for nm, (g, s) in r.plan.assignments.items():
        mu, sigma = r.stats.get(nm, (0.0, 1.0))
        dims.append({"name": nm, "group": g, "sign": s, "mu": mu, "sigma": sigma})
    return {
        "seed": r.plan.seed,
        "k": r.k,
        "d": r.plan.d,
        "n": r.n,
        "dimensions": dims,
        "groups": [row.tolist() for row in r.groups],
    }


def sketch_from_dict(doc: Mapping) -> SketchedSeries:
    asg = {}
    stats = {}
    for item in doc["dimensions"]:
        asg[item["name"]] = (int(item["group"]), int(item["sign"]))
        stats[item["name"]] = (float(item["mu"]), float(item["sigma"]))
    plan = SketchPlan(int(doc["seed"]), int(doc["k"]), asg)
    groups = np.asarray(doc["groups"], dtype=np.float64).reshape(plan.k, int(doc["n"]))
    if plan.d != int(doc["d"]):
        raise ValueError(f"sketch file claims d={doc['d']} but lists {plan.d} dimensions")
    return SketchedSeries(groups, plan, stats)
