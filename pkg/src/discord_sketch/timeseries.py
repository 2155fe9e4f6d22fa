"""Time series containers, z-normalization and z-normalized distances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConstantSeries,
    DuplicateDimension,
    LengthMismatch,
    NoAdmissibleNeighbor,
    NonFinite,
    SeriesTooShort,
    UnknownDimension,
)

# sigma at or below FLAT_RTOL * (max|x| + 1) counts as constant
FLAT_RTOL = 1e-12
# prefix-sum variances below this fraction of scale**2 are recomputed directly
_GUARD_RTOL = 1e-8


def as_series(values, name: str = "series") -> np.ndarray:
    """Validate ``values`` as a 1-D finite float64 array."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"{name}: expected a 1-D array, got shape {x.shape}")
    if x.size < 1:
        raise SeriesTooShort(f"{name}: empty series")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise NonFinite(f"{name}: non-finite value {x[bad]!r} at index {bad}")
    return x


def flat_threshold(x: np.ndarray) -> float:
    return FLAT_RTOL * (float(np.max(np.abs(x))) + 1.0)


@dataclass(frozen=True)
class MultiSeries:
    """A ``d x n`` multidimensional time series with named dimensions.

    Rows of ``values`` are dimensions, columns are time points.
    """

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        names = tuple(str(s) for s in self.names)
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.ndim == 1:
            vals = vals[None, :]
        if vals.ndim != 2:
            raise ValueError(f"values must be 2-D (d x n), got shape {vals.shape}")
        if len(names) != vals.shape[0]:
            raise LengthMismatch(
                f"{len(names)} names for {vals.shape[0]} dimensions")
        if len(names) < 1 or vals.shape[1] < 1:
            raise SeriesTooShort("need d >= 1 and n >= 1")
        seen = set()
        for nm in names:
            if nm in seen:
                raise DuplicateDimension(f"duplicate dimension name {nm!r}")
            seen.add(nm)
        if not np.all(np.isfinite(vals)):
            r, c = np.argwhere(~np.isfinite(vals))[0]
            raise NonFinite(
                f"non-finite value in dimension {names[r]!r} at index {c}")
        vals.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_dict(cls, columns: dict) -> "MultiSeries":
        names = list(columns)
        return cls(tuple(names), np.vstack([np.asarray(columns[k], dtype=float)
                                            for k in names]))

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownDimension(f"unknown dimension {name!r}") from None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[self.index(name)]

    def __contains__(self, name) -> bool:
        return name in self.names

    def select(self, names: Iterable[str]) -> "MultiSeries":
        names = list(names)
        return MultiSeries(tuple(names), self.values[[self.index(s) for s in names]])

    def slice(self, start: int, stop: int) -> "MultiSeries":
        return MultiSeries(self.names, self.values[:, start:stop])

    def with_dimension(self, name: str, values) -> "MultiSeries":
        """Return a copy with ``name`` replaced (or appended) by ``values``."""
        x = as_series(values, name)
        if x.size != self.n:
            raise LengthMismatch(f"{name}: length {x.size} != {self.n}")
        vals = np.array(self.values)
        if name in self.names:
            vals[self.index(name)] = x
            return MultiSeries(self.names, vals)
        return MultiSeries(self.names + (name,), np.vstack([vals, x]))


def znormalize_global(x, name: str = "series") -> np.ndarray:
    """Shift and scale a whole series to mean 0, population std 1."""
    x = as_series(x, name)
    if x.size < 2:
        raise SeriesTooShort(f"{name}: need at least 2 points to z-normalize")
    mu = x.mean()
    sigma = x.std()
    if sigma <= flat_threshold(x):
        raise ConstantSeries(f"{name}: series is constant")
    return (x - mu) / sigma


def global_stats(x, name: str = "series") -> tuple[float, float]:
    x = as_series(x, name)
    mu = float(x.mean())
    sigma = float(x.std())
    if x.size < 2 or sigma <= flat_threshold(x):
        raise ConstantSeries(f"{name}: series is constant")
    return mu, sigma


@dataclass(frozen=True)
class WindowStats:
    """Per-window mean and population std for every length-``m`` window."""

    m: int
    mu: np.ndarray
    sigma: np.ndarray
    constant: np.ndarray

    @property
    def inv_norm(self) -> np.ndarray:
        """``1 / sqrt(sum((w - mu)**2))``, zero for constant windows."""
        out = np.zeros_like(self.sigma)
        ok = ~self.constant
        out[ok] = 1.0 / (np.sqrt(self.m) * self.sigma[ok])
        return out


def window_stats(x, m: int) -> WindowStats:
    x = as_series(x)
    n = x.size
    if m < 2:
        raise ValueError(f"window length must be >= 2, got {m}")
    if n < m:
        raise SeriesTooShort(f"series of length {n} shorter than window {m}")
    # centring keeps the prefix sums small
    shift = x.mean()
    xc = x - shift
    cs = np.concatenate(([0.0], np.cumsum(xc)))
    cs2 = np.concatenate(([0.0], np.cumsum(xc * xc)))
    mu_c = (cs[m:] - cs[:-m]) / m
    var = (cs2[m:] - cs2[:-m]) / m - mu_c * mu_c
    scale = float(np.max(np.abs(xc))) + 1.0
    redo = np.flatnonzero(var <= _GUARD_RTOL * scale * scale)
    for i in redo:
        w = xc[i:i + m]
        mu_c[i] = w.mean()
        var[i] = np.mean((w - mu_c[i]) ** 2)
    sigma = np.sqrt(np.maximum(var, 0.0))
    constant = sigma <= flat_threshold(x)
    sigma[constant] = 0.0
    return WindowStats(m=m, mu=mu_c + shift, sigma=sigma, constant=constant)


def znormalize_window(w) -> np.ndarray:
    """Z-normalize one window; constant windows map to zeros."""
    w = np.asarray(w, dtype=np.float64)
    sigma = w.std()
    if sigma <= flat_threshold(w):
        return np.zeros_like(w)
    return (w - w.mean()) / sigma


def znorm_dist(a, b) -> float:
    """Z-normalized Euclidean distance between two equal-length windows."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(f"window lengths differ: {a.size} vs {b.size}")
    m = a.size
    if m < 2:
        raise ValueError("windows need at least 2 points")
    return float(np.linalg.norm(znormalize_window(a) - znormalize_window(b)))


def distance_profile(q, t, stats: WindowStats | None = None) -> np.ndarray:
    """Distances from window ``q`` to every length-``len(q)`` window of ``t``."""
    q = as_series(q, "query")
    t = as_series(t)
    m = q.size
    if m < 2:
        raise ValueError("query needs at least 2 points")
    if t.size < m:
        raise SeriesTooShort(f"series of length {t.size} shorter than query {m}")
    if stats is None:
        stats = window_stats(t, m)
    qc = q - q.mean()
    sq = np.sqrt(np.mean(qc * qc))
    windows = np.lib.stride_tricks.sliding_window_view(t, m)
    if sq <= flat_threshold(q):
        return np.where(stats.constant, 0.0, np.sqrt(m))
    # sum(qc) == 0, so the window means drop out of the covariance
    cov = windows @ qc
    rho = cov * stats.inv_norm / (np.sqrt(m) * sq)
    d2 = 2.0 * m * (1.0 - np.clip(rho, -1.0, 1.0))
    d2[stats.constant] = m
    return np.sqrt(np.maximum(d2, 0.0))


def nn_dist(q, t, m: int | None = None,
            exclude: tuple[int, int] | None = None) -> tuple[float, int]:
    """Nearest-neighbour distance of window ``q`` within series ``t``.

    ``exclude`` is an inclusive ``(lo, hi)`` range of start indices that are
    not admissible (trivial-match zone in self-joins). Ties go to the
    smallest index.
    """
    q = as_series(q, "query")
    if m is not None and q.size != m:
        raise LengthMismatch(f"query length {q.size} != m={m}")
    t = as_series(t)
    if t.size < q.size:
        raise SeriesTooShort(f"series of length {t.size} shorter than m={q.size}")
    prof = distance_profile(q, t)
    if exclude is not None:
        lo, hi = max(0, exclude[0]), min(prof.size - 1, exclude[1])
        if lo <= hi:
            prof = prof.copy()
            prof[lo:hi + 1] = np.inf
    idx = int(np.argmin(prof))
    if not np.isfinite(prof[idx]):
        raise NoAdmissibleNeighbor("every candidate window is excluded")
    # the correlation form loses digits near zero; report the explicit value
    return znorm_dist(q, t[idx:idx + q.size]), idx


def windows_of(x, m: int) -> np.ndarray:
    return np.lib.stride_tricks.sliding_window_view(np.asarray(x, dtype=float), m)


def stack_series(series: Sequence, names: Sequence[str] | None = None) -> MultiSeries:
    if names is None:
        names = [f"d{j}" for j in range(len(series))]
    return MultiSeries(tuple(names), np.vstack([as_series(s) for s in series]))
