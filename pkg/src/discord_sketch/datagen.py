"""Seeded synthetic data: random walks, periodic series and planted discords."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange, UnknownDimension
from .timeseries import MultiSeries, global_stats


def _names(d, prefix="d"):
    width = len(str(max(d - 1, 0)))
    return tuple(f"{prefix}{j:0{width}d}" for j in range(d))


@dataclass(frozen=True)
class WalkConfig:
    d: int
    n: int
    step_std: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise ValueError("d and n must be >= 1")
        if not self.step_std > 0:
            raise ValueError(f"step_std must be > 0, got {self.step_std}")


def gen_random_walk(cfg: WalkConfig, prefix: str = "d") -> MultiSeries:
    """Cumulative sums of i.i.d. normal steps, one stream per dimension."""
    vals = np.empty((cfg.d, cfg.n))
    for j in range(cfg.d):
        rng = np.random.default_rng([cfg.seed, j])
        vals[j] = np.cumsum(rng.normal(0.0, cfg.step_std, cfg.n))
    return MultiSeries(_names(cfg.d, prefix), vals)


@dataclass(frozen=True)
class PeriodicConfig:
    """Noisy periodic data; every dimension's period divides ``period``."""

    d: int
    period: int = 48
    num_periods: int = 20
    eta: float = 0.05
    seed: int = 0
    test_periods: int = 2
    harmonics: int = 3

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.period < 8:
            raise ValueError(f"period must be >= 8, got {self.period}")
        if self.num_periods < 1 or self.test_periods < 2:
            raise ValueError("need num_periods >= 1 and test_periods >= 2")
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")


def dimension_periods(cfg: PeriodicConfig) -> list[int]:
    """Per-dimension periods: divisors of the joint period, at least 8 long."""
    divisors = [p for p in range(8, cfg.period + 1) if cfg.period % p == 0]
    rng = np.random.default_rng([cfg.seed, 1_000_003])
    return [int(p) for p in rng.choice(divisors, size=cfg.d)]


def _template(p, harmonics, rng):
    t = np.arange(p)
    x = np.zeros(p)
    for h in range(1, min(harmonics, p // 2) + 1):
        amp = rng.normal() / h
        phase = rng.uniform(0, 2 * np.pi)
        x += amp * np.sin(2 * np.pi * h * t / p + phase)
    x -= x.mean()
    return x / x.std()


def periodic_templates(cfg: PeriodicConfig, periods=None) -> list[np.ndarray]:
    """Noise-free one-period templates (mean 0, std 1) for every dimension."""
    if periods is None:
        periods = dimension_periods(cfg)
    return [_template(p, cfg.harmonics, np.random.default_rng([cfg.seed, j, 1]))
            for j, p in enumerate(periods)]


def gen_periodic(cfg: PeriodicConfig, periods=None,
                 prefix: str = "d") -> tuple[MultiSeries, MultiSeries]:
    """Train and test series that repeat per-dimension templates plus noise.

    The test part continues the train part's phase, so every test window has
    a phase-aligned counterpart in every train period.
    """
    if periods is None:
        periods = dimension_periods(cfg)
    periods = list(periods)
    if any(cfg.period % p for p in periods):
        raise ValueError(f"periods {periods} must divide {cfg.period}")
    templates = periodic_templates(cfg, periods)
    n_train = cfg.num_periods * cfg.period
    n = n_train + cfg.test_periods * cfg.period
    vals = np.empty((cfg.d, n))
    for j, (p, tmpl) in enumerate(zip(periods, templates)):
        rng = np.random.default_rng([cfg.seed, j, 2])
        vals[j] = tmpl[np.arange(n) % p] + cfg.eta * rng.normal(size=n)
    names = _names(cfg.d, prefix)
    return MultiSeries(names, vals[:, :n_train]), MultiSeries(names, vals[:, n_train:])


SHAPES = ("bump", "step", "burst")


@dataclass(frozen=True)
class PlantSpec:
    dimension: str
    start: int
    length: int
    delta_norm: float
    shape: str = "bump"

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if self.length < 2:
            raise ValueError("length must be >= 2")
        if self.delta_norm < 0:
            raise ValueError("delta_norm must be >= 0")


def unit_shape(shape: str, m: int) -> np.ndarray:
    """Unit-norm displacement pattern of length ``m``."""
    t = np.arange(m)
    if shape == "bump":
        x = np.sin(np.pi * (t + 0.5) / m)
    elif shape == "step":
        x = np.where(t >= m // 2, 1.0, 0.0)
    elif shape == "burst":
        # alternating high-frequency oscillation under a smooth envelope
        x = np.sin(np.pi * (t + 0.5) / m) * np.where(t % 2 == 0, 1.0, -1.0)
    else:
        raise ValueError(f"unknown shape {shape!r}")
    return x / np.linalg.norm(x)


def realized_delta(before, after, start, length, stats=None) -> float:
    """Norm of the window displacement measured in normalized units.

    With ``stats=None`` each series is normalized by its own statistics.
    """
    if stats is None:
        mb, sb = global_stats(before)
        ma, sa = global_stats(after)
    else:
        mb, sb = stats
        ma, sa = stats
    w = slice(start, start + length)
    return float(np.linalg.norm((after[w] - ma) / sa - (before[w] - mb) / sb))


def plant_discord(t: MultiSeries, spec: PlantSpec,
                  stats: tuple[float, float] | None = None,
                  rtol: float = 0.005, max_iter: int = 20) -> MultiSeries:
    """Add a shaped displacement to one window of one dimension.

    The size is calibrated so the window moves by ``spec.delta_norm`` in
    normalized units: by ``stats`` (mean, std) when given (e.g. train
    statistics for a test series), else by the series' own statistics,
    which the plant itself shifts, hence the rescaling loop.
    """
    if spec.dimension not in t:
        raise UnknownDimension(f"unknown dimension {spec.dimension!r}")
    if spec.start < 0 or spec.start + spec.length > t.n:
        raise OutOfRange(
            f"window [{spec.start}, {spec.start + spec.length}) outside [0, {t.n})")
    if spec.delta_norm == 0:
        return t
    before = t[spec.dimension]
    shape = unit_shape(spec.shape, spec.length)
    w = slice(spec.start, spec.start + spec.length)
    sigma = stats[1] if stats is not None else global_stats(before)[1]
    scale = spec.delta_norm * sigma

    def inject(a):
        x = before.copy()
        x[w] += a * shape
        return x

    after = inject(scale)
    if stats is None:
        for _ in range(max_iter):
            got = realized_delta(before, after, spec.start, spec.length)
            if abs(got - spec.delta_norm) <= rtol * spec.delta_norm:
                break
            scale *= spec.delta_norm / got
            after = inject(scale)
        got = realized_delta(before, after, spec.start, spec.length)
        if abs(got - spec.delta_norm) > 0.02 * spec.delta_norm:
            # the plant inflates the series' own std, so the reachable norm saturates
            raise OutOfRange(
                f"displacement {spec.delta_norm} is not reachable in the series' own "
                f"scale (got {got:.4g}); pass train statistics or a smaller norm")
    return t.with_dimension(spec.dimension, after)
