"""Multidimensional time-series discord detection on count sketches."""

from .count_sketch import (
    SketchPlan,
    SketchedSeries,
    add_dimension,
    delete_dimension,
    estimate_value,
    identity_plan,
    make_plan,
    sketch,
    sketch_pair,
    update_point,
)
from .datagen import PeriodicConfig, PlantSpec, WalkConfig, gen_periodic, gen_random_walk, plant_discord
from .detection import DetectionConfig, DiscordReport, detect, detect_top_k, exact_discord
from .errors import DiscordError
from .matrix_profile import ProfileResult, ab_join, self_join, top_discord
from .timeseries import MultiSeries, nn_dist, znorm_dist, znormalize_global

__version__ = "0.1.0"
