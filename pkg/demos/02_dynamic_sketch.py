# coding: utf-8

# # Keeping a sketch up to date
#
# The sketch is a signed sum, so dimensions can come and go without
# re-reading the rest of the data.

import numpy as np

from discord_sketch import (
    WalkConfig, add_dimension, delete_dimension, estimate_value,
    gen_random_walk, make_plan, sketch,
)

T = gen_random_walk(WalkConfig(d=30, n=500, seed=2))
plan = make_plan(T.names, k=6, seed=9)
r = sketch(T, plan)
print("groups:", [len(g) for g in plan.groups()])

# A new sensor appears. Its group and sign come from a hash of its name, so
# nothing that was already in the sketch moves.

new = np.cumsum(np.random.default_rng(0).normal(size=500))
r2 = add_dimension(r, "late_sensor", new)
print("late_sensor ->", r2.plan.group_of("late_sensor"), r2.plan.sign_of("late_sensor"))

# And it goes away again; the group sums return to what they were.

r3 = delete_dimension(r2, "late_sensor", new)
print("max change after add+delete:", np.max(np.abs(r3.groups - r.groups)))

# Any single normalized value can be estimated from its group, with noise
# from the other members of the group.

z = (T["d04"] - T["d04"].mean()) / T["d04"].std()
est = np.array([estimate_value(r, "d04", i) for i in range(500)])
print("estimate error std:", np.std(est - z), "group size:", len(plan.members(plan.group_of("d04"))))
