# coding: utf-8

# # How often does the sketched pick rank near the top?
#
# For a few trials we rank every (window, dimension) score and see where the
# sketched pick lands. This is a small version of the full benchmark
# (`discord-sketch bench success-rate --dims 250 --n 10000 --m 100`).

from discord_sketch import evaluation as ev

res = ev.success_rate_experiment([64], n=4000, m=64, trials=5, threshold=0.01, seed=1)[64]
for t in res["trials"]:
    print(f"trial {t['trial']}: rank fraction {t['rank_fraction']:.4f}, "
          f"speedup {t['exact_ms'] / t['fast_ms']:.1f}x")
print("success rate:", res["success_rate"], "mean speedup:", round(res["mean_speedup"], 1))

# With one dimension per group the sketch is the exact method, so the pick
# is always rank 1.

ident = ev.success_rate_experiment([16], n=2000, m=64, trials=2, threshold=1e-3, seed=1,
                                   identity=True)[16]
print("identity plan success:", ident["success_rate"])
