"""
Iterated filtering versus truncated CG
======================================

Plain filter sweeps are power iterations. Running CG on L x = 0 from the
noisy signal instead, and stopping early, reaches the same denoising quality
in far fewer operator applications.

Prints PSNR against applications; with matplotlib installed it also saves
``iterate_vs_cg.png``.
"""

import numpy as np

from cgsmooth import (
    BfParams,
    CgSchedule,
    GfParams,
    GuidancePolicy,
    IterationLog,
    NoiseSpec,
    add_noise,
    generate_clean,
    iterate_filter,
    pcg_restarted,
    pcg_truncated,
)

clean = generate_clean()
noisy = add_noise(clean, NoiseSpec(variance=0.01, seed=0))


def curve(log):
    return np.array([(r.applications, r.psnr_db) for r in log.records])


runs = {}

# weights from the clean signal: a linear filter
for name, params, sweeps, k in (("BF", BfParams(), 500, 20), ("GF", GfParams(), 90, 13)):
    it_log = IterationLog(reference=clean.samples)
    iterate_filter(noisy, params, GuidancePolicy.fixed(clean), sweeps, it_log)
    cg_log = IterationLog(reference=clean.samples)
    pcg_truncated(noisy, clean, params, k, cg_log)
    runs[f"{name}, clean guide"] = (curve(it_log), curve(cg_log))

# self-guided: weights follow the iterate, CG restarts with refreshed weights
for name, params, sweeps, (l, k) in (("BF", BfParams(), 600, (3, 11)), ("GF", GfParams(), 75, (5, 5))):
    it_log = IterationLog(reference=clean.samples)
    iterate_filter(noisy, params, GuidancePolicy.self_guided(), sweeps, it_log)
    cg_log = IterationLog(reference=clean.samples)
    pcg_restarted(noisy, params, CgSchedule(k_max=k, l_max=l), cg_log)
    runs[f"{name}, self-guided"] = (curve(it_log), curve(cg_log))

for title, (it, cg) in runs.items():
    print(f"{title:16s} iterated: {it[-1, 1]:.2f} dB after {int(it[-1, 0])} sweeps "
          f"(best {it[:, 1].max():.2f} at {int(it[it[:, 1].argmax(), 0])}); "
          f"CG: {cg[-1, 1]:.2f} dB after {int(cg[-1, 0])} applications")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    raise SystemExit(0)

fig, axes = plt.subplots(2, 2, figsize=(11, 7))
for ax, (title, (it, cg)) in zip(axes.flat, runs.items()):
    ax.semilogx(np.maximum(it[:, 0], 1), it[:, 1], label="iterated")
    ax.semilogx(np.maximum(cg[:, 0], 1), cg[:, 1], "o-", ms=3, label="CG")
    ax.set_title(title)
    ax.set_xlabel("operator applications")
    ax.set_ylabel("PSNR / dB")
    ax.legend()
fig.tight_layout()
fig.savefig("iterate_vs_cg.png", dpi=110)
print("saved iterate_vs_cg.png")
