"""
Choosing a restart schedule
===========================

For self-guided filters CG is restarted l_max times with k_max steps each.
Many (l_max, k_max) pairs do about equally well; the product l_max * k_max
matters more than the split.
"""

from cgsmooth.bench import ExperimentConfig, sweep_schedules

for filt, l_range, k_range in (("bf", range(2, 32), range(3, 20)), ("gf", range(3, 12), range(3, 8))):
    rows = sweep_schedules(ExperimentConfig(filter=filt), l_range, k_range)
    best = rows[0][3]
    print(f"\n{filt.upper()}: {len(rows)} schedules, best PSNR {best:.2f} dB")
    print(" l_max k_max  apps   PSNR")
    for l, k, apps, psnr, _ in rows[:8]:
        print(f"{l:6d}{k:6d}{apps:6d}{psnr:7.2f}")
    near = sorted({(l, k) for l, k, _, p, _ in rows if best - p <= 0.5}, key=lambda c: c[0] * c[1])
    print(f"{len(near)} schedules within 0.5 dB; fewest applications:",
          ", ".join(f"{l}x{k}" for l, k in near[:6]))
