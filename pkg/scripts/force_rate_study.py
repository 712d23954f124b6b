"""Force-difference slope |F_HF(a) - F_HF(0)| versus a across grids and sub-ladders.

Shows where the log-log slope sits for the reference geometry and how it moves
when the largest a is dropped (pre-asymptotic regime once a^2 is comparable to
the smallest nonzero |k|^2 = (2 pi / L)^2).
"""
import argparse

import numpy as np

from tfwlab.energy import assemble_density
from tfwlab.experiments import simple_cubic
from tfwlab.fitting import fit_power_law
from tfwlab.grid import build_grid
from tfwlab.response import force_hf
from tfwlab.solver import continuation_sweep


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--N", type=int, nargs="*", default=[32, 48, 64])
    p.add_argument("--a", type=float, nargs="*", default=[0.8, 0.4, 0.2, 0.1, 0.05])
    args = p.parse_args()
    a_list = sorted(args.a, reverse=True) + [0.0]
    L = 8.0
    print(f"(2 pi / L)^2 = {(2 * np.pi / L) ** 2:.3f}")
    for N in args.N:
        g = build_grid(L, N)
        cfg = simple_cubic(L, 2, 0.9, displace=(0, (0.3, 0.0, 0.0)))
        states = continuation_sweep(g, assemble_density(cfg, g), a_list)
        F0 = force_hf(states[-1], cfg, 0).F
        a = np.array([s.a for s in states[:-1]])
        d = np.array([np.linalg.norm(force_hf(s, cfg, 0).F - F0) for s in states[:-1]])
        print(f"N={N}: " + "  ".join(f"a={x:g}: {y:.3e}" for x, y in zip(a, d)))
        for lo in range(0, len(a) - 2):
            sl, _, r2 = fit_power_law(a[lo:lo + 4], d[lo:lo + 4])
            print(f"   a in [{a[min(lo + 3, len(a) - 1)]:g}, {a[lo]:g}]: slope {sl:.3f}  R2 {r2:.4f}")


if __name__ == "__main__":
    main()
