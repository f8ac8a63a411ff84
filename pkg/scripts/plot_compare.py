#!/usr/bin/env python3
"""Log-log convergence plot from a `rmom compare` CSV.

Usage: python scripts/plot_compare.py compare.csv [out.png]
"""

import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    path = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else path.rsplit(".", 1)[0] + ".png"
    series = defaultdict(list)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        metric = header[2]
        for line in fh:
            name, k, val, _ = line.strip().split(",")
            series[name].append((int(k), float(val)))
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, pts in series.items():
        pts.sort()
        ks = [k for k, v in pts if k > 0 and v > 0]
        vs = [v for k, v in pts if k > 0 and v > 0]
        ax.loglog(ks, vs, label=name)
    ax.set_xlabel("iteration")
    ax.set_ylabel(metric.replace("_", " "))
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
