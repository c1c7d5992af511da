"""Stability diagram for a two-species reaction-diffusion system.

Draws the brute-force spectral-gap sign on a (d1, d2) grid together with the
hyperbolas C_k whose lower envelope bounds the stable region.
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from parastab.io import write_csv
from parastab.rds import DomainSpec, hyperbola_curves, laplace_eigenvalues, region_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--b", type=float, nargs=4, default=[1, -1, 3, -2], metavar=("B11", "B12", "B21", "B22"))
    ap.add_argument("--length", type=float, default=1.0)
    ap.add_argument("--K", type=int, default=64)
    ap.add_argument("--grid", type=int, default=200)
    ap.add_argument("--curves", type=int, default=6, help="number of hyperbolas to draw")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("out/hyperbola"))
    args = ap.parse_args()

    B = np.array(args.b).reshape(2, 2)
    kap = laplace_eigenvalues(DomainSpec.interval(args.length), args.K).kappas
    d1 = np.linspace(0.002, 1.2 * B[0, 0] / kap[0], args.grid)
    d2 = np.linspace(0.01, 1.5, args.grid)
    scan = region_scan(B, kap, d1, d2, workers=args.workers)
    curves = hyperbola_curves(B, kap[:args.curves], np.linspace(0, d1[-1], 400))

    args.out.mkdir(parents=True, exist_ok=True)
    write_csv(args.out / "region.csv", ["d1", "d2", "in_region", "gap"], scan.rows())
    write_csv(args.out / "curves.csv", ["k", "d1", "d2"], curves)
    print(f"agreement outside the gap band: {scan.agreement:.4%}")

    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.contourf(d1, d2, (scan.gap > 0).T, levels=[-0.5, 0.5, 1.5], colors=["#f4c7c3", "#cfe8cf"])
    for k in range(1, args.curves + 1):
        pts = np.array([(a, b) for kk, a, b in curves if kk == k])
        if len(pts):
            ax.plot(pts[:, 0], pts[:, 1], lw=1, label=f"$C_{k}$")
    ax.set_xlim(d1[0], d1[-1])
    ax.set_ylim(d2[0], d2[-1])
    ax.set_xlabel("$d_1$")
    ax.set_ylabel("$d_2$")
    ax.legend(fontsize=7, loc="upper right")
    fig.tight_layout()
    fig.savefig(args.out / "hyperbolas.png", dpi=150, metadata={"Software": None})
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
