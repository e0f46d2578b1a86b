"""Convex decompositions of the cell average and the CFL numbers they induce.

Shows the optimal P1/P2 decompositions on an equilateral and a right
isosceles cell, compares against the classical and Chen-Shu CFL numbers, and
scans the ratio of optimal to classical CFL over a large random-triangle
ensemble. The optimal decomposition allows 2-3x (P1) and 3.8-4.5x (P2)
larger bound-preserving time steps.
"""

import math

import numpy as np

from tridg import bp
from tridg.harness import cfl_ratio_scan

CELLS = {
    "equilateral": np.array([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]]),
    "right isosceles": np.array([[0, 0], [1, 0], [0.5, 0.5]]),
    "3-4-5": np.array([[0, 0], [3, 0], [0, 4]]),
}

if __name__ == "__main__":
    for name, verts in CELLS.items():
        print(f"\n=== {name} cell ===")
        lengths, _ = bp.sorted_cell(verts)
        for k in (1, 2):
            dec = bp.decomposition(verts, k)
            print(f" P{k}: edge weights {np.round(dec.edge_weights, 6)}, "
                  f"{len(dec.nodes)} internal node(s), C_BP = {dec.cfl:.6f}")
            for bary, w in dec.nodes:
                print(f"     node at barycentric {np.round(bary, 6)} "
                      f"(weight {w:.6f})")
            print(f"     classical C = {bp.classical_cfl(lengths, k):.6f}, "
                  f"Chen-Shu C = {bp.chen_shu_cfl(lengths, k):.6f}")

    print("\n=== CFL ratio scan over 10000 random triangles ===")
    for k in (1, 2):
        r = cfl_ratio_scan(n=10_000, k=k, seed=0)
        print(f" P{k}: optimal/classical in "
              f"[{r['dcw_zxs_min']:.4f}, {r['dcw_zxs_max']:.4f}], "
              f"optimal/Chen-Shu in "
              f"[{r['dcw_cs_min']:.4f}, {r['dcw_cs_max']:.4f}]")
