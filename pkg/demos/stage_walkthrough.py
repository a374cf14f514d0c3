"""Check each inversion stage against its brute-force oracle at a few points.

    python demos/stage_walkthrough.py

Only the detector rows near the chosen vertices are simulated, so this runs
in well under a minute.
"""

import numpy as np

from tripod_crt import (PhiGrid, SGrid, Vertex, YGrid, default_phantom, diff_y, p1_eval, pk_eval,
                        plane_transform, process_cone_data, ray_transform, rf_eval,
                        simulate_cone_data)
from tripod_crt.geometry import lambda_point, vertex_point

ROW = 64
CENTER = np.array([0.22, 0.22, 0.22])


def main():
    f = default_phantom()
    grids = (YGrid(), PhiGrid(), SGrid())
    rng = np.random.default_rng(3)
    v = Vertex(2, ROW / 128)
    u = vertex_point(v)
    dirs = [CENTER - u + 0.05 * rng.normal(size=3) for _ in range(4)]

    for k in (1, 2):
        c = simulate_cone_data(f, grids, k, y_rows=list(range(ROW - 3, ROW + 4)))
        g = process_cone_data(c)
        g_dy = diff_y(g, k - 1)
        print(f"k={k}")
        for w in dirs:
            w = w / np.linalg.norm(w)
            pk, ref = pk_eval(g, v, w), ray_transform(f, u, w, k)
            line = f"  P_k  {pk:.6e}  oracle {ref:.6e}  rel {abs(pk / ref - 1):.1e}"
            if k > 1:
                p1, r1 = p1_eval(g_dy, v, w, k), ray_transform(f, u, w, 1)
                line += f"  |  P_1 {p1:.6e}  oracle {r1:.6e}  rel {abs(p1 / r1 - 1):.1e}"
            print(line)

    # Plane integrals need vertices anywhere on the tripod, so use full data.
    c = simulate_cone_data(f, grids, 1)
    g_dy = diff_y(process_cone_data(c), 0)
    print("plane integrals through points near the phantom center (k=1)")
    for _ in range(4):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        x = CENTER + 0.04 * rng.normal(size=3)
        val, ref = rf_eval(g_dy, x, n, 1), plane_transform(f, n, x @ n)
        lam = lambda_point(x, n)
        print(f"  vertex arm {int(lam.arm)} y={lam.y:.3f}  Rf {val:.6e}  oracle {ref:.6e}  "
              f"rel {abs(val / ref - 1):.1e}")


if __name__ == "__main__":
    main()
