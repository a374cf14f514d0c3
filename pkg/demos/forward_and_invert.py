"""Simulate cone data for the default phantom and reconstruct it.

    python demos/forward_and_invert.py --k 2 --slice-csv recon_z16.csv

Default grids take a couple of minutes per order on one core.
"""

import argparse
import time

from tripod_crt import (PhiGrid, QuadratureConfig, SGrid, VolumeGrid, VolumeSpec, YGrid,
                        default_phantom, eval_phantom, metrics, reconstruct, simulate_cone_data)
from tripod_crt.cli_io import write_slice_csv


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--k", type=int, default=1, help="weight order of the cone transform")
    p.add_argument("--n-s", type=int, default=257)
    p.add_argument("--n-phi", type=int, default=128)
    p.add_argument("--slice-csv", help="write the central z slice here")
    a = p.parse_args()

    f = default_phantom()
    q = QuadratureConfig(n_phi_beta=a.n_phi)
    vs = VolumeSpec((0.085, 0.085, 0.085), 1 / 128, (32, 32, 32))
    vs.check_in_hull()

    t = time.perf_counter()
    c = simulate_cone_data(f, (YGrid(), PhiGrid(a.n_phi), SGrid(n_s=a.n_s)), a.k, q)
    print(f"simulated {c.data.shape} in {time.perf_counter() - t:.0f}s")

    t = time.perf_counter()
    stages = {}
    recon = reconstruct(c, a.k, vs, q=q, stages=stages)
    print(f"reconstructed in {time.perf_counter() - t:.0f}s")

    truth = VolumeGrid(vs, eval_phantom(f, vs.centers()))
    m = metrics(recon, truth)
    print(f"rel_l2={m['rel_l2']:.3e} max_abs={m['max_abs']:.3e} psnr={m['psnr']:.1f} dB "
          f"over {m['n_voxels']} voxels")
    print(f"peak recon={recon.values[recon.valid].max():.4f} truth={truth.values.max():.4f}")
    if a.slice_csv:
        write_slice_csv(recon, "z", vs.dims[2] // 2, a.slice_csv)
        print(f"wrote {a.slice_csv}")


if __name__ == "__main__":
    main()
