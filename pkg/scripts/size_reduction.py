"""Triangle count and file size vs posterize levels on the smooth-gradient image."""

import argparse

from lithoprint import imaging
from lithoprint.decimate import decimate_planar
from lithoprint.imaging import RasterImage
from lithoprint.mesh import signed_volume, tessellate
from lithoprint.relief import ReliefParams, column_volume, from_image
from lithoprint.samples import smooth_gradient
from lithoprint.stl import predicted_size_bytes


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=512)
    ap.add_argument("--levels", type=int, nargs="+", default=[0, 32, 16, 8, 4, 2])
    args = ap.parse_args()

    img = RasterImage(smooth_gradient(args.size, args.size))
    params = ReliefParams()
    print(f"{'levels':>6}  {'tessellated':>11}  {'decimated':>9}  {'bytes':>11}  vol rel err")
    for levels in args.levels:
        src = imaging.posterize(img, levels) if levels else img
        hf = from_image(src, params)
        mesh = tessellate(hf)
        dec = decimate_planar(mesh).mesh
        err = abs(signed_volume(dec) - column_volume(hf)) / column_volume(hf)
        label = levels or "off"
        print(f"{label:>6}  {mesh.n_triangles:>11}  {dec.n_triangles:>9}  "
              f"{predicted_size_bytes(dec.n_triangles):>11}  {err:.1e}")


if __name__ == "__main__":
    main()
