"""Convert PNG scene folders into the benchmark layout.

Expected input (Middlebury 2005/2006 style)::

    src/<Scene>/disp1.png   8- or 16-bit ground truth
    src/<Scene>/view1.png   colour view aligned with disp1

Output: ``dst/<Scene>/depth.pgm`` and ``dst/<Scene>/color.ppm``.  Values are
copied code for code; zeros stay zeros.  Needs Pillow.

    python scripts/convert_png.py raw/ data/middlebury/
"""

import argparse
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from guided_depth.formats import write_pnm


def convert_scene(src: Path, dst: Path, depth_name: str, color_name: str) -> None:
    depth = np.asarray(Image.open(src / depth_name))
    color = np.asarray(Image.open(src / color_name).convert("RGB"))
    if depth.ndim == 3:
        depth = depth[..., 0]
    if depth.shape != color.shape[:2]:
        raise ValueError(f"{src.name}: depth {depth.shape} vs colour {color.shape[:2]}")
    maxval = 255 if depth.dtype == np.uint8 else 65535
    dst.mkdir(parents=True, exist_ok=True)
    write_pnm(dst / "depth.pgm", depth.astype(np.int64), maxval)
    write_pnm(dst / "color.ppm", color.astype(np.int64), 255)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("src", type=Path)
    ap.add_argument("dst", type=Path)
    ap.add_argument("--depth-name", default="disp1.png")
    ap.add_argument("--color-name", default="view1.png")
    args = ap.parse_args()
    scenes = sorted(p for p in args.src.iterdir() if (p / args.depth_name).exists())
    if not scenes:
        print(f"no scenes with {args.depth_name} under {args.src}", file=sys.stderr)
        return 1
    for scene in scenes:
        convert_scene(scene, args.dst / scene.name, args.depth_name, args.color_name)
        print(f"{scene.name} -> {args.dst / scene.name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
