"""Regenerate the bundled 1000x1000 synthetic micrograph."""

import argparse
from pathlib import Path

from lithoprint.samples import BUNDLED_SAMPLE, write_sample

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "lithoprint" / BUNDLED_SAMPLE


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    ap.add_argument("--size", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    path = write_sample(args.out, args.size, args.size, args.seed)
    print(f"wrote {path} ({path.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
