#!/usr/bin/env python3
"""Write the synthetic street-scene fixture (image + label mask) to disk.

Gives the CLI something to chew on without downloading a dataset:

    python scripts/make_fixture.py --out fixtures/
    eedkit diffuse fixtures/street.png -o diffused/ --preset P_strong --steps 512
"""

import argparse
from pathlib import Path

from eedkit.images import save_image, save_mask
from eedkit.metrics import COMMON14, write_class_set
from eedkit.synthetic import street_scene, textured_image


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures", help="output directory")
    parser.add_argument("--height", type=int, default=96)
    parser.add_argument("--width", type=int, default=128)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out)
    img, mask = street_scene(args.height, args.width, args.seed)
    save_image(img, out / "street.png")
    save_mask(mask, out / "street_mask.png")
    save_image(textured_image(args.height, args.width, args.seed), out / "texture.png")
    write_class_set(COMMON14, out / "classes.txt")
    print(f"wrote street.png, street_mask.png, texture.png, classes.txt to {out}/")


if __name__ == "__main__":
    main()
