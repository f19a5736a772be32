#!/usr/bin/env python3
"""Writes the data columns behind every figure into tools/figure_output/."""

import logging
import os
import sys
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config import load_config
from src.recipes import RECIPES, reproduce


def main():
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    config = load_config(os.path.join(root, "config.yaml"))

    out_dir = os.path.join(os.path.dirname(os.path.abspath(__file__)), "figure_output")
    os.makedirs(out_dir, exist_ok=True)

    # s2 runs 53 fits and takes a few minutes
    names = sys.argv[1:] or list(RECIPES)
    for name in names:
        for path in reproduce(name, config, out_dir, config.noise.seed, config.batch.jobs):
            print(f"Saved {path}")

    print(f"\nAll figure data saved to {out_dir}/")


if __name__ == "__main__":
    main()
