"""
Sample Data Generator
This script writes seeded demo inputs for the `monge` command line
"""

import os
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from monge.config import Config
from monge.models import ImageStack
from monge.services.dataio import write_idx_images, write_sample_csv
from monge.services.sampler import (
    blur_stack, gaussian, make_gaussian_pair, make_rng, motion_blur_kernel, radial_spectrum,
    stationary_image_stack,
)


def _to_unit_range(stack: np.ndarray) -> np.ndarray:
    """Affinely squeeze a stack into [0, 1] so it can be stored as IDX bytes"""
    lo, hi = stack.min(), stack.max()
    return (stack - lo) / (hi - lo)


def generate_sample_data(out_dir='sample_data', num_samples=2000, dim=5, seed=Config.SEED):
    """Gaussian source/target CSV pair plus a clean and a blurred IDX image stack"""
    out_dir = Path(out_dir)
    rng = make_rng(seed, 'sample_data')

    print(f"Generating {num_samples} Gaussian samples in dimension {dim}...")
    m1, S1, m2, S2 = make_gaussian_pair(rng, dim)
    write_sample_csv(out_dir / 'source.csv', gaussian(rng, m1, S1, num_samples).rows)
    write_sample_csv(out_dir / 'target.csv', gaussian(rng, m2, S2, num_samples).rows)

    print(f"Generating {num_samples} stationary {Config.IMAGE_SHAPE[0]}x{Config.IMAGE_SHAPE[1]} images...")
    stack = stationary_image_stack(rng, Config.IMAGE_SHAPE, radial_spectrum(Config.IMAGE_SHAPE), 2 * num_samples)
    clean = _to_unit_range(stack[:num_samples])
    blurred = _to_unit_range(blur_stack(stack[num_samples:], motion_blur_kernel()))
    write_idx_images(out_dir / 'images.idx', ImageStack(clean))
    write_idx_images(out_dir / 'images_blurred.idx', ImageStack(blurred))

    print(f"\n✓ Sample data written to {out_dir}/")
    print("\nYou can now:")
    print(f"1. Fit a map:     python run.py map fit --source {out_dir}/source.csv "
          f"--target {out_dir}/target.csv --out {out_dir}/linear.map")
    print(f"2. Fit a filter:  python run.py map fit --mode conv --alpha 1e-6 --source {out_dir}/images.idx "
          f"--target {out_dir}/images_blurred.idx --out {out_dir}/conv.map")
    print("3. Run a study:   python run.py experiment --kind mapping --out-dir results --plots")


if __name__ == '__main__':
    num = 2000
    if len(sys.argv) > 1:
        try:
            num = int(sys.argv[1])
        except ValueError:
            print("Usage: python sample_data.py [number_of_samples]")
            sys.exit(1)

    generate_sample_data(num_samples=num)
