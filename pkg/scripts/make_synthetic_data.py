#!/usr/bin/env python3
"""Build a small synthetic dataset for pipeline runs: per image, activation
tensors with planted Gaussian blobs, ground-truth boxes around the blob
centers, and a manifest tying it together. Fully seeded and deterministic.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from weaklabel import formats  # noqa: E402
from weaklabel.evaluation import GtBox  # noqa: E402
from weaklabel.geometry import Box  # noqa: E402


def _blob(grid_n: int, cy: float, cx: float, sigma: float) -> np.ndarray:
    ys = np.arange(grid_n)[:, None]
    xs = np.arange(grid_n)[None, :]
    return np.exp(-((ys - cy) ** 2 + (xs - cx) ** 2) / (2.0 * sigma**2))


def make_image(
    rng: np.random.Generator,
    image_id: str,
    data_dir: Path,
    grid_n: int = 16,
    n_classes: int = 3,
) -> dict:
    width = int(rng.integers(96, 145))
    height = int(rng.integers(96, 145))
    n_objects = int(rng.integers(1, 4))
    labels = sorted(rng.choice(n_classes, size=n_objects, replace=True).tolist())

    gt_boxes = []
    blob_params = []  # (label, cy, cx, sigma) in grid coordinates
    for label in labels:
        cy = float(rng.uniform(3.0, grid_n - 4.0))
        cx = float(rng.uniform(3.0, grid_n - 4.0))
        sigma = float(rng.uniform(1.0, 2.0))
        blob_params.append((label, cy, cx, sigma))
        # box around the blob center in image pixels, clipped to the image
        x = cx * (width - 1) / (grid_n - 1)
        y = cy * (height - 1) / (grid_n - 1)
        half = sigma * 2.5 * max(width, height) / grid_n
        gt_boxes.append(
            GtBox(
                label=int(label),
                box=Box(
                    max(0.0, x - half),
                    max(0.0, y - half),
                    min(float(width), x + half),
                    min(float(height), y + half),
                ),
                image_id=image_id,
            )
        )

    noise = lambda shape: rng.uniform(0.0, 0.15, size=shape)  # noqa: E731

    # cross-attention: (layers=2, heads=2, N, N), blobs spread across maps
    ca = noise((2, 2, grid_n, grid_n))
    for i, (_, cy, cx, sigma) in enumerate(blob_params):
        ca[i % 2, (i // 2) % 2] += _blob(grid_n, cy, cx, sigma)
    # CAMs: one map per class, blob placed on its class map
    coarse = noise((n_classes, grid_n, grid_n))
    fine = noise((n_classes, grid_n, grid_n))
    for label, cy, cx, sigma in blob_params:
        coarse[label] += _blob(grid_n, cy, cx, sigma * 1.4)
        fine[label] += _blob(grid_n, cy, cx, sigma)

    img_dir = data_dir / image_id
    img_dir.mkdir(parents=True, exist_ok=True)
    formats.write_wlt1(img_dir / "ca.wlt1", ca.astype(np.float32))
    formats.write_wlt1(img_dir / "coarse_cam.wlt1", coarse.astype(np.float32))
    formats.write_wlt1(img_dir / "fine_cam.wlt1", fine.astype(np.float32))
    formats.save_gt_boxes(img_dir / "gt.json", gt_boxes)

    return {
        "image_id": image_id,
        "image_width": width,
        "image_height": height,
        "tensor_paths": {
            "cross_attention": f"{image_id}/ca.wlt1",
            "coarse_cam": f"{image_id}/coarse_cam.wlt1",
            "fine_cam": f"{image_id}/fine_cam.wlt1",
        },
        "gt_path": f"{image_id}/gt.json",
        "labels": sorted(set(labels)),
    }


def make_dataset(data_dir: Path, n_images: int = 10, seed: int = 0) -> Path:
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = [make_image(rng, f"img_{i:03d}", data_dir) for i in range(n_images)]
    manifest_path = data_dir / "manifest.json"
    formats.dump_json(manifest_path, {"entries": entries})
    return manifest_path


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="synthetic_data", help="output directory")
    parser.add_argument("--images", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    manifest_path = make_dataset(Path(args.out), args.images, args.seed)
    print(f"wrote {args.images} images, manifest at {manifest_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
