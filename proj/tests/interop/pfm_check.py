# Copyright 2026 The ngi Authors.
# SPDX-License-Identifier: Apache-2.0

"""Reads fixtures from pfm_writer with OpenCV's PFM decoder."""

import sys

try:
    import cv2
    import numpy as np
except ImportError:
    print("opencv-python not available; skipping")
    sys.exit(77)

root = sys.argv[1]
rgb = cv2.imread(f"{root}/rgb.pfm", cv2.IMREAD_UNCHANGED)
depth = cv2.imread(f"{root}/depth.pfm", cv2.IMREAD_UNCHANGED)
if rgb is None or depth is None:
    sys.exit("OpenCV failed to decode the fixtures")

ys, xs = np.mgrid[0:5, 0:7].astype(np.float32)
for c in range(3):
    # OpenCV returns BGR with row 0 at the top.
    want = 100.0 * c + 10.0 * ys + xs + 0.5
    if not np.array_equal(rgb[:, :, 2 - c], want):
        sys.exit(f"channel {c} mismatch:\n{rgb[:, :, 2 - c]}")
if not np.array_equal(depth, 10.0 * ys + xs + 0.25):
    sys.exit(f"depth mismatch:\n{depth}")
print("PFM fixtures decode identically in OpenCV")
