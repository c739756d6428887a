#!/usr/bin/env python3
# Copyright 2026 The DeepJSCC Lab Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds a DJL1 batch of small natural-image patches.

Used when CIFAR-10 is not available offline: random crops at random scales
from the photographs bundled with scikit-image, scikit-learn and matplotlib.
"""

import argparse
import glob
import os
import struct
import sys

import numpy as np
from PIL import Image


def candidate_photos():
    roots = []
    try:
        import skimage
        roots.append(os.path.join(os.path.dirname(skimage.__file__), "data"))
    except ImportError:
        pass
    try:
        import sklearn
        roots.append(os.path.join(os.path.dirname(sklearn.__file__), "datasets", "images"))
    except ImportError:
        pass
    try:
        import matplotlib
        roots.append(os.path.join(os.path.dirname(matplotlib.__file__), "mpl-data", "sample_data"))
    except ImportError:
        pass
    skip = {"chessboard_RGB.png", "logo.png", "color.png", "phantom.png"}
    paths = []
    for root in roots:
        for ext in ("*.png", "*.jpg"):
            for p in sorted(glob.glob(os.path.join(root, ext))):
                if os.path.basename(p) in skip:
                    continue
                try:
                    with Image.open(p) as im:
                        if im.mode not in ("RGB", "RGBA") or min(im.size) < 128:
                            continue
                except OSError:
                    continue
                paths.append(p)
    return paths


def write_djl1(path, patches):
    with open(path, "wb") as f:
        f.write(b"DJL1")
        f.write(struct.pack("<I", len(patches)))
        for p in patches:
            h, w, c = p.shape
            f.write(struct.pack("<HHB", h, w, c))
            f.write(p.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--count", type=int, default=6250)
    ap.add_argument("--size", type=int, default=32)
    ap.add_argument("--seed", type=int, default=2022)
    args = ap.parse_args()

    photos = candidate_photos()
    if not photos:
        sys.exit("no source photographs found")
    rng = np.random.default_rng(args.seed)
    images = [np.asarray(Image.open(p).convert("RGB")) for p in photos]
    s = args.size
    patches = []
    while len(patches) < args.count:
        img = images[rng.integers(len(images))]
        h, w, _ = img.shape
        # crop side between 1x and 8x the patch size, then downsample
        side = int(rng.integers(s, min(8 * s, h, w) + 1))
        y = int(rng.integers(0, h - side + 1))
        x = int(rng.integers(0, w - side + 1))
        crop = Image.fromarray(img[y:y + side, x:x + side]).resize((s, s), Image.BILINEAR)
        arr = np.asarray(crop)
        if rng.random() < 0.5:
            arr = arr[:, ::-1]
        if arr.std() < 4.0:
            continue
        patches.append(np.ascontiguousarray(arr))
    write_djl1(args.out, patches)
    print(f"wrote {len(patches)} patches from {len(photos)} photos to {args.out}")


if __name__ == "__main__":
    main()
