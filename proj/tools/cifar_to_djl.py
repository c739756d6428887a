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
"""Converts CIFAR-10 binary batches (data_batch_*.bin) to one DJL1 file."""

import argparse
import struct

import numpy as np

RECORD = 1 + 3 * 32 * 32


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("batches", nargs="+")
    ap.add_argument("--out", required=True)
    ap.add_argument("--limit", type=int, default=0)
    args = ap.parse_args()

    images = []
    for path in args.batches:
        raw = np.fromfile(path, dtype=np.uint8)
        if raw.size % RECORD:
            raise SystemExit(f"{path}: not a CIFAR-10 binary batch")
        # stored planar (label, R plane, G plane, B plane); DJL1 is interleaved HWC
        recs = raw.reshape(-1, RECORD)[:, 1:].reshape(-1, 3, 32, 32)
        images.extend(np.ascontiguousarray(r.transpose(1, 2, 0)) for r in recs)
    if args.limit:
        images = images[:args.limit]
    with open(args.out, "wb") as f:
        f.write(b"DJL1")
        f.write(struct.pack("<I", len(images)))
        for img in images:
            f.write(struct.pack("<HHB", 32, 32, 3))
            f.write(img.tobytes())
    print(f"wrote {len(images)} images to {args.out}")


if __name__ == "__main__":
    main()
