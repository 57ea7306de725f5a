#!/usr/bin/env python3
"""Regenerates the raster fixtures under assets/.

- assets/digits/train-images.idx3 + train-labels.idx1: handwriting-style
  digit rasters (28x28, IDX format) drawn from several faces with random
  affine jitter, thickness variation and blur.
- assets/letters/A.pgm .. Z.pgm: grayscale uppercase letter rasters (PGM P5).

The C++ code only ingests these files; run this script when the fixture set
needs to change.
"""

import argparse
import random
import struct
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFilter, ImageFont

FONTS = [
    "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf",
    "/usr/share/fonts/truetype/dejavu/DejaVuSans-Bold.ttf",
    "/usr/share/fonts/truetype/dejavu/DejaVuSerif.ttf",
    "/usr/share/fonts/truetype/dejavu/DejaVuSerif-Bold.ttf",
    "/usr/share/fonts/truetype/dejavu/DejaVuSansMono.ttf",
    "/usr/share/fonts/truetype/dejavu/DejaVuSansMono-Bold.ttf",
]


def render_glyph(ch, font_path, size=40, canvas=64):
    font = ImageFont.truetype(font_path, size)
    img = Image.new("L", (canvas, canvas), 0)
    draw = ImageDraw.Draw(img)
    bbox = draw.textbbox((0, 0), ch, font=font)
    w, h = bbox[2] - bbox[0], bbox[3] - bbox[1]
    draw.text(((canvas - w) / 2 - bbox[0], (canvas - h) / 2 - bbox[1]), ch, fill=255, font=font)
    return img


def jitter_digit(rng, img, out_side=28):
    canvas = img.size[0]
    angle = rng.uniform(-12, 12)
    shear = rng.uniform(-0.15, 0.15)
    scale = rng.uniform(0.85, 1.1)
    tx = rng.uniform(-2, 2)
    ty = rng.uniform(-2, 2)
    c = canvas / 2
    a = np.deg2rad(angle)
    # inverse affine (PIL takes output->input coefficients)
    m = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]]) @ np.array(
        [[1, shear], [0, 1]]
    ) * scale
    mi = np.linalg.inv(m)
    coeffs = (
        mi[0, 0], mi[0, 1], c - mi[0, 0] * (c + tx) - mi[0, 1] * (c + ty),
        mi[1, 0], mi[1, 1], c - mi[1, 0] * (c + tx) - mi[1, 1] * (c + ty),
    )
    warped = img.transform((canvas, canvas), Image.AFFINE, coeffs, resample=Image.BILINEAR)
    warped = warped.filter(ImageFilter.GaussianBlur(rng.uniform(0.4, 0.9)))
    small = warped.resize((out_side, out_side), Image.LANCZOS)
    arr = np.asarray(small, dtype=np.float64)
    if arr.max() > 0:
        arr = arr / arr.max() * rng.uniform(220, 255)
    arr = np.clip(arr, 0, 255)
    arr[arr < 25] = 0  # clean background
    return arr.astype(np.uint8)


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(img.tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def write_pgm(path, arr):
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(arr.astype(np.uint8).tobytes())


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="assets")
    parser.add_argument("--count", type=int, default=1100)
    parser.add_argument("--seed", type=int, default=20240901)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    out = Path(args.out)
    (out / "digits").mkdir(parents=True, exist_ok=True)
    (out / "letters").mkdir(parents=True, exist_ok=True)

    glyphs = {
        (d, fp): render_glyph(str(d), fp)
        for d in range(10)
        for fp in FONTS
    }
    images, labels = [], []
    for i in range(args.count):
        d = i % 10
        fp = FONTS[rng.randrange(len(FONTS))]
        images.append(jitter_digit(rng, glyphs[(d, fp)]))
        labels.append(d)
    write_idx_images(out / "digits" / "train-images.idx3", images)
    write_idx_labels(out / "digits" / "train-labels.idx1", labels)

    serif = "/usr/share/fonts/truetype/dejavu/DejaVuSerif.ttf"
    for ch in "ABCDEFGHIJKLMNOPQRSTUVWXYZ":
        img = render_glyph(ch, serif, size=30, canvas=40)
        arr = np.asarray(img, dtype=np.uint8).copy()
        arr[arr < 25] = 0
        write_pgm(out / "letters" / f"{ch}.pgm", arr)

    print(f"wrote {len(images)} digit rasters and 26 letter rasters under {out}")


if __name__ == "__main__":
    main()
