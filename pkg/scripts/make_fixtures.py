#!/usr/bin/env python3
"""Regenerate the bundled mini dataset and the fixture images.

The mini set holds 16 synthetic 64x64 JPEGs, two per affect, labeled with
EmoSet-style sidecar files.  Scene colors are chosen deliberately far from
the mock's canonical palette for each affect, so an evaluation run over the
set must report a zero mimicry rate; the script asserts a generous margin
over the 0.12 flag threshold after JPEG encoding.  Output is deterministic,
so reruns leave committed bytes unchanged.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from empathbot.affect import AffectLabel, Color
from empathbot.evaluation import detect_mimicry
from empathbot.images import ImageInput, ImageSource
from empathbot.leds import ColorPalette
from empathbot.vlm import CANONICAL_RESPONSES

DATA = Path(__file__).resolve().parents[1] / "src" / "empathbot" / "data"
SIZE = 64
MARGIN = 0.18  # required mimicry distance, well above the 0.12 flag line

# Two flat-band compositions per affect, far from its canonical palette.
SCENES: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "amusement": (("#E8E8F0", "#3F51B5", "#E91E63"), ("#00BCD4", "#E8E8F0")),
    "awe": (("#FFF8E1", "#FFE082"), ("#FFE082", "#FFF8E1", "#FFE082")),
    "contentment": (("#D7CCC8", "#BCAAA4", "#A1887F"), ("#A1887F", "#D7CCC8")),
    "excitement": (("#E91E63", "#9C27B0", "#3F51B5"), ("#3F51B5", "#9C27B0")),
    "anger": (("#455A64", "#78909C", "#B0BEC5"), ("#B0BEC5", "#455A64")),
    "disgust": (("#F8BBD0", "#CE93D8"), ("#CE93D8", "#F8BBD0", "#CE93D8")),
    "fear": (("#0D1B2A", "#1B263B", "#415A77"), ("#415A77", "#0D1B2A")),
    "sadness": (("#ECEFF1", "#CFD8DC", "#B0BEC5"), ("#CFD8DC", "#ECEFF1")),
}


def bands(colors: tuple[str, ...], horizontal: bool) -> np.ndarray:
    rgb = [Color.from_hex(h) for h in colors]
    arr = np.zeros((SIZE, SIZE, 3), dtype=np.uint8)
    edges = np.linspace(0, SIZE, len(rgb) + 1).round().astype(int)
    for c, lo, hi in zip(rgb, edges, edges[1:]):
        if horizontal:
            arr[lo:hi, :] = (c.r, c.g, c.b)
        else:
            arr[:, lo:hi] = (c.r, c.g, c.b)
    return arr


def write_mini_set() -> None:
    mini = DATA / "mini_set"
    mini.mkdir(parents=True, exist_ok=True)
    for label, compositions in sorted(SCENES.items()):
        for idx, colors in enumerate(compositions, start=1):
            stem = f"{label}_{idx:02d}"
            arr = bands(colors, horizontal=(idx == 2))
            Image.fromarray(arr).save(mini / f"{stem}.jpg", "JPEG", quality=95)
            sidecar = json.dumps({"emotion": label}, indent=2) + "\n"
            (mini / f"{stem}.json").write_text(sidecar, encoding="utf-8")

    # the whole point of the set: canonical palettes must not look mimicked
    worst = ("", 1.0)
    for label, compositions in sorted(SCENES.items()):
        palette = ColorPalette.from_hex(list(CANONICAL_RESPONSES[AffectLabel.parse(label)][2]))
        for idx in range(1, len(compositions) + 1):
            path = mini / f"{label}_{idx:02d}.jpg"
            image = ImageInput.from_file(path, ImageSource.DATASET)
            dist = detect_mimicry(palette, image).distance
            assert dist >= MARGIN, f"{path.name}: mimicry distance {dist:.3f} < {MARGIN}"
            if dist < worst[1]:
                worst = (path.name, dist)
    print(f"mini_set: 16 images, worst mimicry margin {worst[1]:.3f} ({worst[0]})")


def write_fixtures() -> None:
    fixtures = DATA / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)

    Image.new("RGB", (SIZE, SIZE), (255, 0, 0)).save(fixtures / "solid_red.png", "PNG")

    half = np.zeros((SIZE, SIZE, 3), dtype=np.uint8)
    half[:, SIZE // 2 :] = 255
    Image.fromarray(half).save(fixtures / "half_bw.png", "PNG")

    rng = np.random.default_rng(42)
    noise = rng.integers(0, 256, (SIZE, SIZE, 3), dtype=np.uint8)
    Image.fromarray(noise).save(fixtures / "noisy.png", "PNG")

    fallback = {
        "emoji": "\U0001F610",
        "explanation": "fallback",
        "motion": "idle",
        "palette": ["#808080"],
    }
    (fixtures / "fallback.json").write_text(
        json.dumps(fallback, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print("fixtures: solid_red.png, half_bw.png, noisy.png, fallback.json")


if __name__ == "__main__":
    write_mini_set()
    write_fixtures()
