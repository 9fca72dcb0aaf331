import io
import math
from importlib import resources
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from empathbot.images import ImageInput, ImageSource

DATA_DIR = Path(str(resources.files("empathbot").joinpath("data")))
MINI_SET = DATA_DIR / "mini_set"
FIXTURES = DATA_DIR / "fixtures"


def encode(im: Image.Image, fmt: str = "PNG") -> bytes:
    buf = io.BytesIO()
    im.save(buf, format=fmt)
    return buf.getvalue()


def solid_image(rgb, size=(32, 32), fmt="PNG") -> ImageInput:
    return ImageInput.from_bytes(encode(Image.new("RGB", size, rgb), fmt), ImageSource.DATASET)


def array_image(arr: np.ndarray, fmt="PNG") -> ImageInput:
    return ImageInput.from_bytes(encode(Image.fromarray(arr), fmt), ImageSource.DATASET)


@pytest.fixture
def red_image() -> ImageInput:
    return ImageInput.from_file(FIXTURES / "solid_red.png", ImageSource.DATASET)


def euler_final_pose(action, wheelbase_m: float, dt: float = 1e-4):
    """Forward-Euler reference for the unicycle model.

    Intentionally shares no code with the closed-form synthesis; the only
    common ground is the kinematic model itself.
    """
    x = y = theta = 0.0
    for seg in action.segments:
        v = 0.5 * (seg.v_left + seg.v_right)
        w = (seg.v_right - seg.v_left) / wheelbase_m
        for _ in range(round(seg.duration_s / dt)):
            x += v * math.cos(theta) * dt
            y += v * math.sin(theta) * dt
            theta += w * dt
    return x, y, theta
