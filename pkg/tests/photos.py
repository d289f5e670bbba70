"""Freely licensed natural photos bundled with scikit-image and scikit-learn."""

from __future__ import annotations

import functools

import numpy as np
from PIL import Image

from bpbe import RgbImage


def fit(arr: np.ndarray, width: int, height: int) -> RgbImage:
    """Resize to cover ``width x height`` then centre-crop."""
    im = Image.fromarray(np.ascontiguousarray(arr[..., :3]))
    scale = max(width / im.width, height / im.height)
    if scale != 1:
        im = im.resize((round(im.width * scale), round(im.height * scale)), Image.LANCZOS)
    a = np.asarray(im)
    y0, x0 = (a.shape[0] - height) // 2, (a.shape[1] - width) // 2
    return RgbImage(a[y0 : y0 + height, x0 : x0 + width])


@functools.cache
def _raw() -> dict[str, np.ndarray]:
    from skimage import data
    from sklearn.datasets import load_sample_images

    china, flower = load_sample_images().images
    return {
        "astronaut": data.astronaut(),
        "coffee": data.coffee(),
        "chelsea": data.chelsea(),
        "rocket": data.rocket(),
        "motorcycle": data.stereo_motorcycle()[0],
        "china": china,
        "flower": flower,
    }


def photos(width: int, height: int, names=None) -> dict[str, RgbImage]:
    raw = _raw()
    return {n: fit(raw[n], width, height) for n in (names or raw)}
