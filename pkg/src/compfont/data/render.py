"""Optional rasterization of vector font files into the image-directory layout."""
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .dataset import char_to_filename


def rasterize(font_path, chars, image_size=128, padding=0.1):
    """Render ``chars`` with a TrueType/OpenType font, centred, as uint8 arrays."""
    box = int(round(image_size * (1 - 2 * padding)))
    font = ImageFont.truetype(str(font_path), size=box)
    out = {}
    for char in chars:
        im = Image.new("L", (image_size, image_size), 255)
        draw = ImageDraw.Draw(im)
        left, top, right, bottom = draw.textbbox((0, 0), char, font=font)
        x = (image_size - (right - left)) / 2 - left
        y = (image_size - (bottom - top)) / 2 - top
        draw.text((x, y), char, fill=0, font=font)
        out[char] = np.asarray(im, dtype=np.uint8)
    return out


def rasterize_to_dir(font_path, chars, out_root, font_id=None, image_size=128):
    font_id = font_id or Path(font_path).stem
    target = Path(out_root) / font_id
    target.mkdir(parents=True, exist_ok=True)
    for char, arr in rasterize(font_path, chars, image_size).items():
        Image.fromarray(arr, mode="L").save(target / char_to_filename(char))
    return target
