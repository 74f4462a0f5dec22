"""QR code generation and decoding.

Decoding uses OpenCV's QR detector; symbols are reported in reading
order (top-left origin, row-major by bounding box).
"""

from __future__ import annotations

import cv2
import numpy as np
import qrcode
from PIL import Image, UnidentifiedImageError

from ..errors import UndecodableImage
from ..records import load_image

# detector misses very small modules; upscale tiny symbols before decoding
_MIN_SIDE = 200


def generate_qr(payload: str, box_size: int = 4, border: int = 4) -> Image.Image:
    qr = qrcode.QRCode(
        error_correction=qrcode.constants.ERROR_CORRECT_M,
        box_size=box_size,
        border=border,
    )
    qr.add_data(payload)
    qr.make(fit=True)
    return qr.make_image(fill_color="black", back_color="white").get_image().convert("L")


def _as_gray(image) -> np.ndarray:
    try:
        im = load_image(image)
        im.load()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise UndecodableImage(str(exc)) from exc
    if im.mode in ("RGBA", "LA", "P"):
        bg = Image.new("RGB", im.size, "white")
        bg.paste(im.convert("RGBA"), mask=im.convert("RGBA").split()[-1])
        im = bg
    arr = np.array(im.convert("L"))
    side = min(arr.shape)
    if side < _MIN_SIDE:
        scale = int(np.ceil(_MIN_SIDE / max(side, 1)))
        arr = cv2.resize(arr, None, fx=scale, fy=scale, interpolation=cv2.INTER_NEAREST)
    return arr


def decode_all(image) -> list[str]:
    """Every QR payload found in the image, in reading order."""
    arr = _as_gray(image)
    detector = cv2.QRCodeDetector()
    ok, values, points, _ = detector.detectAndDecodeMulti(arr)
    found = []
    if ok and points is not None:
        for value, pts in zip(values, points):
            if value:
                x0, y0 = pts[:, 0].min(), pts[:, 1].min()
                found.append((y0, x0, value))
    if not found:
        # multi-detector occasionally misses a lone symbol the single path finds
        value, pts, _ = detector.detectAndDecode(arr)
        if value:
            return [value]
        return []
    # row-major: symbols whose tops lie within half a symbol height share a row
    found.sort(key=lambda t: (t[0], t[1]))
    heights = [np.ptp(p[:, 1]) for p in points] if points is not None else [0]
    tol = max(heights) / 2 if heights else 0
    rows: list[list[tuple]] = []
    for item in found:
        if rows and abs(item[0] - rows[-1][0][0]) <= tol:
            rows[-1].append(item)
        else:
            rows.append([item])
    return [v for row in rows for _, _, v in sorted(row, key=lambda t: t[1])]


def decode_qr(image) -> str | None:
    """Payload of the first QR symbol in reading order, or None."""
    values = decode_all(image)
    return values[0] if values else None
