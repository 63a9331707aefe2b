"""
Phase-field -> pixel labeling and the one-hot tensor view.

Channel order of the one-hot view is fixed: (variant1, variant2, ferrite),
i.e. red / green / blue in previews.
"""
import numpy as np

from core.errors import DimensionError
from core.types import FERRITE, VARIANT1, VARIANT2, MicrostructureImage

CHANNEL_LABELS = (VARIANT1, VARIANT2, FERRITE)
_LABEL_CHANNEL = np.array([2, 0, 1])   # label -> channel
_CHANNEL_LABEL = np.array(CHANNEL_LABELS, dtype=np.uint8)
# label -> preview colour (ferrite blue, variant1 red, variant2 green)
LABEL_RGB = np.array([[0, 0, 255], [255, 0, 0], [0, 255, 0]], dtype=np.uint8)


def label_pixels(phi1, phi2):
    """
    Label each pixel by the largest of (phi0, phi1, phi2), phi0 = 1 - phi1 - phi2.
    Fields are clamped to [0, 1] first. Exact ties go to ferrite, then
    variant1, then variant2.
    """
    phi1 = np.asarray(phi1, dtype=np.float64)
    phi2 = np.asarray(phi2, dtype=np.float64)
    if phi1.shape != phi2.shape:
        raise DimensionError(f"phase fields differ in shape: {phi1.shape} vs {phi2.shape}")
    if phi1.ndim != 2:
        raise DimensionError(f"phase fields must be 2-D, got {phi1.ndim}-D")

    p1 = np.clip(phi1, 0.0, 1.0)
    p2 = np.clip(phi2, 0.0, 1.0)
    p0 = 1.0 - p1 - p2
    # argmax keeps the first maximum, so stacking order is the tie rule
    stacked = np.stack([p0, p1, p2], axis=0)
    labels = np.argmax(stacked, axis=0).astype(np.uint8)
    return MicrostructureImage(labels)


def one_hot(image):
    """Return the height x width x 3 float tensor in (variant1, variant2, ferrite) order."""
    channels = _LABEL_CHANNEL[image.labels]
    out = np.zeros(image.labels.shape + (3,), dtype=np.float64)
    np.put_along_axis(out, channels[..., None], 1.0, axis=-1)
    return out


def decode_one_hot(tensor):
    """Argmax-decode a (..., H, W, 3) channel tensor back to labels."""
    tensor = np.asarray(tensor)
    if tensor.shape[-1] != 3:
        raise DimensionError(f"expected 3 channels, got {tensor.shape[-1]}")
    channel = np.argmax(tensor, axis=-1)
    labels = _CHANNEL_LABEL[channel]
    if labels.ndim == 2:
        return MicrostructureImage(labels)
    return [MicrostructureImage(lbl) for lbl in labels]


def martensite_fraction(image):
    """(#variant1 + #variant2) / #pixels."""
    labels = image.labels
    return float(np.count_nonzero(labels != FERRITE)) / labels.size


def to_rgb(image):
    """H x W x 3 uint8 preview with row 0 (y = 0) at the bottom."""
    return LABEL_RGB[image.labels[::-1]]
