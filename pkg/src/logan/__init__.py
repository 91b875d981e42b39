"""Color-conditioned logo generation workbench."""

__version__ = "0.1.0"

from .colors import CLASSES, ColorLabel, Palette, Rgb, label_image

__all__ = ["CLASSES", "ColorLabel", "Palette", "Rgb", "label_image", "__version__"]
