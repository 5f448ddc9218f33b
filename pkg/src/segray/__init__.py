"""Line-segment energies of tensor fields and log-concavity checks for
heat and eigen solutions on convex domains."""

from .errors import SegrayError

__version__ = "0.1.0"

__all__ = ["SegrayError", "__version__"]
