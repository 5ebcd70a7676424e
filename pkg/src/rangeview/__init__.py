"""Range-view LiDAR toolkit: beam calibration, range-image projection,
diffusion sampling and generative-evaluation metrics."""

from .calibration import (HoughAccumulator, HoughConfig, accumulate_votes, assign_beam,
                          calibrate, extract_beams)
from .geometry import (BeamModel, PointCloud, SphericalCoord, beam_spherical_to_cart,
                       cart_to_beam_spherical, cart_to_spherical)
from .projection import Normalizer, RangeImage, denormalize, normalize, project, unproject

__version__ = "0.1.0"

__all__ = [
    "BeamModel", "HoughAccumulator", "HoughConfig", "Normalizer", "PointCloud",
    "RangeImage", "SphericalCoord", "accumulate_votes", "assign_beam",
    "beam_spherical_to_cart", "calibrate", "cart_to_beam_spherical",
    "cart_to_spherical", "denormalize", "extract_beams", "normalize", "project",
    "unproject",
]
