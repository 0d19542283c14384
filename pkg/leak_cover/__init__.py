"""
Leak-Detection Device Placement

Places leak-detection devices anywhere in the plane to cover the weighted
length of a pipeline network, either as much as possible with p devices or a
target fraction with as few devices as possible.
"""

__version__ = "1.0.0"
__author__ = "Leak Cover Team"

from .core.network_model import Network, load_network, scale_to_disk, total_weighted_length
from .core.geometry import Ball, Norm
from .core.coverage import Placement, evaluate
from .core.placement import RunConfig, solve
from .api.client import LeakCoverClient, LeakCoverConfig

__all__ = [
    "Network",
    "load_network",
    "scale_to_disk",
    "total_weighted_length",
    "Ball",
    "Norm",
    "Placement",
    "evaluate",
    "RunConfig",
    "solve",
    "LeakCoverClient",
    "LeakCoverConfig",
]
