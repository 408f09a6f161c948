"""Zero-temperature Ising droplets: simulators, particle pictures and scaling limits."""

from ._backend import COMPILED
from .dynamics import extinction_time, run_graphical, run_kmc
from .geometry import PlanarShape, SupportFunction, hausdorff_distance
from .lattice import FieldParameter, SpinConfiguration, droplet_of, init_from_shape
from .rng import ClockField

__version__ = "0.1.0"

__all__ = [
    "COMPILED", "ClockField", "FieldParameter", "PlanarShape", "SpinConfiguration",
    "SupportFunction", "droplet_of", "extinction_time", "hausdorff_distance", "init_from_shape",
    "run_graphical", "run_kmc",
]
