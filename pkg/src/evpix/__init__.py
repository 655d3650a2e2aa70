"""Behavioral DVS pixel and array simulator."""

from evpix.errors import EvpixError
from evpix.params import BiasConfig, PixelParams
from evpix.bias import DerivedPixelParams, derive
from evpix.pixel import Event, PixelState, step_pixel
from evpix.stimulus import Stimulus
from evpix.array import ArrayConfig, EventStream, simulate, per_pixel_rates

__version__ = "0.1.0"

__all__ = [
    "ArrayConfig",
    "BiasConfig",
    "DerivedPixelParams",
    "Event",
    "EventStream",
    "EvpixError",
    "PixelParams",
    "PixelState",
    "Stimulus",
    "derive",
    "per_pixel_rates",
    "simulate",
    "step_pixel",
]
