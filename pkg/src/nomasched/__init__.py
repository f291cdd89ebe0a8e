"""Discrete-time NOMA uplink scheduling simulator for IIoT offloading."""

from .config import SimConfig, load_config
from .env import Allocation, NomaEnv

__all__ = ["SimConfig", "load_config", "Allocation", "NomaEnv"]
__version__ = "0.1.0"
