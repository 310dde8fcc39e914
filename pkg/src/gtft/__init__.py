"""Finite-time-consensus topologies and decentralized gradient tracking."""
from . import algorithms, matkit, optim, topology
from .kernels import BACKEND

__all__ = ["BACKEND", "algorithms", "matkit", "optim", "topology"]
__version__ = "0.1.0"
