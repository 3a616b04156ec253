from .env import (
    BoxSpace,
    DiscreteSpace,
    ProtocolError,
    RemoteScalingEnv,
    TransportError,
)

__version__ = "0.1.0"

__all__ = [
    "BoxSpace",
    "DiscreteSpace",
    "ProtocolError",
    "RemoteScalingEnv",
    "TransportError",
]
