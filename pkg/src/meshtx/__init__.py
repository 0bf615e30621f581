"""Behavioral model of an 802.11s mesh MAC transmitter."""

from .frames import Frame, FrameKind, MacAddress, MeshHeader, classify, subtype_code

__version__ = "0.1.0"

__all__ = ["Frame", "FrameKind", "MacAddress", "MeshHeader", "classify", "subtype_code"]
