"""802.11 frame check sequence.

CRC-32, polynomial 0x04C11DB7, reflected input/output, initial value and
final XOR all ones. This is exactly the zlib CRC, so zlib does the work.
"""

import zlib


def compute_fcs(data: bytes) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


def verify_fcs(frame_bytes: bytes) -> bool:
    """True when the trailing 4 little-endian bytes match the CRC of the rest."""
    if len(frame_bytes) < 4:
        return False
    body, trailer = frame_bytes[:-4], frame_bytes[-4:]
    return compute_fcs(body) == int.from_bytes(trailer, "little")
