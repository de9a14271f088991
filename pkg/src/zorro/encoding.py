"""Fixed-width integer packing and a bounds-checked byte reader.

Every object that ever gets hashed or persisted round-trips through these
helpers, so all widths are fixed and all reads are strict.
"""

import struct

from .errors import MalformedEncoding


def pack_u8(v: int) -> bytes:
    return struct.pack(">B", v)


def pack_u32(v: int) -> bytes:
    return struct.pack(">I", v)


def pack_u64(v: int) -> bytes:
    return struct.pack(">Q", v)


class Reader:
    """Sequential reader that turns any overrun or leftover into MalformedEncoding."""

    def __init__(self, data: bytes):
        self._data = bytes(data)
        self._off = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self._off + n > len(self._data):
            raise MalformedEncoding("truncated input")
        chunk = self._data[self._off : self._off + n]
        self._off += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def expect_end(self):
        if self._off != len(self._data):
            raise MalformedEncoding("trailing bytes")
