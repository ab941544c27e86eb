"""Integer-coded strings and the byte codecs used by the command line."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

TextLike = Union["Text", str, bytes, Sequence[int], np.ndarray]


@dataclass(frozen=True, eq=False)
class Text:
    """A finite sequence of symbol codes over ``range(alphabet_size)``."""

    symbols: np.ndarray
    alphabet_size: int

    def __post_init__(self):
        codes = np.ascontiguousarray(self.symbols, dtype=np.int64)
        if codes.ndim != 1:
            raise ValueError("Text symbols must be one-dimensional")
        if self.alphabet_size < 1:
            raise ValueError("alphabet_size must be positive")
        if codes.size and (codes.min() < 0 or codes.max() >= self.alphabet_size):
            raise ValueError(
                f"symbol codes must lie in [0, {self.alphabet_size})"
            )
        codes.setflags(write=False)
        object.__setattr__(self, "symbols", codes)

    def __len__(self) -> int:
        return int(self.symbols.size)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Text(self.symbols[item], self.alphabet_size)
        return int(self.symbols[item])

    def __iter__(self):
        return iter(self.symbols.tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Text):
            return NotImplemented
        return np.array_equal(self.symbols, other.symbols)

    def __hash__(self) -> int:
        return hash(self.symbols.tobytes())

    def __repr__(self) -> str:
        head = self.symbols[:16].tolist()
        more = "..." if len(self) > 16 else ""
        return f"Text({head}{more}, n={len(self)}, sigma={self.alphabet_size})"

    @classmethod
    def from_str(cls, s: str) -> "Text":
        return cls(np.array([ord(c) for c in s], dtype=np.int64),
                   max(256, max(map(ord, s), default=0) + 1))

    @classmethod
    def random(cls, n: int, alphabet_size: int, rng: np.random.Generator) -> "Text":
        return cls(rng.integers(0, alphabet_size, size=n), alphabet_size)


def as_text(x: TextLike, alphabet_size: int | None = None) -> Text:
    """Coerce strings, bytes, integer sequences and arrays to :class:`Text`."""
    if isinstance(x, Text):
        return x
    if isinstance(x, str):
        t = Text.from_str(x)
    elif isinstance(x, (bytes, bytearray)):
        t = Text(np.frombuffer(bytes(x), dtype=np.uint8).astype(np.int64), 256)
    else:
        arr = np.asarray(x, dtype=np.int64)
        t = Text(arr, int(arr.max()) + 1 if arr.size else 1)
    if alphabet_size is not None:
        return Text(t.symbols, alphabet_size)
    return t


def codes(x: TextLike) -> np.ndarray:
    """Plain int64 code array for any text-like input."""
    if isinstance(x, Text):
        return x.symbols
    return as_text(x).symbols


def compact_pair(x: TextLike, y: TextLike) -> tuple[np.ndarray, np.ndarray, int]:
    """Relabel the symbols of both strings onto ``0..k-1`` (equality preserved)."""
    cx, cy = codes(x), codes(y)
    both = np.concatenate([cx, cy])
    uniq, inv = np.unique(both, return_inverse=True)
    return inv[: cx.size], inv[cx.size:], max(int(uniq.size), 1)


# -- codecs ------------------------------------------------------------------

CODECS = ("raw", "hex16")


def decode(data: bytes, codec: str = "raw") -> Text:
    """Raw bytes are symbol codes; ``hex16`` packs two big-endian bytes per symbol."""
    if codec == "raw":
        return Text(np.frombuffer(data, dtype=np.uint8).astype(np.int64), 256)
    if codec == "hex16":
        if len(data) % 2:
            raise ValueError("hex16 input must have an even number of bytes")
        return Text(np.frombuffer(data, dtype=">u2").astype(np.int64), 1 << 16)
    raise ValueError(f"unknown codec {codec!r}")


def encode(x: Text, codec: str = "raw") -> bytes:
    if codec == "raw":
        if len(x) and x.symbols.max() > 255:
            raise ValueError("raw codec holds codes < 256; use hex16")
        return x.symbols.astype(np.uint8).tobytes()
    if codec == "hex16":
        if len(x) and x.symbols.max() >= 1 << 16:
            raise ValueError("hex16 codec holds codes < 65536")
        return x.symbols.astype(">u2").tobytes()
    raise ValueError(f"unknown codec {codec!r}")
