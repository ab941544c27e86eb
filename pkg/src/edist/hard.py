"""Generators for the hard pairs: rotations, substitution products, binary codes."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Dict, Mapping, Tuple

import numpy as np

from .exact import edd, lcs
from .text import Text, TextLike, as_text, codes


@dataclass(frozen=True)
class HardInstanceParams:
    sigma: int
    block_len: int
    shift_mag: int
    levels: int
    bin_len: int
    seed: int = 0
    target_len: int | None = None

    def __post_init__(self):
        if self.sigma < 2:
            raise ValueError("sigma must be at least 2")
        if not 1 <= self.shift_mag <= self.block_len:
            raise ValueError("shift_mag must lie in [1, block_len]")
        if self.levels < 1 or self.bin_len < 1:
            raise ValueError("levels and bin_len must be positive")
        if self.target_len is not None and self.length > self.target_len:
            raise ValueError(f"B^levels * T = {self.length} exceeds {self.target_len}")

    @property
    def symbol_len(self) -> int:
        return self.block_len ** self.levels

    @property
    def length(self) -> int:
        return self.symbol_len * self.bin_len

    @property
    def same_bound(self) -> float:
        """Relative indel bound ``2 * levels * s / B`` for same-family pairs."""
        return 2.0 * self.levels * self.shift_mag / self.block_len

    @classmethod
    def desk(cls, seed: int = 0) -> "HardInstanceParams":
        return cls(sigma=8, block_len=64, shift_mag=4, levels=2, bin_len=8, seed=seed)


# -- elementary operations -------------------------------------------------------


def cyclic_shift(x: TextLike, r: int) -> Text:
    """Rotate left by ``r`` (mod ``|x|``)."""
    t = as_text(x)
    if len(t) == 0:
        raise ValueError("cannot rotate an empty text")
    return Text(np.roll(t.symbols, -(r % len(t))), t.alphabet_size)


def sample_shift_dist(x: TextLike, s: int, rng: np.random.Generator) -> Text:
    """A draw from the shift distribution: rotate by ``r`` uniform in ``[1, s]``."""
    t = as_text(x)
    if not 1 <= s <= len(t):
        raise ValueError(f"shift range s={s} outside [1, {len(t)}]")
    return cyclic_shift(t, int(rng.integers(1, s + 1)))


class SubstitutionMap:
    """Images ``B(a)`` of equal length, one per source symbol."""

    def __init__(self, images: Mapping[int, TextLike] | np.ndarray, alphabet_size: int | None = None):
        if isinstance(images, np.ndarray):
            images = {a: images[a] for a in range(images.shape[0])}
        self.images: Dict[int, Text] = {}
        for a, img in images.items():
            self.images[int(a)] = as_text(img) if alphabet_size is None else as_text(img, alphabet_size)
        lengths = {len(t) for t in self.images.values()}
        if len(lengths) > 1:
            raise ValueError("all images must have the same length")
        self.image_len = lengths.pop() if lengths else 0
        self.alphabet_size = max((t.alphabet_size for t in self.images.values()), default=1)

    def __len__(self) -> int:
        return len(self.images)

    def table(self, sigma: int) -> np.ndarray:
        out = np.zeros((sigma, self.image_len), dtype=np.int64)
        for a, t in self.images.items():
            if a < sigma:
                out[a] = t.symbols
        return out


def substitution_product(x: TextLike, B: SubstitutionMap) -> Text:
    """Concatenation ``B(x_1) B(x_2) ... B(x_n)``."""
    cx = codes(x)
    missing = set(np.unique(cx).tolist()) - set(B.images)
    if missing:
        raise KeyError(f"no image for symbols {sorted(missing)}")
    if cx.size == 0:
        return Text(np.zeros(0, dtype=np.int64), B.alphabet_size)
    table = B.table(int(cx.max()) + 1)
    return Text(table[cx].ravel(), B.alphabet_size)


def lambda_B(B: SubstitutionMap) -> Fraction:
    """Largest normalised LCS between images of distinct symbols."""
    if len(B) < 2:
        raise ValueError("need at least two images")
    best = 0
    for a, b in combinations(sorted(B.images), 2):
        best = max(best, lcs(B.images[a], B.images[b]))
    return Fraction(best, B.image_len)


def random_binary_code(sigma: int, T: int, rng: np.random.Generator) -> SubstitutionMap:
    return SubstitutionMap(rng.integers(0, 2, size=(sigma, T)), alphabet_size=2)


def to_binary(x: TextLike, code: SubstitutionMap) -> Text:
    """Substitution product with a binary code."""
    for img in code.images.values():
        if len(img) and img.symbols.max() > 1:
            raise ValueError("binary code images must use symbols 0 and 1")
    return substitution_product(x, code)


def code_far_property(code: SubstitutionMap) -> bool:
    """Pairwise image LCS at most ``15/16`` of the image length."""
    return lambda_B(code) <= Fraction(15, 16)


def code_overlap_lcs(code: SubstitutionMap) -> Fraction:
    """Max ``lcs(B_a, B')`` over windows ``B'`` of ``B_b B_c`` overlapping both by ``>= T/10``.

    A diagnostic; the corresponding condition asks for at most ``0.98``.
    """
    T = code.image_len
    keys = sorted(code.images)
    lo = int(np.ceil(T / 10))
    best = 0
    for b in keys:
        for c in keys:
            joined = np.concatenate([code.images[b].symbols, code.images[c].symbols])
            for off in range(lo, T - lo + 1):
                window = joined[off: off + T]
                for a in keys:
                    best = max(best, lcs(code.images[a], window))
    return Fraction(best, T)


def product_ratio(x: TextLike, y: TextLike, B: SubstitutionMap) -> float:
    """``edd(x*B, y*B) / (n' * edd(x, y))``; 1.0 when ``x == y``."""
    base = edd(x, y)
    if base == 0:
        return 1.0
    return edd(substitution_product(x, B), substitution_product(y, B)) / (B.image_len * base)


# -- the recursive construction -----------------------------------------------------


class HardInstance:
    """Base strings ``x_a``, a binary code and samplers for the two families."""

    def __init__(self, params: HardInstanceParams, a_star: int = 0, b_star: int = 1):
        if a_star == b_star or not (0 <= a_star < params.sigma and 0 <= b_star < params.sigma):
            raise ValueError("a_star and b_star must be distinct symbols")
        self.params = params
        self.a_star, self.b_star = a_star, b_star
        rng = np.random.default_rng(np.random.SeedSequence([params.seed, 0x4A4D]))
        self.base = rng.integers(0, params.sigma, size=(params.sigma, params.block_len))
        self.code = rng.integers(0, 2, size=(params.sigma, params.bin_len))

    def _rotated_blocks(self, mother: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        B = self.params.block_len
        r = rng.integers(1, self.params.shift_mag + 1, size=mother.size)
        cols = (np.arange(B)[None, :] + r[:, None]) % B
        return self.base[mother[:, None], cols].ravel()

    def sample_E(self, level: int, a: int, rng: np.random.Generator) -> np.ndarray:
        """A draw from ``E_{level, a}`` as a code array of length ``B**level``."""
        if level < 1:
            raise ValueError("level must be at least 1")
        s = self._rotated_blocks(np.array([a]), rng)
        for _ in range(level - 1):
            s = self._rotated_blocks(s, rng)
        return s

    def sample_F(self, family: int, rng: np.random.Generator, binary: bool = True) -> Text:
        a = self.a_star if family == 0 else self.b_star
        s = self.sample_E(self.params.levels, a, rng)
        if not binary:
            return Text(s, self.params.sigma)
        return Text(self.code[s].ravel(), 2)

    def manifest(self) -> Dict[str, object]:
        p = self.params
        digests = [hashlib.sha256(row.astype(np.uint8).tobytes()).hexdigest()[:16]
                   for row in self.base]
        return {"sigma": p.sigma, "block_len": p.block_len, "shift_mag": p.shift_mag,
                "levels": p.levels, "bin_len": p.bin_len, "seed": p.seed,
                "a_star": self.a_star, "b_star": self.b_star, "base_digests": digests}


def gen_hard_pair(params: HardInstanceParams, which: str, rng: np.random.Generator,
                  binary: bool = True) -> Tuple[Text, Text]:
    """Two independent draws: both from family 0 (``same``) or one from each (``cross``)."""
    if which not in ("same", "cross"):
        raise ValueError("which must be 'same' or 'cross'")
    inst = HardInstance(params)
    first = inst.sample_F(0, rng, binary)
    second = inst.sample_F(0 if which == "same" else 1, rng, binary)
    return first, second
