"""System parameters, subset indexing, message splitting, and cache placement.

Each of the two messages is split into one block of N-1 bits per size-t user
subset plus one extra bit per size-(t+1) subset.  Users store every block
whose subset contains them; extra bits are never cached.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from . import gf2


class LengthMismatchError(ValueError):
    """Raw message input does not have exactly L bits."""


class NonIntegralSplitError(ValueError):
    """Requested cache fraction does not yield a whole number of bits."""


@dataclass(frozen=True)
class SystemParams:
    """Problem instance: 2 messages, num_users cache-equipped users,
    num_dbs databases, and placement parameter t (each block is replicated
    at t users).
    """

    num_users: int
    num_dbs: int
    t: int
    num_messages: int = 2

    def __post_init__(self):
        if self.num_messages != 2:
            raise ValueError("the scheme is defined for exactly 2 messages")
        if self.num_users < 2:
            raise ValueError(f"need at least 2 users, got {self.num_users}")
        if self.num_dbs < 2:
            raise ValueError(f"need at least 2 databases, got {self.num_dbs}")
        if not 1 <= self.t <= self.num_users - 1:
            raise ValueError(f"t must lie in [1, {self.num_users - 1}], got {self.t}")

    @property
    def block_len(self) -> int:
        return self.num_dbs - 1

    @property
    def num_blocks(self) -> int:
        return comb(self.num_users, self.t)

    @property
    def num_groups(self) -> int:
        return comb(self.num_users, self.t + 1)

    @property
    def message_len(self) -> int:
        """L = C(K_u,t)(N-1) + C(K_u,t+1) bits per message."""
        return self.num_blocks * self.block_len + self.num_groups


def subset_rank(subset: tuple[int, ...], n: int) -> int:
    """Lexicographic rank of a sorted subset of {1..n} among same-size subsets."""
    k = len(subset)
    r = 0
    prev = 0
    for pos, u in enumerate(subset):
        for skipped in range(prev + 1, u):
            r += comb(n - skipped, k - pos - 1)
        prev = u
    return r

def subset_unrank(r: int, n: int, k: int) -> tuple[int, ...]:
    """Inverse of subset_rank: the r-th (0-based) size-k subset of {1..n} in lex order."""
    out = []
    u = 1
    for pos in range(k):
        while True:
            block = comb(n - u, k - pos - 1)
            if r < block:
                out.append(u)
                u += 1
                break
            r -= block
            u += 1
    return tuple(out)


@dataclass(frozen=True)
class SubsetCatalog:
    """All size-t (block tags) and size-(t+1) (delivery groups) user subsets
    in lexicographic order, as strictly increasing tuples of 1-based users.
    """

    tags: tuple[tuple[int, ...], ...]
    groups: tuple[tuple[int, ...], ...]
    tag_index: dict = field(repr=False, default_factory=dict)
    group_index: dict = field(repr=False, default_factory=dict)

    @classmethod
    def build(cls, params: SystemParams) -> "SubsetCatalog":
        users = range(1, params.num_users + 1)
        tags = tuple(itertools.combinations(users, params.t))
        groups = tuple(itertools.combinations(users, params.t + 1))
        return cls(
            tags,
            groups,
            {s: i for i, s in enumerate(tags)},
            {s: i for i, s in enumerate(groups)},
        )


@dataclass(frozen=True)
class MessageLibrary:
    """The two messages laid out canonically: per message, blocks in lex tag
    order (positions ascending) followed by extra bits in lex group order.
    """

    params: SystemParams
    catalog: SubsetCatalog
    bits: np.ndarray  # shape (2, L), read-only

    def block(self, k: int, tag: tuple[int, ...]) -> np.ndarray:
        """The N-1 bits of message k's block labeled by tag."""
        off = self.catalog.tag_index[tag] * self.params.block_len
        return self.bits[k - 1, off:off + self.params.block_len]

    def extra(self, k: int, group: tuple[int, ...]) -> int:
        """Message k's extra bit for a delivery group."""
        off = self.params.num_blocks * self.params.block_len + self.catalog.group_index[group]
        return int(self.bits[k - 1, off])

    def message(self, k: int) -> np.ndarray:
        return self.bits[k - 1]


def split_messages(params: SystemParams, raw1, raw2,
                   catalog: SubsetCatalog | None = None) -> MessageLibrary:
    """Split two L-bit vectors into blocks and extra bits.

    The layout is positional, so this is just validation plus indexing;
    flatten_message() inverts it exactly.
    """
    catalog = catalog or SubsetCatalog.build(params)
    rows = []
    for raw in (raw1, raw2):
        arr = gf2.as_bits(raw)
        if arr.shape != (params.message_len,):
            raise LengthMismatchError(
                f"message must have exactly {params.message_len} bits, got {arr.shape}")
        rows.append(arr)
    return MessageLibrary(params, catalog, gf2.frozen(np.stack(rows)))


def flatten_message(lib: MessageLibrary, k: int) -> np.ndarray:
    """Reassemble message k from its blocks and extra bits (inverse of the split)."""
    parts = [lib.block(k, tag) for tag in lib.catalog.tags]
    parts.append(np.array([lib.extra(k, g) for g in lib.catalog.groups], dtype=np.uint8))
    return np.concatenate(parts)


@dataclass(frozen=True)
class UserCache:
    """Verbatim cache of one user: both messages' blocks for every tag
    containing the user (2 C(K_u-1,t-1) blocks, no extra bits).
    """

    user: int
    cached_blocks: dict  # (message k, tag) -> np.ndarray of N-1 bits

    def block(self, k: int, tag: tuple[int, ...]) -> np.ndarray:
        return self.cached_blocks[(k, tag)]

    def holds(self, tag: tuple[int, ...]) -> bool:
        return (1, tag) in self.cached_blocks

    @property
    def num_bits(self) -> int:
        return sum(b.size for b in self.cached_blocks.values())


def place_caches(params: SystemParams, lib: MessageLibrary) -> list[UserCache]:
    """Uncoded placement: user u copies block (k, tag) iff u is in tag."""
    caches = []
    for u in range(1, params.num_users + 1):
        blocks = {
            (k, tag): lib.block(k, tag)
            for tag in lib.catalog.tags if u in tag
            for k in (1, 2)
        }
        caches.append(UserCache(u, blocks))
    return caches


def memory_size(params: SystemParams) -> Fraction:
    """Normalized cache size M_t = 2 C(K_u-1,t-1)(N-1) / L."""
    cached = 2 * comb(params.num_users - 1, params.t - 1) * params.block_len
    return Fraction(cached, params.message_len)


@dataclass(frozen=True)
class NaiveDeliveryResult:
    cached_per_message: int
    broadcast: np.ndarray  # remaining bits of message 1 then message 2
    load: Fraction
    all_users_recover: bool


def naive_delivery(params: SystemParams, lib: MessageLibrary,
                   fraction: Fraction) -> NaiveDeliveryResult:
    """Demand-oblivious baseline: every user caches the identical first
    fraction*L bits of each message and the databases broadcast the rest of
    both messages, so each user trivially recovers both.  Download is
    2(1-fraction)L bits.
    """
    fraction = Fraction(fraction)
    if not 0 <= fraction <= 1:
        raise ValueError(f"cache fraction must lie in [0,1], got {fraction}")
    prefix = fraction * params.message_len
    if prefix.denominator != 1:
        raise NonIntegralSplitError(
            f"fraction {fraction} of L={params.message_len} bits is not an integer")
    prefix = int(prefix)
    broadcast = np.concatenate([lib.message(1)[prefix:], lib.message(2)[prefix:]])
    tail = params.message_len - prefix
    recovered = all(
        np.array_equal(
            np.concatenate([lib.message(k)[:prefix], broadcast[(k - 1) * tail:k * tail]]),
            lib.message(k))
        for k in (1, 2)
    )
    return NaiveDeliveryResult(
        cached_per_message=prefix,
        broadcast=broadcast,
        load=Fraction(2 * tail, params.message_len),
        all_users_recover=recovered,
    )


def random_library(params: SystemParams, seed: int,
                   catalog: SubsetCatalog | None = None) -> MessageLibrary:
    """Draw 2L uniform message bits from a stream separated from the
    coefficient randomness (same seed can drive both independently).
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    raw = rng.integers(0, 2, size=(2, params.message_len), dtype=np.uint8)
    return split_messages(params, raw[0], raw[1], catalog)


def bits_to_hex(bits) -> str:
    """Pack bits into bytes MSB-first and render as lowercase hex."""
    arr = gf2.as_bits(bits)
    return np.packbits(arr).tobytes().hex()


def hex_to_bits(text: str, nbits: int) -> np.ndarray:
    """Parse a hex string carrying nbits (MSB-first within bytes).

    The string must encode exactly ceil(nbits/8) bytes and any trailing pad
    bits must be zero.
    """
    nbytes = (nbits + 7) // 8
    try:
        data = bytes.fromhex(text)
    except ValueError as exc:
        raise ValueError(f"invalid hex string: {exc}") from exc
    if len(data) != nbytes:
        raise LengthMismatchError(
            f"expected {nbytes} bytes ({2 * nbytes} hex digits) for {nbits} bits, "
            f"got {len(data)} bytes")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    if bits[nbits:].any():
        raise ValueError("nonzero padding bits past the message end")
    return bits[:nbits]
