"""Uniform mirror matchings and the lazy, order-independent disorder field.

A mirror at a site is a fixed-point-free involution m of the 2d lattice
directions; the induced scattering sends an incoming velocity p to -m(p),
which makes reversibility and the no-U-turn rule hold by construction.
There are (2d-1)!! such matchings and the disorder law picks one uniformly
and independently per site.

Site values are produced by a stateless 64-bit mixing function of
(seed, realization, site index), so any query order, interleaving, or
worker schedule yields identical fields.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache

from .geometry import SlabGeometry, Velocity

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """splitmix64 output function: bijective on 64-bit words, full avalanche."""
    x = (x + _GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & MASK64
    return x ^ (x >> 31)


def derive_key(seed: int, realization: int) -> int:
    """Per-realization field key: the realization-th splitmix64 output of the
    hashed seed, so keys are distinct per realization and asymmetric in the
    two arguments."""
    return mix64((mix64(seed & MASK64) + realization * _GOLDEN) & MASK64)


def site_hash(key: int, site_index: int) -> int:
    return mix64(key ^ mix64(site_index))


def count_matchings(d: int) -> int:
    """(2d-1)!! — the number of fixed-point-free involutions of 2d directions."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    out = 1
    for k in range(3, 2 * d, 2):
        out *= k
    return out


@dataclass(frozen=True)
class MirrorMatching:
    """Pairing of the 2d direction indices; partner[i] is i's partner."""

    partner: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.partner)
        if n < 4 or n % 2:
            raise ValueError(f"matching needs an even number >= 4 of directions, got {n}")
        for i, j in enumerate(self.partner):
            if j == i:
                raise ValueError(f"matching has fixed point at direction {i}")
            if not 0 <= j < n or self.partner[j] != i:
                raise ValueError("matching is not an involution")

    def scatter_index(self, index: int) -> int:
        """Outgoing direction index for incoming index: negation of the partner."""
        return self.partner[index] ^ 1

    def scatter(self, p: Velocity) -> Velocity:
        return Velocity.from_index(self.scatter_index(p.index))


def scatter(m: MirrorMatching, p: Velocity) -> Velocity:
    """Scattering rule: outgoing velocity is -m(p)."""
    return m.scatter(p)


@lru_cache(maxsize=None)
def all_matchings(d: int) -> tuple[MirrorMatching, ...]:
    """All (2d-1)!! matchings, in a fixed canonical order.

    The order pairs the lowest unpaired direction with each larger partner in
    increasing order and recurses; it is the index space used by the lazy
    disorder field and the exhaustive oracle.
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    n = 2 * d
    out: list[MirrorMatching] = []

    def build(unpaired: tuple[int, ...], partner: list[int]) -> None:
        if not unpaired:
            out.append(MirrorMatching(tuple(partner)))
            return
        a = unpaired[0]
        for b in unpaired[1:]:
            partner[a], partner[b] = b, a
            build(tuple(u for u in unpaired if u not in (a, b)), partner)
        partner[a] = -1

    build(tuple(range(n)), [-1] * n)
    assert len(out) == count_matchings(d)
    return tuple(out)


def sample_matching(d: int, rng: random.Random) -> MirrorMatching:
    """Draw a uniform matching by sequential pairing.

    Each round pairs the lowest unpaired direction with a uniform choice among
    the remaining ones; the step probabilities multiply to exactly 1/(2d-1)!!.
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    partner = [-1] * (2 * d)
    unpaired = list(range(2 * d))
    while unpaired:
        a = unpaired.pop(0)
        b = unpaired.pop(rng.randrange(len(unpaired)))
        partner[a], partner[b] = b, a
    return MirrorMatching(tuple(partner))


@dataclass
class DisorderField:
    """Lazily materialized mirror assignment for one disorder realization.

    Matchings are a pure function of (seed, realization, site), memoized per
    visited site; the memo never grows beyond the set of distinct sites seen.
    """

    geom: SlabGeometry
    seed: int
    realization: int = 0
    _memo: dict[tuple[int, ...], MirrorMatching] = field(
        default_factory=dict, repr=False
    )

    def __post_init__(self) -> None:
        self._key = derive_key(self.seed, self.realization)
        self._table = all_matchings(self.geom.dim)

    def matching_at(self, site: tuple[int, ...]) -> MirrorMatching:
        hit = self._memo.get(site)
        if hit is None:
            idx = site_hash(self._key, self.geom.site_index(site))
            hit = self._table[idx % len(self._table)]
            self._memo[site] = hit
        return hit

    @property
    def memo_size(self) -> int:
        return len(self._memo)


def field_at(field: DisorderField, site: tuple[int, ...]) -> MirrorMatching:
    return field.matching_at(site)


@dataclass(frozen=True)
class FrozenDisorder:
    """Explicit site -> matching table; used by the exhaustive oracle."""

    table: dict[tuple[int, ...], MirrorMatching]

    def matching_at(self, site: tuple[int, ...]) -> MirrorMatching:
        return self.table[site]
