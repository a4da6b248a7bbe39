"""Cores, periodic tilings and the overlay that pins tile interiors.

The overlay SFT lives over (tiles ∪ {∅}) × (Σ ∪ U), U the union of the
tiles. Every cell lies in exactly one placed tile T·c; if it is h·c with h
in the K-core of T it must carry the address symbol of h, otherwise a
symbol of Σ. The factor map fills each tile's core with the first locally
admissible completion of the Σ-symbols on its boundary.
"""

import itertools
import logging
import threading
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from groupshift.config import Budget
from groupshift.exceptions import InvalidCoreSet, NoCompletion, SpecError, SupportMismatch
from groupshift.group import (
    IDENTITY,
    Element,
    GroupSpec,
    WordLike,
    element_name,
    exponent_vector,
    lattice_element,
    session_for,
)
from groupshift.oracles import FreeAbelianOracle
from groupshift.pattern import Alphabet, Pattern, Support, Symbol, make_pattern, support
from groupshift.search import WindowProblem
from groupshift.sft import EMPTY_TILE, SftSpec, TileSet, create_sft, expand_wildcards, locally_admissible

logger = logging.getLogger(__name__)

ADDRESS_PREFIX = "@"

Cells = Union[Support, Iterable[Union[Element, WordLike]]]


def _cells(group: GroupSpec, cells: Cells) -> Support:
    return cells if isinstance(cells, Support) else support(group, cells)


def core(T: Cells, K: Cells, g: GroupSpec) -> Support:
    """{t ∈ T : K·t ⊆ T}."""
    tile = _cells(g, T)
    kernel = _cells(g, K)
    session = session_for(g)
    return Support(tuple(t for t in tile if all(session.multiply(k, t) in tile for k in kernel)))


@dataclass(frozen=True)
class ExactTiling:
    """A periodic tiling of ℤ^d: tiles placed at the given centers modulo the periods."""

    group: GroupSpec
    tileset: TileSet
    periods: Tuple[int, ...]
    placements: Tuple[Tuple[Tuple[int, ...], int], ...]
    centers: Dict[Tuple[int, ...], int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if not isinstance(self.group.oracle, FreeAbelianOracle):
            raise SpecError("exact tilings are supported on free abelian groups only")
        if len(self.periods) != len(self.group.base_generators) or any(p < 1 for p in self.periods):
            raise ValueError("`periods` must give one positive period per generator.")
        centers: Dict[Tuple[int, ...], int] = {}
        for center, tile in self.placements:
            key = self._reduce(center)
            if key in centers:
                raise SpecError(f"two tiles placed at {key}")
            if not 0 <= tile < len(self.tileset.tiles):
                raise SpecError(f"unknown tile index {tile}")
            centers[key] = tile
        object.__setattr__(self, "centers", centers)
        self._check_exact()

    def _reduce(self, vector: Sequence[int]) -> Tuple[int, ...]:
        return tuple(v % p for v, p in zip(vector, self.periods))

    def _check_exact(self) -> None:
        covered: Dict[Tuple[int, ...], Tuple[int, ...]] = {}
        for center, tile in self.centers.items():
            for cell in self.tileset.tiles[tile]:
                offset = exponent_vector(self.group, cell)
                point = self._reduce([a + b for a, b in zip(offset, center)])
                if point in covered:
                    raise SpecError(f"tiles at {covered[point]} and {center} overlap at {point}")
                covered[point] = center
        size = 1
        for p in self.periods:
            size *= p
        if len(covered) != size:
            raise SpecError(f"tiling covers {len(covered)} of {size} cells of the period box")

    @classmethod
    def boxes(cls, group: GroupSpec, sides: Sequence[int], centered: bool = False) -> "ExactTiling":
        """Tiling of ℤ^d by translates of one box."""
        low = [-(s // 2) if centered else 0 for s in sides]
        cells = [
            lattice_element(group, tuple(lo + i for lo, i in zip(low, index)))
            for index in itertools.product(*(range(s) for s in sides))
        ]
        tileset = TileSet((support(group, cells),), ("box",))
        return cls(group, tileset, tuple(sides), (((0,) * len(sides), 0),))

    def symbol_at(self, vector: Sequence[int]) -> Symbol:
        tile = self.centers.get(self._reduce(vector))
        return (len(self.tileset.tiles) if tile is None else tile,)

    def pattern_on(self, cells: Cells, shift: Sequence[int] = ()) -> Pattern:
        window = _cells(self.group, cells)
        shift = tuple(shift) or (0,) * len(self.periods)
        return Pattern(
            window.cells,
            tuple(
                self.symbol_at([a + b for a, b in zip(exponent_vector(self.group, c), shift)]) for c in window
            ),
        )

    def language(self, D: Cells) -> List[Pattern]:
        """Distinct patterns the tiling's orbit shows on D."""
        window = _cells(self.group, D)
        seen = {}
        for shift in itertools.product(*(range(p) for p in self.periods)):
            p = self.pattern_on(window, shift)
            seen.setdefault(p.values, p)
        return [seen[values] for values in sorted(seen)]


def entropy_reducing_sft(
    x: SftSpec, D: Cells, sample_language: Sequence[Pattern], budget: Optional[Budget] = None
) -> SftSpec:
    """x with every D-pattern outside the sample language forbidden.

    Only locally admissible D-patterns need forbidding; the rest already are.
    """
    budget = budget or Budget.from_env()
    window = _cells(x.group, D)
    allowed = set()
    for p in sample_language:
        if set(p.cells) != window.cell_set:
            raise SupportMismatch("sample pattern support differs from D")
        allowed.add(tuple(p[cell] for cell in window))
    candidates = locally_admissible(x, window, budget)
    extra = [p for p in candidates if p.values not in allowed]
    logger.info(f"Language restriction on {len(window)} cells forbids {len(extra)} of {len(candidates)} admissible patterns")
    return create_sft(x.group, x.alphabet, list(x.forbidden) + extra, f"{x.name or 'sft'}-restricted")


def address_name(element: Element) -> str:
    return ADDRESS_PREFIX + element_name(element)


@dataclass(frozen=True)
class FactorMapSpec:
    """The factor map of an overlay: Σ-symbols copied, cores filled by completions."""

    x: SftSpec
    tileset: TileSet
    cores: Tuple[Support, ...]
    addresses: Tuple[Element, ...]
    budget: Budget = field(default_factory=Budget, compare=False)
    _completions: Dict[Tuple[int, Tuple[Symbol, ...]], Tuple[Symbol, ...]] = field(
        default_factory=dict, init=False, repr=False, compare=False, hash=False
    )
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False, hash=False)

    @property
    def symbols(self) -> List[Symbol]:
        return self.x.alphabet.symbols()

    def boundary(self, tile: int) -> Tuple[Element, ...]:
        inner = self.cores[tile].cell_set
        return tuple(cell for cell in self.tileset.tiles[tile] if cell not in inner)

    def completion(self, tile: int, boundary_values: Sequence[Symbol]) -> Tuple[Symbol, ...]:
        """First locally admissible pattern on the tile extending the boundary values."""
        key = (tile, tuple(boundary_values))
        with self._lock:
            known = self._completions.get(key)
        if known is not None:
            return known
        cells = self.tileset.tiles[tile].cells
        boundary = self.boundary(tile)
        pinned = {cell: [value] for cell, value in zip(boundary, boundary_values)}
        values = WindowProblem(self.x, cells, pinned, self.budget).first()
        if values is None:
            witness = make_pattern(self.x.group, dict(zip(boundary, boundary_values)))
            raise NoCompletion(
                f"boundary pattern {witness.describe(self.x.alphabet)} of tile {self.tileset.names[tile]} has no locally admissible completion",
                witness,
            )
        with self._lock:
            self._completions[key] = values
        return values

    def materialize(self) -> Dict[Tuple[int, Tuple[Symbol, ...]], Tuple[Symbol, ...]]:
        """Completions for every locally admissible boundary pattern of every tile."""
        table = {}
        for tile in range(len(self.tileset.tiles)):
            boundary = self.boundary(tile)
            for p in locally_admissible(self.x, support(self.x.group, boundary), self.budget):
                values = tuple(p[cell] for cell in boundary)
                table[(tile, values)] = self.completion(tile, values)
                self.budget.check("patterns", len(table))
        logger.info(f"Factor map table has {len(table)} completions")
        return table

    def apply(self, window: Pattern) -> Pattern:
        """Evaluate the factor map on every cell whose tile lies inside the window."""
        group = self.x.group
        session = session_for(group)
        symbols = self.symbols
        n_sigma = len(symbols)
        empty = len(self.tileset.tiles)
        values = window.assignment
        result: Dict[Element, Symbol] = {}
        for cell, (tile_layer, star) in ((c, (v[0], v[-1])) for c, v in values.items()):
            if star is None:
                continue
            if star < n_sigma:
                result[cell] = symbols[star]
                continue
            address = self.addresses[star - n_sigma]
            center = session.multiply(session.invert(address), cell)
            placed = values.get(center)
            if placed is None or placed[0] in (None, empty):
                continue
            tile = placed[0]
            if address not in self.cores[tile]:
                continue
            boundary = self.boundary(tile)
            around = [values.get(session.multiply(b, center)) for b in boundary]
            if any(v is None or v[-1] is None or v[-1] >= n_sigma for v in around):
                continue
            filled = self.completion(tile, [symbols[v[-1]] for v in around])  # type: ignore[index]
            result[cell] = filled[self.tileset.tiles[tile].cells.index(address)]
        return make_pattern(group, result)


def overlay_constraints(
    tileset: TileSet, cores: Sequence[Support], addresses: Sequence[Element], n_sigma: int
) -> List[Pattern]:
    """Patterns on {1, h}, h in a tile, pinning core addresses and keeping the rest in Σ."""
    index = {element: n_sigma + k for k, element in enumerate(addresses)}
    every_address = list(range(n_sigma, n_sigma + len(addresses)))
    patterns: List[Pattern] = []
    for tile, cells in enumerate(tileset.tiles):
        for h in cells:
            if h in cores[tile]:
                banned = [s for s in range(n_sigma + len(addresses)) if s != index[h]]
            else:
                banned = every_address
            for star in banned:
                if h.is_identity:
                    patterns.append(Pattern((IDENTITY,), ((tile, star),)))
                else:
                    patterns.append(Pattern((IDENTITY, h), ((tile, None), (None, star))))
    return patterns


def overlay_sft(
    x: SftSpec,
    tileset: TileSet,
    tiling_constraints: SftSpec,
    K: Cells,
    budget: Optional[Budget] = None,
) -> Tuple[SftSpec, FactorMapSpec]:
    budget = budget or Budget.from_env()
    group = x.group
    session = session_for(group)
    if tiling_constraints.group != group:
        raise SpecError("tiling constraints live over a different group")
    if tiling_constraints.alphabet != tileset.alphabet():
        raise SpecError("tiling constraints do not use the tile set's alphabet")
    kernel = _cells(group, K)
    spread = x.forbidden_support
    for f1 in spread:
        for f2 in spread:
            difference = session.multiply(f1, session.invert(f2))
            if difference not in kernel:
                raise InvalidCoreSet(f"K misses {element_name(difference)} from F·F⁻¹")

    flat = expand_wildcards(x, budget) if any(None in v for p in x.forbidden for v in p.values) else x
    symbols = x.alphabet.symbols()
    position = {symbol: k for k, symbol in enumerate(symbols)}
    n_sigma = len(symbols)
    addresses = tuple(session.sorted(tileset.union))
    cores = tuple(core(tile, kernel, group) for tile in tileset.tiles)
    star_names = tuple(x.alphabet.name(s) for s in symbols) + tuple(address_name(a) for a in addresses)
    alphabet = Alphabet(tiling_constraints.alphabet.layers + (star_names,))

    forbidden: List[Pattern] = [Pattern(p.cells, tuple(v + (None,) for v in p.values)) for p in tiling_constraints.forbidden]
    forbidden += [Pattern(p.cells, tuple((None, position[v]) for v in p.values)) for p in flat.forbidden]
    forbidden += overlay_constraints(tileset, cores, addresses, n_sigma)
    budget.check("patterns", len(forbidden))
    result = create_sft(group, alphabet, forbidden, f"{x.name or 'sft'}-overlay")
    for tile, name in enumerate(tileset.names):
        boundary = len(tileset.tiles[tile]) - len(cores[tile])
        logger.info(f"Tile {name}: {len(cores[tile])} core cells pinned, {boundary} boundary cells free")
    return result, FactorMapSpec(x, tileset, cores, addresses, budget)


def core_defect_bound(T: Cells, K: Cells, g: GroupSpec) -> Tuple[int, int]:
    """(|T ∖ Core_K(T)|, |K|·|KT ∖ T|); the first never exceeds the second."""
    tile = _cells(g, T)
    kernel = _cells(g, K)
    session = session_for(g)
    outside = {session.multiply(k, t) for k in kernel for t in tile} - tile.cell_set
    return len(tile) - len(core(tile, kernel, g)), len(kernel) * len(outside)


__all__ = [
    "EMPTY_TILE",
    "ExactTiling",
    "FactorMapSpec",
    "core",
    "core_defect_bound",
    "entropy_reducing_sft",
    "overlay_constraints",
    "overlay_sft",
]
