"""Finite patterns over a group.

Shift convention: (g·x)(h) = x(h·g). A pattern p occurs in x at t when
x(f·t) = p(f) for every f in supp(p). Then x ∈ t·[p] iff (t⁻¹·x) ∈ [p] iff
x(f·t⁻¹) = p(f) for all f, i.e. translate(p, t) occurs in x at the identity.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from typing_extensions import TypeAlias

from groupshift.exceptions import SpecError, SupportMismatch
from groupshift.group import Element, GroupSpec, WordLike, as_word, element_name, session_for
from groupshift.oracles import Word, format_word

logger = logging.getLogger(__name__)

Symbol: TypeAlias = Tuple[Optional[int], ...]

WILDCARD = "*"
LAYER_SEPARATOR = "|"


@dataclass(frozen=True)
class Alphabet:
    """Ordered symbol layers; a symbol holds one index per layer."""

    layers: Tuple[Tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("`layers` must be nonempty.")
        for layer in self.layers:
            if not layer:
                raise ValueError("`layers` must not contain an empty layer.")
            if len(set(layer)) != len(layer):
                raise ValueError(f"`layers` contains duplicate names: {layer}")
            for name in layer:
                if LAYER_SEPARATOR in name or name == WILDCARD or not name:
                    raise ValueError(f"`layers` contains reserved symbol name {name!r}")

    @classmethod
    def of(cls, names: Iterable[str]) -> "Alphabet":
        return cls((tuple(names),))

    @classmethod
    def product(cls, *alphabets: "Alphabet") -> "Alphabet":
        return cls(tuple(layer for alphabet in alphabets for layer in alphabet.layers))

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def size(self) -> int:
        result = 1
        for layer in self.layers:
            result *= len(layer)
        return result

    def symbols(self) -> List[Symbol]:
        """All concrete symbols in alphabet order."""
        return list(itertools.product(*(range(len(layer)) for layer in self.layers)))

    def name(self, symbol: Symbol) -> str:
        return LAYER_SEPARATOR.join(
            WILDCARD if index is None else layer[index] for layer, index in zip(self.layers, symbol)
        )

    def parse(self, name: str) -> Symbol:
        parts = name.split(LAYER_SEPARATOR) if self.depth > 1 else [name]
        if len(parts) != self.depth:
            raise SpecError(f"symbol {name!r} does not have {self.depth} layers")
        symbol: List[Optional[int]] = []
        for layer, part in zip(self.layers, parts):
            if part == WILDCARD:
                symbol.append(None)
            elif part in layer:
                symbol.append(layer.index(part))
            else:
                raise SpecError(f"unknown symbol {part!r}")
        return tuple(symbol)

    def validate(self, symbol: Symbol, concrete: bool = False) -> None:
        if len(symbol) != self.depth:
            raise SpecError(f"symbol {symbol} does not have {self.depth} layers")
        for layer, index in zip(self.layers, symbol):
            if index is None:
                if concrete:
                    raise SpecError("wildcards are only allowed in forbidden patterns")
            elif not 0 <= index < len(layer):
                raise SpecError(f"symbol index {index} out of range for layer of size {len(layer)}")


def lift(symbol: Symbol, before: int, after: int) -> Symbol:
    """Pad a factor symbol with wildcards for the other layers of a product."""
    return (None,) * before + tuple(symbol) + (None,) * after


def matches(pattern_symbol: Symbol, symbol: Symbol) -> bool:
    return all(want is None or want == have for want, have in zip(pattern_symbol, symbol))


def completions(symbol: Symbol, alphabet: Alphabet) -> List[Symbol]:
    """Concrete symbols matching a possibly wildcarded symbol."""
    choices = [
        range(len(layer)) if index is None else (index,) for layer, index in zip(alphabet.layers, symbol)
    ]
    return list(itertools.product(*choices))


@dataclass(frozen=True)
class Support:
    cells: Tuple[Element, ...]

    def __post_init__(self) -> None:
        if len(set(self.cells)) != len(self.cells):
            raise ValueError("`cells` must not contain duplicates.")

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self) -> Iterator[Element]:
        return iter(self.cells)

    def __contains__(self, cell: object) -> bool:
        return cell in self.cell_set

    @cached_property
    def cell_set(self) -> frozenset:
        return frozenset(self.cells)


def support(group: GroupSpec, cells: Iterable[Union[Element, WordLike]]) -> Support:
    """Canonical, deduplicated, shortlex-ordered support."""
    session = session_for(group)
    canonical = {cell if isinstance(cell, Element) else session.canonicalize(cell) for cell in cells}
    return Support(tuple(session.sorted(canonical)))


@dataclass(frozen=True)
class Pattern:
    cells: Tuple[Element, ...]
    values: Tuple[Symbol, ...]

    def __post_init__(self) -> None:
        if len(self.cells) != len(self.values):
            raise ValueError("`values` must have one symbol per cell.")
        if len(set(self.cells)) != len(self.cells):
            raise ValueError("`cells` must not contain duplicates.")

    @property
    def support(self) -> Support:
        return Support(self.cells)

    @cached_property
    def assignment(self) -> Dict[Element, Symbol]:
        return dict(zip(self.cells, self.values))

    def __getitem__(self, cell: Element) -> Symbol:
        return self.assignment[cell]

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def is_concrete(self) -> bool:
        return all(index is not None for symbol in self.values for index in symbol)

    def describe(self, alphabet: Alphabet) -> str:
        return ", ".join(f"{element_name(c)}={alphabet.name(v)}" for c, v in zip(self.cells, self.values))


EMPTY_PATTERN = Pattern((), ())


def make_pattern(group: GroupSpec, assignment: Mapping[Element, Symbol]) -> Pattern:
    """Pattern from a cell -> symbol map, cells put in shortlex order."""
    session = session_for(group)
    cells = session.sorted(assignment)
    return Pattern(tuple(cells), tuple(assignment[cell] for cell in cells))


def pattern_from_words(
    group: GroupSpec, alphabet: Alphabet, entries: Union[Mapping[str, str], Sequence[Tuple[WordLike, str]]]
) -> Pattern:
    """Pattern from (cell word, symbol name) pairs; cells are canonicalized."""
    pairs = entries.items() if isinstance(entries, Mapping) else entries
    session = session_for(group)
    assignment: Dict[Element, Symbol] = {}
    for word, name in pairs:
        cell = session.canonicalize(word)
        symbol = alphabet.parse(name)
        if assignment.get(cell, symbol) != symbol:
            raise SpecError(f"cell {element_name(cell)!r} is given two different symbols")
        assignment[cell] = symbol
    return make_pattern(group, assignment)


def translate(group: GroupSpec, p: Pattern, t: Element) -> Pattern:
    """The pattern on {f·t⁻¹} with the value of p at f."""
    if t.is_identity:
        return p
    session = session_for(group)
    inverse = session.invert(t)
    return make_pattern(group, {session.multiply(f, inverse): v for f, v in zip(p.cells, p.values)})


def normalize(group: GroupSpec, p: Pattern) -> Pattern:
    """Translate p so that its shortlex-least cell is the identity."""
    if not p.cells or p.cells[0].is_identity:
        return p
    return translate(group, p, session_for(group).invert(p.cells[0]))


def restrict(p: Pattern, A: Iterable[Element]) -> Pattern:
    cells = A.cells if isinstance(A, Support) else tuple(A)
    missing = [cell for cell in cells if cell not in p.assignment]
    if missing:
        raise SupportMismatch(f"cells {[format_word(c.word) for c in missing]} are not in the pattern's support")
    keep = set(cells)
    return Pattern(
        tuple(c for c in p.cells if c in keep),
        tuple(v for c, v in zip(p.cells, p.values) if c in keep),
    )


@dataclass(frozen=True)
class PatternCoding:
    """Finite map from words to symbols; words need not be canonical."""

    entries: Tuple[Tuple[Word, Symbol], ...]

    @classmethod
    def of(cls, entries: Iterable[Tuple[WordLike, Symbol]]) -> "PatternCoding":
        return cls(tuple((as_word(word), symbol) for word, symbol in entries))


@dataclass(frozen=True)
class Inconsistent:
    """A coding whose cylinder is empty: some cell is asked to hold two symbols."""

    clashes: Tuple[Tuple[Element, Tuple[Word, ...]], ...]

    def describe(self) -> str:
        return "; ".join(
            f"cell {element_name(cell)} from words {[format_word(w) for w in words]}"
            for cell, words in self.clashes
        )


def resolve_coding(group: GroupSpec, coding: PatternCoding) -> Union[Pattern, Inconsistent]:
    """The pattern whose cylinder is the intersection of the coded cylinders.

    The entry (w, α) constrains x(w⁻¹) = α.
    """
    session = session_for(group)
    assignment: Dict[Element, Symbol] = {}
    sources: Dict[Element, List[Word]] = {}
    clashing: List[Element] = []
    for word, symbol in coding.entries:
        cell = session.invert(session.canonicalize(word))
        sources.setdefault(cell, []).append(word)
        if cell in assignment and assignment[cell] != symbol:
            if cell not in clashing:
                clashing.append(cell)
            continue
        assignment[cell] = symbol
    if clashing:
        logger.debug(f"Pattern coding is inconsistent at {len(clashing)} cells")
        return Inconsistent(tuple((cell, tuple(sources[cell])) for cell in clashing))
    return make_pattern(group, assignment)


def coding_of(group: GroupSpec, p: Pattern) -> PatternCoding:
    """A coding with canonical keys whose resolution is p."""
    session = session_for(group)
    return PatternCoding(tuple((session.invert(cell).word, value) for cell, value in zip(p.cells, p.values)))


def pattern_sort_key(group: GroupSpec, p: Pattern) -> Tuple:
    session = session_for(group)
    return (
        len(p.cells),
        tuple(session.sort_key(cell) for cell in p.cells),
        tuple(tuple(-1 if index is None else index for index in value) for value in p.values),
    )
