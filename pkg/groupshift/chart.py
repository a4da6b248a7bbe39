"""Cocycles and charts.

A chart pairs a G-SFT X with a cocycle given by a finite table: for an
H-letter s and the pattern x shows on the window W around g, the table
gives the element γ such that s moves g to γ·g. Words are evaluated right
to left, the last letter acting first.
"""

import itertools
import logging
import random
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from groupshift.config import Budget
from groupshift.exceptions import InsufficientDataError, PatternNotInTable, ResourceLimit, SpecError
from groupshift.group import (
    IDENTITY,
    Element,
    GroupSpec,
    Homomorphism,
    WordLike,
    as_word,
    ball,
    element_name,
    free_abelian_group,
    lattice_element,
    session_for,
)
from groupshift.oracles import Word, format_word, invert_word
from groupshift.pattern import Alphabet, Pattern, Support, Symbol, lift, make_pattern, support
from groupshift.sft import (
    DIRECTIONS,
    SNAKE_TILES,
    SftSpec,
    create_sft,
    full_shift,
    is_locally_admissible,
    locally_admissible,
    random_locally_admissible,
    snake_shift,
)

logger = logging.getLogger(__name__)

TableKey = Tuple[str, Tuple[Symbol, ...]]


@dataclass(frozen=True)
class Cocycle:
    h_group: GroupSpec
    window: Tuple[Element, ...]
    entries: Tuple[Tuple[str, Tuple[Symbol, ...], Element], ...]
    table: Dict[TableKey, Element] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        table: Dict[TableKey, Element] = {}
        for letter, values, value in self.entries:
            self.h_group.check_word((letter,))
            if len(values) != len(self.window):
                raise SpecError(f"table entry for {letter!r} does not cover the window")
            if table.setdefault((letter, tuple(values)), value) != value:
                raise SpecError(f"table gives two values for {letter!r} on one window pattern")
        object.__setattr__(self, "table", table)

    def lookup(self, letter: str, values: Tuple[Symbol, ...]) -> Optional[Element]:
        return self.table.get((letter, values))


@dataclass(frozen=True)
class Chart:
    sft: SftSpec
    cocycle: Cocycle

    def __post_init__(self) -> None:
        session = session_for(self.sft.group)
        for cell in self.cocycle.window:
            if session.canonicalize(cell.word) != cell:
                raise SpecError(f"window cell {cell} is not canonical in {self.sft.group.name}")

    @property
    def h_group(self) -> GroupSpec:
        return self.cocycle.h_group


@dataclass(frozen=True)
class InsufficientData:
    """The evaluation needed cells outside the pattern's support."""

    position: Element
    missing: Tuple[Element, ...]


def evaluate_word(
    ch: Chart, w: WordLike, p: Pattern, base: Element = IDENTITY
) -> Union[Element, InsufficientData]:
    word = ch.h_group.check_word(as_word(w))
    session = session_for(ch.sft.group)
    values = p.assignment
    position = base
    for letter in reversed(word):
        cells = [session.multiply(f, position) for f in ch.cocycle.window]
        missing = tuple(cell for cell in cells if cell not in values)
        if missing:
            return InsufficientData(position, missing)
        window = tuple(values[cell] for cell in cells)
        step = ch.cocycle.lookup(letter, window)
        if step is None:
            raise PatternNotInTable(
                f"window at {element_name(position)} for letter {letter!r} is not in the cocycle table"
            )
        position = session.multiply(step, position)
    return position


def _window_patterns(x: SftSpec, window: Sequence[Element]) -> List[Tuple[Symbol, ...]]:
    return [p.values for p in locally_admissible(x, window)]


def snake_chart() -> Chart:
    """ℤ acting along snake paths: +1 follows the outgoing arrow, -1 the incoming."""
    x = snake_shift()
    h = free_abelian_group(("t",), "Z")
    steps = [lattice_element(x.group, vector) for _, vector in DIRECTIONS]
    entries = []
    for index, (left, right) in enumerate(SNAKE_TILES):
        entries.append(("t", ((index,),), steps[right]))
        entries.append(("t^-1", ((index,),), steps[left]))
    return Chart(x, Cocycle(h, (IDENTITY,), tuple(entries)))


def trivial_chart(h_group: GroupSpec, g_group: GroupSpec, embedding: Mapping[str, WordLike]) -> Chart:
    """The one-point chart where H acts on G through an embedding."""
    hom = Homomorphism.of(h_group, g_group, embedding)
    x = full_shift(g_group, Alphabet.of(["o"]), "point")
    entries = tuple(
        (letter, ((0,),), hom(session_for(h_group).canonicalize((letter,)))) for letter in h_group.letters
    )
    return Chart(x, Cocycle(h_group, (IDENTITY,), entries))


class _EmbedWalker:
    """Enumerates X-colorings of the cells visited while evaluating fixed words."""

    def __init__(self, ch: Chart, words: Sequence[Word], support_radius: Optional[int], budget: Budget) -> None:
        self.ch = ch
        self.words = list(words)
        self.session = session_for(ch.sft.group)
        self.symbols = ch.sft.alphabet.symbols()
        self.support_radius = support_radius
        self.budget = budget
        self.visited = 0

    def walk(
        self,
        assignment: Dict[Element, Symbol],
        endpoints: Tuple[Element, ...],
        index: int = 0,
        step: int = 0,
        position: Element = IDENTITY,
    ) -> Iterator[Tuple[Dict[Element, Symbol], Tuple[Element, ...]]]:
        if index == len(self.words):
            yield assignment, endpoints
            return
        word = self.words[index]
        if step == len(word):
            yield from self.walk(assignment, endpoints + (position,), index + 1)
            return
        letter = word[len(word) - 1 - step]
        cells = [self.session.multiply(f, position) for f in self.ch.cocycle.window]
        for cell in cells:
            if self.support_radius is not None and len(cell) > self.support_radius:
                raise InsufficientDataError(
                    f"evaluation of {format_word(word)!r} leaves the support bound at {element_name(cell)}"
                )
        missing = [cell for cell in dict.fromkeys(cells) if cell not in assignment]
        for choice in itertools.product(self.symbols, repeat=len(missing)):
            self.visited += 1
            self.budget.check("nodes", self.visited)
            extended = dict(assignment)
            extended.update(zip(missing, choice))
            target = self.ch.cocycle.lookup(letter, tuple(extended[cell] for cell in cells))
            if target is None:
                continue
            yield from self.walk(extended, endpoints, index, step + 1, self.session.multiply(target, position))


def embed_with_support(
    y: SftSpec,
    ch: Chart,
    support_radius: Optional[int] = None,
    budget: Optional[Budget] = None,
) -> Tuple[SftSpec, Support]:
    """The (X, γ)-embedding of y and the union D of the windows it reads."""
    if y.group != ch.h_group:
        raise SpecError(f"{y.name or 'SFT'} is over {y.group.name}, the chart charts {ch.h_group.name}")
    budget = budget or Budget.from_env()
    x = ch.sft
    g = x.group
    dy, dx = y.alphabet.depth, x.alphabet.depth
    forbidden: List[Pattern] = [Pattern(p.cells, tuple(lift(v, dy, 0) for v in p.values)) for p in x.forbidden]
    domain = set()

    for q in y.forbidden:
        walker = _EmbedWalker(ch, [cell.word for cell in q.cells], support_radius, budget)
        for assignment, endpoints in walker.walk({}, ()):
            visited = make_pattern(g, assignment)
            if not is_locally_admissible(x, visited):
                continue
            combined: Dict[Element, Symbol] = {
                cell: (None,) * dy + tuple(value) for cell, value in assignment.items()
            }
            consistent = True
            for endpoint, value in zip(endpoints, q.values):
                current = combined.get(endpoint, (None,) * (dy + dx))
                if current[:dy] != (None,) * dy and current[:dy] != tuple(value):
                    consistent = False
                    break
                combined[endpoint] = tuple(value) + current[dy:]
            if not consistent:
                continue
            domain.update(assignment)
            forbidden.append(make_pattern(g, combined))
            budget.check("patterns", len(forbidden))

    result = create_sft(g, Alphabet.product(y.alphabet, x.alphabet), forbidden, f"{y.name or 'sft'}-in-{x.name or 'chart'}")
    declared = support(g, domain)
    logger.info(
        f"Embedding emitted {len(result.forbidden) - len(x.forbidden)} path patterns over a window of {len(declared)} cells"
    )
    return result, declared


def embed(y: SftSpec, ch: Chart, support_radius: Optional[int] = None, budget: Optional[Budget] = None) -> SftSpec:
    return embed_with_support(y, ch, support_radius, budget)[0]


def chart_from_presentation(
    h_group: GroupSpec,
    action_range: Sequence[WordLike],
    g: GroupSpec,
    budget: Optional[Budget] = None,
) -> Chart:
    """Chart whose configurations choose, at every cell, a step in F per H-letter.

    A symbol has one layer per H-letter, each valued in F. Forbidden: a
    step s that is not undone by s⁻¹ at its target, and any relator path
    that does not close up.
    """
    budget = budget or Budget.from_env()
    session = session_for(g)
    steps = session.sorted({session.canonicalize(f) for f in action_range})
    if not steps:
        raise SpecError("action range must be nonempty")
    letters = h_group.letters
    layer_of = {letter: k for k, letter in enumerate(letters)}
    names = tuple(element_name(f) for f in steps)
    alphabet = Alphabet(tuple(names for _ in letters))
    step_index = {f: i for i, f in enumerate(steps)}
    blank = [None] * len(letters)
    forbidden: List[Pattern] = []

    for letter in letters:
        inverse_layer = layer_of[invert_word((letter,))[0]]
        for i, f in enumerate(steps):
            wanted = step_index.get(session.invert(f))
            for j in range(len(steps)):
                if j == wanted:
                    continue
                if f.is_identity:
                    symbol = list(blank)
                    symbol[layer_of[letter]] = i
                    symbol[inverse_layer] = j
                    forbidden.append(make_pattern(g, {IDENTITY: tuple(symbol)}))
                else:
                    at_start = list(blank)
                    at_start[layer_of[letter]] = i
                    at_target = list(blank)
                    at_target[inverse_layer] = j
                    forbidden.append(make_pattern(g, {IDENTITY: tuple(at_start), f: tuple(at_target)}))

    for relator in h_group.relators:
        budget.check("patterns", len(steps) ** len(relator) + len(forbidden))
        for path in itertools.product(range(len(steps)), repeat=len(relator)):
            requirements: Dict[Element, List[Optional[int]]] = {}
            position = IDENTITY
            consistent = True
            for k, choice in enumerate(path):
                letter = relator[len(relator) - 1 - k]
                symbol = requirements.setdefault(position, list(blank))
                layer = layer_of[letter]
                if symbol[layer] is not None and symbol[layer] != choice:
                    consistent = False
                    break
                symbol[layer] = choice
                position = session.multiply(steps[choice], position)
            if consistent and not position.is_identity:
                forbidden.append(make_pattern(g, {cell: tuple(s) for cell, s in requirements.items()}))

    x = create_sft(g, alphabet, forbidden, f"presentation-{h_group.name}")
    entries = []
    for values in _window_patterns(x, (IDENTITY,)):
        for letter in letters:
            entries.append((letter, values, steps[values[0][layer_of[letter]]]))  # type: ignore[index]
    logger.info(f"Chart from presentation of {h_group.name}: {len(x.forbidden)} forbidden patterns")
    return Chart(x, Cocycle(h_group, (IDENTITY,), tuple(entries)))


@dataclass(frozen=True)
class FreenessViolation:
    pattern: Pattern
    word: Word
    base: Element


@dataclass(frozen=True)
class FreenessReport:
    radius: int
    word_length: int
    patterns_checked: int
    words_checked: int
    violations: Tuple[FreenessViolation, ...]

    @property
    def free_so_far(self) -> bool:
        return not self.violations

    def describe(self) -> str:
        if self.free_so_far:
            return f"no violation up to (r={self.radius}, L={self.word_length})"
        first = self.violations[0]
        return (
            f"{len(self.violations)} violations up to (r={self.radius}, L={self.word_length}); "
            f"first: word {format_word(first.word)!r} returns to {element_name(first.base)}"
        )


def freeness_check(
    ch: Chart,
    radius: int,
    word_length: int,
    patterns: Optional[Sequence[Pattern]] = None,
    budget: Optional[Budget] = None,
    max_witnesses: int = 100,
) -> FreenessReport:
    """Search for finite witnesses of non-free orbits: a nontrivial word fixing a cell.

    Finding none proves nothing beyond the scale searched.
    """
    words = [element.word for element in ball(ch.h_group, word_length) if element.word]
    if patterns is None:
        patterns = locally_admissible(ch.sft, ball(ch.sft.group, radius).elements, budget)
    found = (
        FreenessViolation(p, word, base)
        for p in patterns
        for base in p.cells
        for word in words
        if evaluate_word(ch, word, p, base) == base
    )
    violations = list(itertools.islice(found, max_witnesses))
    report = FreenessReport(radius, word_length, len(patterns), len(words), tuple(violations))
    logger.info(report.describe())
    return report


@dataclass(frozen=True)
class CocycleFailure:
    pattern: Pattern
    first: Word
    second: Word
    base: Element
    reason: str


@dataclass(frozen=True)
class CocycleReport:
    samples: int
    checked: int
    failures: Tuple[CocycleFailure, ...]

    def describe(self) -> str:
        return f"samples={self.samples} checked={self.checked} failures={len(self.failures)}"


def check_cocycle(
    ch: Chart,
    radius: int = 2,
    samples: int = 100,
    seed: int = 0,
    word_length: int = 4,
    budget: Optional[Budget] = None,
) -> CocycleReport:
    """Spot-check the cocycle equation and inverse cancellation on random data."""
    rng = random.Random(seed)
    window = ball(ch.sft.group, radius).elements
    letters = ch.h_group.letters
    failures: List[CocycleFailure] = []
    checked = 0
    for _ in range(samples):
        p = random_locally_admissible(ch.sft, window, rng, budget)
        if p is None:
            raise ResourceLimit(f"no locally admissible pattern on the radius-{radius} ball to sample")
        u = tuple(rng.choice(letters) for _ in range(rng.randint(0, word_length)))
        v = tuple(rng.choice(letters) for _ in range(rng.randint(0, word_length)))
        base = rng.choice(window)

        inner = evaluate_word(ch, v, p, base)
        whole = evaluate_word(ch, u + v, p, base)
        if isinstance(inner, Element):
            split = evaluate_word(ch, u, p, inner)
            if isinstance(split, Element) and isinstance(whole, Element):
                checked += 1
                if split != whole:
                    failures.append(CocycleFailure(p, u, v, base, "cocycle equation"))
        back = evaluate_word(ch, u + invert_word(u), p, base)
        if isinstance(back, Element):
            checked += 1
            if back != base:
                failures.append(CocycleFailure(p, u, invert_word(u), base, "inverse cancellation"))
    report = CocycleReport(samples, checked, tuple(failures))
    logger.info(report.describe())
    return report
