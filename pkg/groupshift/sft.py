import itertools
import logging
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from groupshift.config import Budget
from groupshift.exceptions import CosetCheckFailed, SpecError
from groupshift.group import (
    IDENTITY,
    Element,
    GroupSpec,
    Homomorphism,
    WordLike,
    ball,
    canonicalize,
    free_abelian_group,
    lattice_element,
    session_for,
    subgroup,
)
from groupshift.pattern import (
    Alphabet,
    Pattern,
    Support,
    Symbol,
    completions,
    lift,
    make_pattern,
    normalize,
    pattern_sort_key,
    support,
)
from groupshift.search import Shape, WindowProblem, compile_shapes

logger = logging.getLogger(__name__)

EMPTY_TILE = "_"

Window = Union[Support, Iterable[Union[Element, WordLike]]]


@dataclass(frozen=True)
class SftSpec:
    """Alphabet plus a finite list of forbidden patterns.

    Forbidden patterns are stored translated so that their shortlex-least
    cell is the identity; they may hold wildcards (None components).
    """

    group: GroupSpec
    alphabet: Alphabet
    forbidden: Tuple[Pattern, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        session = session_for(self.group)
        for p in self.forbidden:
            for cell, value in zip(p.cells, p.values):
                self.alphabet.validate(value)
                if session.canonicalize(cell.word) != cell:
                    raise SpecError(f"forbidden pattern cell {cell} is not canonical in {self.group.name}")

    @cached_property
    def shapes(self) -> Tuple[Shape, ...]:
        return compile_shapes(self.forbidden)

    @property
    def forbidden_support(self) -> List[Element]:
        """Union of the forbidden supports."""
        return session_for(self.group).sorted({cell for p in self.forbidden for cell in p.cells})


def create_sft(group: GroupSpec, alphabet: Alphabet, forbidden: Iterable[Pattern], name: str = "") -> SftSpec:
    """SftSpec with forbidden patterns normalized, deduplicated and sorted."""
    unique = {normalize(group, p) for p in forbidden}
    ordered = sorted(unique, key=lambda p: pattern_sort_key(group, p))
    logger.debug(f"SFT {name or '(unnamed)'}: {len(ordered)} forbidden patterns over {group.name}")
    return SftSpec(group, alphabet, tuple(ordered), name)


@dataclass(frozen=True)
class TileSet:
    tiles: Tuple[Support, ...]
    names: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.tiles:
            raise ValueError("`tiles` must be nonempty.")
        if len({tile.cell_set for tile in self.tiles}) != len(self.tiles):
            raise ValueError("`tiles` must be distinct.")
        for tile in self.tiles:
            if IDENTITY not in tile:
                raise ValueError("`tiles` must all contain the identity.")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"T{i}" for i in range(len(self.tiles))))
        if len(self.names) != len(self.tiles) or EMPTY_TILE in self.names:
            raise ValueError("`names` must name every tile once.")

    @property
    def union(self) -> frozenset:
        return frozenset(cell for tile in self.tiles for cell in tile)

    def alphabet(self) -> Alphabet:
        return Alphabet.of(self.names + (EMPTY_TILE,))


def full_shift(group: GroupSpec, alphabet: Alphabet, name: str = "") -> SftSpec:
    return SftSpec(group, alphabet, (), name)


def _window(x: SftSpec, F: Window) -> Support:
    return F if isinstance(F, Support) else support(x.group, F)


def is_locally_admissible(x: SftSpec, q: Pattern) -> bool:
    for value in q.values:
        x.alphabet.validate(value, concrete=True)
    return WindowProblem(x, q.cells).admits(q.values)


def locally_admissible(
    x: SftSpec,
    F: Window,
    budget: Optional[Budget] = None,
    jobs: int = 1,
    domains: Optional[Mapping[Element, Sequence[Symbol]]] = None,
) -> List[Pattern]:
    """All locally admissible patterns on F, in lexicographic symbol order."""
    window = _window(x, F)
    problem = WindowProblem(x, window.cells, domains, budget)
    return [Pattern(window.cells, values) for values in problem.enumerate(jobs)]


def count_locally_admissible(
    x: SftSpec,
    F: Window,
    budget: Optional[Budget] = None,
    jobs: int = 1,
    domains: Optional[Mapping[Element, Sequence[Symbol]]] = None,
) -> int:
    window = _window(x, F)
    return WindowProblem(x, window.cells, domains, budget).count(jobs)


def random_locally_admissible(
    x: SftSpec, F: Window, rng: random.Random, budget: Optional[Budget] = None
) -> Optional[Pattern]:
    window = _window(x, F)
    values = WindowProblem(x, window.cells, budget=budget).sample(rng)
    return None if values is None else Pattern(window.cells, values)


def expand_wildcards(x: SftSpec, budget: Optional[Budget] = None) -> SftSpec:
    """Equivalent SFT whose forbidden patterns are all concrete."""
    budget = budget or Budget.from_env()
    expanded: List[Pattern] = []
    for p in x.forbidden:
        for values in itertools.product(*(completions(v, x.alphabet) for v in p.values)):
            expanded.append(Pattern(p.cells, values))
            budget.check("patterns", len(expanded))
    return create_sft(x.group, x.alphabet, expanded, x.name)


def tiling_sft(group: GroupSpec, tileset: TileSet, radius_hint: Optional[int] = None, budget: Optional[Budget] = None) -> SftSpec:
    """SFT of all tilings of the group by the tile set.

    A configuration τ says that the tile τ(g) is placed at g, covering τ(g)·g.
    Forbidden: two placed tiles that overlap, and any cell left uncovered.
    `radius_hint` pre-grows the Cayley ball used for canonical forms.
    """
    budget = budget or Budget.from_env()
    session = session_for(group)
    if radius_hint:
        session.ball(radius_hint)
    alphabet = tileset.alphabet()
    empty = len(tileset.tiles)
    union = session.sorted(tileset.union)
    forbidden: List[Pattern] = []

    differences = {session.multiply(session.invert(t2), t1) for t1 in union for t2 in union} - {IDENTITY}
    for g in session.sorted(differences):
        for i, tile in enumerate(tileset.tiles):
            for j, other in enumerate(tileset.tiles):
                if tile.cell_set & {session.multiply(t, g) for t in other}:
                    forbidden.append(make_pattern(group, {IDENTITY: (i,), g: (j,)}))

    # a placement at g covers the identity iff g⁻¹ lies in its tile
    covering_cells = session.sorted({session.invert(t) for t in union})
    options = []
    for g in covering_cells:
        target = session.invert(g)
        options.append([(i,) for i, tile in enumerate(tileset.tiles) if target not in tile] + [(empty,)])
    total = 1
    for choices in options:
        total *= len(choices)
    budget.check("patterns", total + len(forbidden))
    for combo in itertools.product(*options):
        forbidden.append(make_pattern(group, dict(zip(covering_cells, combo))))

    result = create_sft(group, alphabet, forbidden, f"tilings-{group.name}")
    logger.info(f"Tiling SFT over {group.name}: {len(result.forbidden)} forbidden patterns for {len(tileset.tiles)} tiles")
    return result


def free_extension(
    y: SftSpec, embedding: Mapping[str, WordLike], g: GroupSpec, check_radius: int = 2
) -> SftSpec:
    """The free extension of y along an injective homomorphism H -> G."""
    hom = Homomorphism.of(y.group, g, embedding)
    hom.check_injective(check_radius)
    forbidden = [make_pattern(g, {hom(cell): value for cell, value in zip(p.cells, p.values)}) for p in y.forbidden]
    return create_sft(g, y.alphabet, forbidden, f"{y.name or 'sft'}-up-{g.name}")


class _CosetIndex:
    """Decomposes g = r·h over representatives r and subgroup elements h."""

    def __init__(self, g: GroupSpec, h: GroupSpec, representatives: Sequence[Element], radius: int) -> None:
        self.session = session_for(g)
        self.representatives = list(representatives)
        self.inverses = [self.session.invert(r) for r in representatives]
        hom = Homomorphism.of(h, g, {name: word for name, word in h.oracle.images})  # type: ignore[attr-defined]
        self.lookup: Dict[Element, Element] = {}
        for element in ball(h, radius):
            self.lookup.setdefault(hom(element), element)
        self.radius = radius

    def candidates(self, x: Element) -> List[Tuple[int, Element]]:
        found = []
        for index, inverse in enumerate(self.inverses):
            h = self.lookup.get(self.session.multiply(inverse, x))
            if h is not None:
                found.append((index, h))
        return found

    def locate(self, x: Element) -> Tuple[int, Element]:
        found = self.candidates(x)
        if len(found) != 1:
            raise CosetCheckFailed(
                f"element {x} has {len(found)} decompositions r·h within subgroup radius {self.radius}"
            )
        return found[0]


def higher_power_shift(
    y: SftSpec,
    R: Sequence[WordLike],
    h_gens: Sequence[WordLike],
    check_radius: int = 2,
    h_names: Optional[Sequence[str]] = None,
    search_radius: Optional[int] = None,
) -> SftSpec:
    """The R-higher power shift: the H-subshift of Σ^R blocks read along cosets.

    A configuration z of the result corresponds to the G-configuration
    x(r·h) = z(h)[r].
    """
    g = y.group
    representatives = [canonicalize(g, r) for r in R]
    if len(set(representatives)) != len(representatives):
        raise CosetCheckFailed("coset representatives are not distinct")
    if h_names is None:
        h_names = ["h"] if len(h_gens) == 1 else [f"h{i + 1}" for i in range(len(h_gens))]
    h = subgroup(g, dict(zip(h_names, h_gens)), name=f"{g.name}_H")

    longest = max([len(r) for r in representatives] + [len(c) for p in y.forbidden for c in p.cells] + [0])
    radius = search_radius if search_radius is not None else 2 * (check_radius + longest) + 2
    index = _CosetIndex(g, h, representatives, radius)
    for element in ball(g, check_radius):
        index.locate(element)

    depth = y.alphabet.depth
    alphabet = Alphabet(y.alphabet.layers * len(representatives))
    forbidden: List[Pattern] = []
    for p in y.forbidden:
        for r in representatives:
            transported: Dict[Element, List[Optional[int]]] = {}
            for f, value in zip(p.cells, p.values):
                block, cell = index.locate(session_for(g).multiply(f, r))
                symbol = transported.setdefault(cell, [None] * (depth * len(representatives)))
                symbol[block * depth : (block + 1) * depth] = value
            forbidden.append(make_pattern(h, {cell: tuple(symbol) for cell, symbol in transported.items()}))
    return create_sft(h, alphabet, forbidden, f"{y.name or 'sft'}-power")


def product_sft(x: SftSpec, y: SftSpec) -> SftSpec:
    if x.group != y.group:
        raise SpecError(f"product of SFTs over different groups {x.group.name} and {y.group.name}")
    dx, dy = x.alphabet.depth, y.alphabet.depth
    forbidden = [Pattern(p.cells, tuple(lift(v, 0, dy) for v in p.values)) for p in x.forbidden]
    forbidden += [Pattern(p.cells, tuple(lift(v, dx, 0) for v in p.values)) for p in y.forbidden]
    return create_sft(x.group, Alphabet.product(x.alphabet, y.alphabet), forbidden, f"{x.name}x{y.name}")


def uniform_sft(group: GroupSpec, n: int) -> SftSpec:
    """Constant configurations only: neighbours along every generator agree."""
    alphabet = Alphabet.of(str(i) for i in range(n))
    forbidden = []
    for name in group.base_generators:
        step = canonicalize(group, (name,))
        if step.is_identity:
            continue
        for i in range(n):
            for j in range(n):
                if i != j:
                    forbidden.append(make_pattern(group, {IDENTITY: (i,), step: (j,)}))
    return create_sft(group, alphabet, forbidden, f"uniform-{n}")


def integers() -> GroupSpec:
    return free_abelian_group(("a",), "Z")


def plane() -> GroupSpec:
    return free_abelian_group(("a", "b"), "Z2")


def golden_mean_shift(group: Optional[GroupSpec] = None) -> SftSpec:
    """No two adjacent 1s along the first generator."""
    group = group or integers()
    step = canonicalize(group, (group.base_generators[0],))
    forbidden = [make_pattern(group, {IDENTITY: (1,), step: (1,)})]
    return create_sft(group, Alphabet.of(["0", "1"]), forbidden, "golden-mean")


def hard_square_shift() -> SftSpec:
    group = plane()
    forbidden = [
        make_pattern(group, {IDENTITY: (1,), canonicalize(group, (name,)): (1,)}) for name in group.base_generators
    ]
    return create_sft(group, Alphabet.of(["0", "1"]), forbidden, "hard-square")


# Snake tiles: (incoming side L, outgoing side R) over the four unit steps.
DIRECTIONS: Tuple[Tuple[str, Tuple[int, int]], ...] = (("E", (1, 0)), ("W", (-1, 0)), ("N", (0, 1)), ("S", (0, -1)))
SNAKE_TILES: Tuple[Tuple[int, int], ...] = tuple(
    (left, right) for left in range(4) for right in range(4) if left != right
)


def _opposite(direction: int) -> int:
    return direction ^ 1


def snake_alphabet() -> Alphabet:
    return Alphabet.of(DIRECTIONS[left][0] + DIRECTIONS[right][0] for left, right in SNAKE_TILES)


def snake_cycles(length: int) -> List[Pattern]:
    """Patterns of closed snake loops of at most `length` cells."""
    group = plane()
    tiles = {tile: index for index, tile in enumerate(SNAKE_TILES)}
    patterns: List[Pattern] = []

    def walk(path: List[Tuple[int, int]], steps: List[int]) -> None:
        x, y = path[-1]
        for direction, (_, (dx, dy)) in enumerate(DIRECTIONS):
            nxt = (x + dx, y + dy)
            if nxt == path[0] and len(path) >= 4:
                closed = steps + [direction]
                cells = {}
                for k, point in enumerate(path):
                    tile = (_opposite(closed[k - 1]), closed[k])
                    cells[lattice_element(group, point)] = (tiles[tile],)
                patterns.append(make_pattern(group, cells))
            elif nxt not in path and len(path) < length:
                walk(path + [nxt], steps + [direction])

    walk([(0, 0)], [])
    return patterns


def snake_shift(forbid_cycles_up_to: Optional[int] = None) -> SftSpec:
    """Twelve arrow tiles; an outgoing arrow must meet an incoming arrow.

    With `forbid_cycles_up_to`, closed loops up to that length are also
    forbidden, a finite approximation of the cycle-free snake shift.
    """
    group = plane()
    steps = [lattice_element(group, vector) for _, vector in DIRECTIONS]
    forbidden: List[Pattern] = []
    for a, (left_a, right_a) in enumerate(SNAKE_TILES):
        for direction, step in enumerate(steps):
            back = _opposite(direction)
            for b, (left_b, right_b) in enumerate(SNAKE_TILES):
                if (right_a == direction and left_b != back) or (left_a == direction and right_b != back):
                    forbidden.append(make_pattern(group, {IDENTITY: (a,), step: (b,)}))
    name = "snake"
    if forbid_cycles_up_to:
        forbidden += snake_cycles(forbid_cycles_up_to)
        name = f"snake-acyclic-{forbid_cycles_up_to}"
    return create_sft(group, snake_alphabet(), forbidden, name)


def snake_tile(name: str) -> Symbol:
    return snake_alphabet().parse(name)
