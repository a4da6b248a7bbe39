"""Backtracking search over colorings of a finite window.

Forbidden patterns are compiled into checks: one per placement t with
supp(p)·t inside the window. A check is tested as soon as its last cell
(in the search order) is colored. Counting memoises on the frontier, the
colored cells still referenced by an unfinished check.
"""

import itertools
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import (
    TYPE_CHECKING,
    Callable,
    Dict,
    FrozenSet,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    TypeVar,
)

from groupshift.config import Budget
from groupshift.exceptions import ResourceLimit, SpecError
from groupshift.group import Element, session_for
from groupshift.pattern import Pattern, Symbol

if TYPE_CHECKING:
    from groupshift.sft import SftSpec

logger = logging.getLogger(__name__)

T = TypeVar("T")

Projection = Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class Shape:
    """Forbidden patterns sharing support and wildcard mask."""

    cells: Tuple[Element, ...]
    components: Tuple[Tuple[int, ...], ...]
    forbidden: FrozenSet[Projection]


def compile_shapes(forbidden: Sequence[Pattern]) -> Tuple[Shape, ...]:
    groups: Dict[Tuple, set] = {}
    for p in forbidden:
        mask = tuple(tuple(k for k, index in enumerate(value) if index is not None) for value in p.values)
        projected = tuple(tuple(value[k] for k in comps) for value, comps in zip(p.values, mask))
        groups.setdefault((p.cells, mask), set()).add(projected)
    return tuple(Shape(cells, mask, frozenset(values)) for (cells, mask), values in groups.items())


@dataclass(frozen=True)
class Check:
    cells: Tuple[int, ...]
    components: Tuple[Tuple[int, ...], ...]
    forbidden: FrozenSet[Projection]

    def violated(self, assignment: Sequence[Optional[Symbol]]) -> bool:
        key = tuple(
            tuple(assignment[cell][k] for k in comps)  # type: ignore[index]
            for cell, comps in zip(self.cells, self.components)
        )
        return key in self.forbidden


class _Ticker:
    """Node counter shared by the workers of one search."""

    def __init__(self, limit: int) -> None:
        self._counter = itertools.count(1)
        self.limit = limit

    def tick(self) -> None:
        if next(self._counter) > self.limit:
            raise ResourceLimit(f"search exceeded node budget of {self.limit}")


class WindowProblem:
    """The forbidden-pattern constraints of an SFT restricted to a window."""

    def __init__(
        self,
        sft: "SftSpec",
        cells: Sequence[Element],
        domains: Optional[Mapping[Element, Sequence[Symbol]]] = None,
        budget: Optional[Budget] = None,
    ) -> None:
        self.sft = sft
        self.cells = tuple(cells)
        self.budget = budget or Budget.from_env()
        self.index = {cell: i for i, cell in enumerate(self.cells)}
        if len(self.index) != len(self.cells):
            raise SpecError("window contains a cell twice")

        symbols = tuple(sft.alphabet.symbols())
        self.domains: List[Tuple[Symbol, ...]] = [symbols] * len(self.cells)
        for cell, allowed in (domains or {}).items():
            if cell not in self.index:
                raise SpecError(f"pinned cell {cell} is outside the window")
            for symbol in allowed:
                sft.alphabet.validate(symbol, concrete=True)
            self.domains[self.index[cell]] = tuple(allowed)

        session = session_for(sft.group)
        checks: List[Check] = []
        for shape in sft.shapes:
            for t in self.cells:
                placed = []
                for f in shape.cells:
                    position = self.index.get(session.multiply(f, t))
                    if position is None:
                        break
                    placed.append(position)
                else:
                    checks.append(Check(tuple(placed), shape.components, shape.forbidden))
        if domains:
            checks = [live for live in (self._restrict(check) for check in checks) if live is not None]
        self.checks = checks
        logger.debug(f"Compiled {len(checks)} checks on a window of {len(self.cells)} cells")

    def __len__(self) -> int:
        return len(self.cells)

    def _restrict(self, check: Check) -> Optional[Check]:
        """The check with forbidden keys the domains cannot produce removed; None if nothing is left."""
        options = [
            {tuple(symbol[k] for k in comps) for symbol in self.domains[cell]}
            for cell, comps in zip(check.cells, check.components)
        ]
        live = frozenset(key for key in check.forbidden if all(part in allowed for part, allowed in zip(key, options)))
        if not live:
            return None
        return check if live == check.forbidden else Check(check.cells, check.components, live)

    def admits(self, values: Sequence[Symbol]) -> bool:
        """True iff no check is violated by a full coloring of the window."""
        return not any(check.violated(values) for check in self.checks)

    def canonical_order(self) -> List[int]:
        return list(range(len(self.cells)))

    def greedy_order(self, first: Sequence[int] = ()) -> List[int]:
        """Order keeping the frontier small: place next the cell that grows it least."""
        n = len(self.cells)
        neighbours: List[set] = [set() for _ in range(n)]
        for check in self.checks:
            for a in check.cells:
                neighbours[a].update(check.cells)
        for a in range(n):
            neighbours[a].discard(a)

        placed = [False] * n
        open_neighbours = [len(neighbours[a]) for a in range(n)]
        order: List[int] = []

        def place(cell: int) -> None:
            placed[cell] = True
            order.append(cell)
            for other in neighbours[cell]:
                open_neighbours[other] -= 1

        for cell in first:
            place(cell)
        while len(order) < n:
            best = None
            best_score = None
            for cell in range(n):
                if placed[cell]:
                    continue
                closed = sum(1 for other in neighbours[cell] if placed[other] and open_neighbours[other] == 1)
                delta = (1 if open_neighbours[cell] > 0 else 0) - closed
                placed_count = len(neighbours[cell]) - open_neighbours[cell]
                score = (delta, -placed_count, len(neighbours[cell]), cell)
                if best_score is None or score < best_score:
                    best, best_score = cell, score
            assert best is not None
            place(best)
        return order

    def _solver(self, order: Sequence[int], ticker: _Ticker, pinned: Optional[Tuple[int, Symbol]] = None) -> "_Solver":
        domains = list(self.domains)
        if pinned is not None:
            domains[pinned[0]] = (pinned[1],)
        return _Solver(self, order, domains, ticker)

    def _partitioned(self, order: Sequence[int], jobs: int, work: Callable[["_Solver"], T]) -> List[T]:
        ticker = _Ticker(self.budget.nodes)
        if jobs <= 1 or not order:
            return [work(self._solver(order, ticker))]
        first = order[0]

        def run(symbol: Symbol) -> T:
            return work(self._solver(order, ticker, (first, symbol)))

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, self.domains[first]))

    def enumerate(self, jobs: int = 1) -> List[Tuple[Symbol, ...]]:
        """All admissible colorings, cells in canonical order, symbols in alphabet order."""

        def collect(solver: "_Solver") -> List[Tuple[Symbol, ...]]:
            found = []
            for values in solver.solutions():
                found.append(values)
                self.budget.check("patterns", len(found))
            return found

        parts = self._partitioned(self.canonical_order(), jobs, collect)
        result = [values for part in parts for values in part]
        self.budget.check("patterns", len(result))
        return result

    def count(self, jobs: int = 1) -> int:
        return sum(self._partitioned(self.greedy_order(), jobs, lambda solver: solver.count(len(self.cells))))

    def count_restrictions(self, A: Sequence[Element], jobs: int = 1) -> int:
        """Number of distinct restrictions to A of admissible window colorings."""
        try:
            first = [self.index[cell] for cell in A]
        except KeyError as e:
            raise SpecError(f"cell {e.args[0]} of the subset is outside the window")
        order = self.greedy_order(first)
        return sum(self._partitioned(order, jobs, lambda solver: solver.count(len(first))))

    def first(self) -> Optional[Tuple[Symbol, ...]]:
        solver = self._solver(self.canonical_order(), _Ticker(self.budget.nodes))
        return next(iter(solver.solutions()), None)

    def sample(self, rng: random.Random) -> Optional[Tuple[Symbol, ...]]:
        """A random admissible coloring, or None when there is none."""
        solver = self._solver(self.canonical_order(), _Ticker(self.budget.nodes))
        return solver.sample(rng)


class _Solver:
    def __init__(
        self,
        problem: WindowProblem,
        order: Sequence[int],
        domains: Sequence[Tuple[Symbol, ...]],
        ticker: _Ticker,
    ) -> None:
        n = len(problem.cells)
        self.order = list(order)
        self.domains = domains
        self.ticker = ticker
        self.assignment: List[Optional[Symbol]] = [None] * n

        position = {cell: depth for depth, cell in enumerate(self.order)}
        self.at_depth: List[List[Check]] = [[] for _ in range(n)]
        reach = [-1] * n
        for check in problem.checks:
            last = max(position[cell] for cell in check.cells)
            self.at_depth[last].append(check)
            for cell in check.cells:
                reach[cell] = max(reach[cell], last)
        self.frontier: List[Tuple[int, ...]] = [
            tuple(self.order[j] for j in range(depth) if reach[self.order[j]] >= depth) for depth in range(n + 1)
        ]
        self._counts: Dict[Tuple, int] = {}
        self._feasible: Dict[Tuple, bool] = {}

    def _passes(self, depth: int) -> bool:
        assignment = self.assignment
        for check in self.at_depth[depth]:
            if check.violated(assignment):
                return False
        return True

    def _key(self, depth: int) -> Tuple:
        return depth, tuple(self.assignment[cell] for cell in self.frontier[depth])

    def solutions(self, depth: int = 0) -> Iterator[Tuple[Symbol, ...]]:
        if depth == len(self.order):
            yield tuple(self.assignment)  # type: ignore[misc]
            return
        cell = self.order[depth]
        for symbol in self.domains[cell]:
            self.ticker.tick()
            self.assignment[cell] = symbol
            if self._passes(depth):
                yield from self.solutions(depth + 1)
        self.assignment[cell] = None

    def feasible(self, depth: int) -> bool:
        if depth == len(self.order):
            return True
        key = self._key(depth)
        known = self._feasible.get(key)
        if known is not None:
            return known
        cell = self.order[depth]
        result = False
        for symbol in self.domains[cell]:
            self.ticker.tick()
            self.assignment[cell] = symbol
            if self._passes(depth) and self.feasible(depth + 1):
                result = True
                break
        self.assignment[cell] = None
        self._feasible[key] = result
        return result

    def count(self, project: int, depth: int = 0) -> int:
        """Distinct colorings of the first `project` cells of the order that extend."""
        if depth == project:
            return 1 if self.feasible(depth) else 0
        key = self._key(depth)
        known = self._counts.get(key)
        if known is not None:
            return known
        cell = self.order[depth]
        total = 0
        for symbol in self.domains[cell]:
            self.ticker.tick()
            self.assignment[cell] = symbol
            if self._passes(depth):
                total += self.count(project, depth + 1)
        self.assignment[cell] = None
        self._counts[key] = total
        return total

    def sample(self, rng: random.Random) -> Optional[Tuple[Symbol, ...]]:
        for depth, cell in enumerate(self.order):
            symbols = list(self.domains[cell])
            rng.shuffle(symbols)
            for symbol in symbols:
                self.ticker.tick()
                self.assignment[cell] = symbol
                if self._passes(depth) and self.feasible(depth + 1):
                    break
            else:
                return None
        return tuple(self.assignment)  # type: ignore[arg-type]
