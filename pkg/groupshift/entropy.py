"""Entropy bounds.

`estimate` produces a nonincreasing sequence of dyadic upper bounds h_n:
for every A in a nested family of subsets of the ball B_n it takes the
least k/2ⁿ strictly above (1/|A|)·ln(number of A-patterns), counting
either restrictions of the locally admissible B_n-colorings (small A) or
locally admissible A-patterns (large A). `exact_z` and `strip_lower_bound`
use transfer matrices.
"""

import csv
import io
import itertools
import logging
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from groupshift.config import Budget
from groupshift.exceptions import MemoryTooSmall, NonConvergence, SpecError
from groupshift.group import Element, GroupSpec, ball, exponent_vector, lattice_element, session_for, wp_decide
from groupshift.pattern import Symbol, matches, support
from groupshift.search import WindowProblem
from groupshift.sft import SftSpec, count_locally_admissible, locally_admissible

logger = logging.getLogger(__name__)

NEGATIVE_INFINITY = float("-inf")
TOLERANCE = 1e-12


@dataclass(frozen=True)
class TraceRow:
    n: int
    ball_size: int
    family_size: int
    h_n: Optional[Fraction]
    raw_bound: float
    elapsed_ms: float
    best_size: int = 0
    restricted_count: Optional[int] = None
    local_count: Optional[int] = None

    @property
    def empty(self) -> bool:
        return self.h_n is None

    @property
    def value(self) -> float:
        return NEGATIVE_INFINITY if self.h_n is None else float(self.h_n)


@dataclass(frozen=True)
class EntropyTrace:
    rows: Tuple[TraceRow, ...]

    @property
    def final(self) -> TraceRow:
        return self.rows[-1]

    def to_csv(self, bits: bool = False) -> str:
        scale = 1 / math.log(2) if bits else 1.0
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(
            ["n", "ball", "family", "h_n_num", "h_n_den", "h_n", "raw", "best", "restricted", "local", "ms"]
        )
        for row in self.rows:
            if row.h_n is None:
                writer.writerow([row.n, row.ball_size, row.family_size, "", "", "-inf", "-inf", "", "", "", f"{row.elapsed_ms:.0f}"])
                continue
            writer.writerow(
                [
                    row.n,
                    row.ball_size,
                    row.family_size,
                    row.h_n.numerator,
                    row.h_n.denominator,
                    f"{float(row.h_n) * scale:.9f}",
                    f"{row.raw_bound * scale:.9f}",
                    row.best_size,
                    "" if row.restricted_count is None else row.restricted_count,
                    row.local_count,
                    f"{row.elapsed_ms:.0f}",
                ]
            )
        return buffer.getvalue()


FAMILY_POLICIES = ("balls", "capped", "windows")
DEFAULT_CAP = 12


@dataclass(frozen=True)
class SubsetFamily:
    """Nested families of subsets A ⊆ B_n over which h_n is minimised.

    The default takes every A with |A| <= 12 together with the sub-balls B_k.
    Its size grows like a binomial sum in |B_n| and is checked against the
    ``subsets`` budget; ``balls`` keeps only the sub-balls.
    """

    policy: str = "capped"
    cap: int = DEFAULT_CAP
    windows: Tuple[Tuple[Element, ...], ...] = ()

    def __post_init__(self) -> None:
        if self.policy not in FAMILY_POLICIES:
            raise ValueError(f"`policy` must be one of {FAMILY_POLICIES}.")
        if self.policy == "capped" and self.cap < 1:
            raise ValueError("`cap` must be positive for the capped policy.")

    @classmethod
    def parse(cls, text: str, windows: Sequence[Sequence[Element]] = ()) -> "SubsetFamily":
        if text == "balls":
            return cls("balls", 0)
        if text.startswith("capped:"):
            try:
                return cls("capped", int(text.split(":", 1)[1]))
            except ValueError:
                raise SpecError(f"bad subset family {text!r}")
        if text == "windows" or text.startswith("windows:"):
            return cls("windows", windows=tuple(tuple(w) for w in windows))
        raise SpecError(f"unknown subset family {text!r}")

    def members(self, group: GroupSpec, n: int, budget: Budget) -> List[Tuple[Element, ...]]:
        current = ball(group, n).elements
        inside = set(current)
        chosen: List[Tuple[Element, ...]] = []
        seen: set = set()

        def add(cells: Sequence[Element]) -> None:
            key = frozenset(cells)
            if key and key not in seen:
                seen.add(key)
                chosen.append(tuple(cells))

        if self.policy == "windows":
            for window in self.windows:
                if set(window) <= inside:
                    add(window)
            return chosen
        for k in range(n + 1):
            add(ball(group, k).elements)
        if self.policy == "capped":
            total = sum(math.comb(len(current), size) for size in range(1, min(self.cap, len(current)) + 1))
            budget.check("subsets", total)
            for size in range(1, min(self.cap, len(current)) + 1):
                for cells in itertools.combinations(current, size):
                    add(cells)
        return chosen


def _dyadic_above(raw: float, n: int) -> Fraction:
    """Least k/2ⁿ strictly greater than raw."""
    scale = 2**n
    return Fraction(math.floor(raw * scale) + 1, scale)


def estimate(
    x: SftSpec,
    n_max: int,
    family: Optional[SubsetFamily] = None,
    budget: Optional[Budget] = None,
    restrict_cap: int = 5,
    jobs: int = 1,
) -> EntropyTrace:
    """Rows of dyadic upper bounds h_n for n = 1 .. n_max.

    There is no n = 0 row: B_0 is the identity alone, so its only member gives
    the trivial bound ln|Σ| and a grid of step 1, which no later row can exceed.
    A ⊆ B_n is scored by its restriction count while |A| <= restrict_cap and by
    its local count above that.
    """
    budget = budget or Budget.from_env()
    family = family or SubsetFamily()
    local_counts: Dict[FrozenSet[Element], int] = {}
    rows: List[TraceRow] = []

    for n in range(1, n_max + 1):
        started = time.perf_counter()
        cells = ball(x.group, n).elements
        problem = WindowProblem(x, cells, budget=budget)
        total = problem.count(jobs)
        members = family.members(x.group, n, budget)
        if total == 0:
            elapsed = (time.perf_counter() - started) * 1000
            logger.warning(f"Locally admissible language on B_{n} is empty: the subshift is empty")
            rows.append(TraceRow(n, len(cells), len(members), None, NEGATIVE_INFINITY, elapsed))
            continue

        best: Optional[Tuple[float, Tuple[Element, ...], Optional[int], int]] = None
        whole = frozenset(cells)
        for A in members:
            key = frozenset(A)
            if key == whole:
                restricted: Optional[int] = total
                local = total
            else:
                if key not in local_counts:
                    local_counts[key] = WindowProblem(x, A, budget=budget).count(jobs)
                local = local_counts[key]
                restricted = problem.count_restrictions(A, jobs) if len(A) <= restrict_cap else None
            counted = local if restricted is None else restricted
            raw = math.log(counted) / len(A)
            if best is None or raw < best[0]:
                best = (raw, A, restricted, local)

        assert best is not None
        raw, A, restricted, local = best
        elapsed = (time.perf_counter() - started) * 1000
        row = TraceRow(n, len(cells), len(members), _dyadic_above(raw, n), raw, elapsed, len(A), restricted, local)
        logger.debug(f"n={n} |B_n|={len(cells)} h_n={float(row.value):.9f} raw={raw:.9f} |A|={len(A)}")
        rows.append(row)
    return EntropyTrace(tuple(rows))


@dataclass(frozen=True)
class ZEntropy:
    entropy: float
    spectral_radius: float
    states: int
    iterations: int
    empty: bool = False

    @property
    def degenerate(self) -> bool:
        return self.spectral_radius == 0.0


def _power_iteration(block: np.ndarray, max_iterations: int) -> Tuple[float, int]:
    """Perron root of an irreducible nonnegative matrix.

    Iterates M + I, which is primitive, and stops when the Collatz-Wielandt
    bounds min(Mv/v) and max(Mv/v) agree to the tolerance.
    """
    shifted = block + np.eye(len(block))
    vector = np.ones(len(block))
    for iteration in range(1, max_iterations + 1):
        image = shifted @ vector
        ratios = image / vector
        low, high = float(ratios.min()), float(ratios.max())
        if high - low <= TOLERANCE * high:
            return (low + high) / 2 - 1.0, iteration
        vector = image / image.max()
    raise NonConvergence(f"power iteration did not converge in {max_iterations} iterations")


def perron_root(matrix: np.ndarray, max_iterations: int) -> Tuple[float, int]:
    """Spectral radius of a nonnegative matrix and the iterations spent."""
    if matrix.size == 0:
        return 0.0, 0
    graph = nx.from_numpy_array(matrix, create_using=nx.DiGraph)
    radius = 0.0
    iterations = 0
    for component in nx.strongly_connected_components(graph):
        nodes = sorted(component)
        block = matrix[np.ix_(nodes, nodes)]
        if len(nodes) == 1 and block[0, 0] == 0:
            continue
        value, spent = _power_iteration(block, max_iterations)
        radius = max(radius, value)
        iterations += spent
    return radius, iterations


def _require_line(group: GroupSpec) -> None:
    if len(group.base_generators) != 1 or len(ball(group, 3)) != 7:
        raise SpecError(f"{group.name} is not an infinite cyclic group")


def exact_z(x: SftSpec, memory: int, budget: Optional[Budget] = None) -> ZEntropy:
    """Entropy of a ℤ-SFT from the transfer matrix of its m-block recoding."""
    budget = budget or Budget.from_env()
    group = x.group
    _require_line(group)
    for p in x.forbidden:
        offsets = [exponent_vector(group, cell)[0] for cell in p.cells]
        if offsets and max(offsets) - min(offsets) > memory:
            raise MemoryTooSmall(f"a forbidden pattern spans {max(offsets) - min(offsets) + 1} cells, memory {memory} is too small")

    m = max(memory, 1)
    cells = [lattice_element(group, (k,)) for k in range(m + 1)]
    words = locally_admissible(x, cells, budget)
    blocks: Dict[Tuple[Symbol, ...], int] = {}
    edges: List[Tuple[int, int]] = []
    for pattern in words:
        values = tuple(pattern[cell] for cell in cells)
        source = blocks.setdefault(values[:-1], len(blocks))
        target = blocks.setdefault(values[1:], len(blocks))
        edges.append((source, target))
    budget.check("states", len(blocks))
    if not blocks:
        logger.warning(f"No locally admissible {m + 1}-blocks: the subshift is empty")
        return ZEntropy(0.0, 0.0, 0, 0, empty=True)

    matrix = np.zeros((len(blocks), len(blocks)))
    for source, target in edges:
        matrix[source, target] = 1.0
    radius, iterations = perron_root(matrix, budget.iterations)
    if radius <= TOLERANCE:
        logger.warning("Transfer matrix is nilpotent: no bi-infinite configuration")
        return ZEntropy(0.0, 0.0, len(blocks), iterations, empty=True)
    entropy = math.log(radius)
    logger.info(f"exact entropy {entropy:.9f} from {len(blocks)} states, spectral radius {radius:.12f}")
    return ZEntropy(entropy, radius, len(blocks), iterations)


def _require_plane(group: GroupSpec) -> None:
    bases = group.base_generators
    if (
        len(bases) != 2
        or len(ball(group, 2)) != 13
        or not wp_decide(group, (bases[0], bases[1], bases[0] + "^-1", bases[1] + "^-1"))
    ):
        raise SpecError(f"{group.name} is not ℤ²")


def strip_lower_bound(x: SftSpec, width: int, budget: Optional[Budget] = None) -> float:
    """(1/w)·ln of the Perron root of the width-w strip transfer matrix.

    Columns of height w with periodic vertical boundary are the states.
    This is the usual strip estimate; it is used as a reference value.
    """
    if width < 1:
        raise ValueError("`width` must be positive.")
    budget = budget or Budget.from_env()
    group = x.group
    _require_plane(group)
    placed: List[List[Tuple[int, int, Symbol]]] = []
    for p in x.forbidden:
        points = [exponent_vector(group, cell) for cell in p.cells]
        min_x = min(v[0] for v in points)
        min_y = min(v[1] for v in points)
        shifted = [(v[0] - min_x, v[1] - min_y, value) for v, value in zip(points, p.values)]
        if any(dx > 1 or dy > 1 for dx, dy, _ in shifted):
            raise SpecError("strip bound needs forbidden patterns inside a 2x2 box")
        placed.append(shifted)

    symbols = x.alphabet.symbols()
    budget.check("states", len(symbols) ** width)
    vertical = [q for q in placed if all(dx == 0 for dx, _, _ in q)]
    crossing = [q for q in placed if {dx for dx, _, _ in q} == {0, 1}]

    def occurs(q: List[Tuple[int, int, Symbol]], left: Sequence[Symbol], right: Sequence[Symbol], row: int) -> bool:
        return all(matches(value, (left if dx == 0 else right)[(dy + row) % width]) for dx, dy, value in q)

    columns = [
        c
        for c in itertools.product(symbols, repeat=width)
        if not any(occurs(q, c, c, row) for q in vertical for row in range(width))
    ]
    matrix = np.zeros((len(columns), len(columns)))
    for i, left in enumerate(columns):
        for j, right in enumerate(columns):
            if not any(occurs(q, left, right, row) for q in crossing for row in range(width)):
                matrix[i, j] = 1.0
    radius, _ = perron_root(matrix, budget.iterations)
    if radius <= TOLERANCE:
        return NEGATIVE_INFINITY
    return math.log(radius) / width


def finite_group_entropy(x: SftSpec, budget: Optional[Budget] = None) -> float:
    """(1/|G|)·ln|X| for a finite group G."""
    elements = session_for(x.group).whole_group().elements
    count = count_locally_admissible(x, support(x.group, elements), budget)
    if count == 0:
        return NEGATIVE_INFINITY
    return math.log(count) / len(elements)
