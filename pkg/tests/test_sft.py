import itertools
import random

import pytest

from groupshift.config import Budget
from groupshift.exceptions import CosetCheckFailed, EmbeddingNotInjective, ResourceLimit, SpecError
from groupshift.group import IDENTITY, GroupSpec, ball, canonicalize, exponent_vector, lattice_element
from groupshift.oracles import FiniteCyclicOracle
from groupshift.pattern import Alphabet, Pattern, make_pattern, pattern_from_words, support
from groupshift.search import WindowProblem
from groupshift.sft import (
    EMPTY_TILE,
    TileSet,
    count_locally_admissible,
    create_sft,
    expand_wildcards,
    free_extension,
    full_shift,
    golden_mean_shift,
    higher_power_shift,
    is_locally_admissible,
    locally_admissible,
    product_sft,
    random_locally_admissible,
    snake_cycles,
    snake_shift,
    snake_tile,
    tiling_sft,
    uniform_sft,
)
from tests.conftest import brute_force_count, brute_force_patterns, fibonacci


def box(group, *sides):
    return [lattice_element(group, v) for v in itertools.product(*(range(n) for n in sides))]


def direct_tiling_patterns(group, tile_vectors, window):
    """Colorings of the window by {tile, empty} with no overlap and no forced hole, checked on vectors."""
    cells = [exponent_vector(group, cell) for cell in window]
    inside = set(cells)

    def add(u, v):
        return tuple(x + y for x, y in zip(u, v))

    def sub(u, v):
        return tuple(x - y for x, y in zip(u, v))

    found = set()
    for placed in itertools.product([True, False], repeat=len(cells)):
        at = {cell for cell, on in zip(cells, placed) if on}
        covered = [add(g, t) for g in at for t in tile_vectors]
        if len(covered) != len(set(covered)):
            continue
        hole = False
        for c in cells:
            placers = [sub(c, t) for t in tile_vectors]
            if all(p in inside for p in placers) and not any(p in at for p in placers):
                hole = True
                break
        if not hole:
            found.add(tuple((0,) if on else (1,) for on in placed))
    return found


def patterns_in_order(patterns, window):
    return {tuple(p[cell] for cell in window) for p in patterns}


class TestLocalAdmissibility:
    @pytest.mark.parametrize(
        ["cells", "expected"],
        [
            pytest.param(1, 2, id="one-cell"),
            pytest.param(3, 5, id="three-cells"),
            pytest.param(8, 55, id="eight-cells"),
        ],
    )
    def test_should_count_golden_mean_words(self, golden, z, cells, expected):
        # when
        count = count_locally_admissible(golden, box(z, cells))

        # then
        assert count == expected == fibonacci(cells + 2)

    def test_should_count_hard_square_on_square(self, hard_square, z2):
        # when / then
        assert count_locally_admissible(hard_square, box(z2, 2, 2)) == 7

    @pytest.mark.parametrize("radius", [1, 2])
    def test_should_agree_with_brute_force_on_balls(self, hard_square, z2, radius):
        # given
        window = support(z2, ball(z2, radius))

        # when
        found = locally_admissible(hard_square, window)

        # then
        assert [p.values for p in found] == brute_force_patterns(hard_square, window.cells)
        assert count_locally_admissible(hard_square, window) == len(found)

    def test_should_list_patterns_in_symbol_order(self, golden, z):
        # when
        found = locally_admissible(golden, box(z, 2))

        # then
        assert [p.values for p in found] == [((0,), (0,)), ((0,), (1,)), ((1,), (0,))]

    def test_should_decide_single_patterns(self, golden, z):
        # given
        ok = pattern_from_words(z, golden.alphabet, {"": "1", "a a": "1"})
        bad = pattern_from_words(z, golden.alphabet, {"a^-1": "1", "": "1"})

        # when / then
        assert is_locally_admissible(golden, ok)
        assert not is_locally_admissible(golden, bad)

    def test_should_count_full_shift(self, full_two, z):
        # when / then
        assert count_locally_admissible(full_two, box(z, 5)) == 32

    def test_should_count_empty_window(self, golden):
        # when / then
        assert count_locally_admissible(golden, []) == 1

    def test_should_respect_pinned_domains(self, hard_square, z2):
        # given
        window = box(z2, 3, 3)
        center = lattice_element(z2, (1, 1))
        brute = [v for v in brute_force_patterns(hard_square, window) if v[window.index(center)] == (1,)]

        # when
        pinned = count_locally_admissible(hard_square, window, domains={center: [(1,)]})

        # then
        assert pinned == len(brute) == 16

    def test_should_reject_pins_outside_window(self, hard_square, z2):
        # when / then
        with pytest.raises(SpecError, match="outside the window"):
            count_locally_admissible(hard_square, box(z2, 2, 2), domains={lattice_element(z2, (5, 5)): [(0,)]})

    def test_should_sample_admissible_patterns(self, hard_square, z2):
        # given
        rng = random.Random(11)

        # when
        samples = [random_locally_admissible(hard_square, box(z2, 3, 3), rng) for _ in range(5)]

        # then
        assert all(p is not None and is_locally_admissible(hard_square, p) for p in samples)

    def test_should_return_none_when_nothing_is_admissible(self, z):
        # given
        x = uniform_sft(z, 1)
        empty = create_sft(z, x.alphabet, [make_pattern(z, {IDENTITY: (0,)})])

        # when / then
        assert random_locally_admissible(empty, box(z, 2), random.Random(0)) is None
        assert count_locally_admissible(empty, box(z, 2)) == 0

    def test_should_stop_at_node_budget(self, hard_square, z2):
        # when / then
        with pytest.raises(ResourceLimit, match="node budget"):
            count_locally_admissible(hard_square, box(z2, 4, 4), budget=Budget(nodes=10))

    def test_should_enforce_pattern_budget(self, full_two, z):
        # when / then
        with pytest.raises(ResourceLimit, match="patterns budget"):
            locally_admissible(full_two, box(z, 6), budget=Budget(patterns=10))

    @pytest.mark.parametrize("jobs", [2, 8])
    def test_should_not_depend_on_jobs(self, hard_square, z2, jobs):
        # given
        window = box(z2, 3, 4)

        # when / then
        assert count_locally_admissible(hard_square, window, jobs=jobs) == count_locally_admissible(hard_square, window)
        assert locally_admissible(hard_square, window, jobs=jobs) == locally_admissible(hard_square, window)


class TestRestrictionCounts:
    def test_should_count_distinct_restrictions(self, hard_square, z2):
        # given
        problem = WindowProblem(hard_square, box(z2, 3, 3))
        center = lattice_element(z2, (1, 1))

        # when / then
        assert problem.count_restrictions([center]) == 2

    def test_should_equal_full_count_on_whole_window(self, hard_square, z2):
        # given
        window = box(z2, 3, 3)
        problem = WindowProblem(hard_square, window)

        # when / then
        assert problem.count_restrictions(list(reversed(window))) == problem.count() == brute_force_count(hard_square, window)

    def test_should_reject_subset_outside_window(self, hard_square, z2):
        # given
        problem = WindowProblem(hard_square, box(z2, 2, 2))

        # when / then
        with pytest.raises(SpecError, match="outside the window"):
            problem.count_restrictions([lattice_element(z2, (3, 3))])


class TestConstructors:
    def test_should_expand_wildcards_without_changing_language(self, golden, full_two, z):
        # given
        x = product_sft(golden, full_two)

        # when
        concrete = expand_wildcards(x)

        # then
        assert all(p.values and all(None not in v for v in p.values) for p in concrete.forbidden)
        assert count_locally_admissible(concrete, box(z, 3)) == count_locally_admissible(x, box(z, 3)) == 5 * 8

    def test_should_refuse_product_over_different_groups(self, golden, hard_square):
        # when / then
        with pytest.raises(SpecError, match="different groups"):
            product_sft(golden, hard_square)

    def test_should_allow_only_constant_configurations(self, z2):
        # given
        x = uniform_sft(z2, 3)

        # when / then
        assert count_locally_admissible(x, box(z2, 3, 2)) == 3

    def test_should_extend_along_embedding(self, golden, z2):
        # when
        y = free_extension(golden, {"a": "a"}, z2)

        # then
        assert y.group == z2
        assert count_locally_admissible(y, box(z2, 2, 2)) == 9

    @pytest.mark.parametrize(
        ["along", "across"],
        [pytest.param(a, b, id=f"{a}x{b}") for a in range(1, 6) for b in range(1, 4)],
    )
    def test_should_factor_counts_over_transverse_copies(self, golden, z2, along, across):
        # given
        y = free_extension(golden, {"a": "a"}, z2)

        # when
        count = count_locally_admissible(y, box(z2, along, across))

        # then
        assert count == count_locally_admissible(golden, box(golden.group, along)) ** across
        assert count == fibonacci(along + 2) ** across

    def test_should_give_twenty_five_on_three_by_two(self, golden, z2):
        # when
        y = free_extension(golden, {"a": "a"}, z2)

        # then
        assert count_locally_admissible(y, box(z2, 3, 2)) == brute_force_count(y, box(z2, 3, 2)) == 25

    def test_should_refuse_non_injective_embedding(self, golden):
        # given
        c2 = GroupSpec("C2", ("a",), FiniteCyclicOracle("a", 2))

        # when / then
        with pytest.raises(EmbeddingNotInjective):
            free_extension(golden, {"a": "a"}, c2)

    @pytest.mark.parametrize(
        ["length", "expected"],
        [
            pytest.param(1, 3, id="one-block"),
            pytest.param(2, 8, id="two-blocks"),
            pytest.param(3, 21, id="three-blocks"),
            pytest.param(4, 55, id="four-blocks"),
        ],
    )
    def test_should_read_blocks_along_cosets(self, golden, length, expected):
        # given
        power = higher_power_shift(golden, ["", "a"], ["a a"])
        cells = [canonicalize(power.group, ("h",) * k) for k in range(length)]

        # when
        count = count_locally_admissible(power, cells)

        # then
        assert power.alphabet.depth == 2
        assert count == expected == fibonacci(2 * length + 2)

    def test_should_reject_bad_coset_representatives(self, golden):
        # when / then
        with pytest.raises(CosetCheckFailed):
            higher_power_shift(golden, ["", "a a"], ["a a"])

    def test_should_reject_alphabet_symbols_out_of_range(self, z):
        # when / then
        with pytest.raises(SpecError, match="out of range"):
            create_sft(z, Alphabet.of(["0"]), [make_pattern(z, {IDENTITY: (3,)})])

    def test_should_normalize_and_deduplicate_forbidden(self, z):
        # given
        alphabet = Alphabet.of(["0", "1"])
        p = make_pattern(z, {IDENTITY: (1,), canonicalize(z, "a"): (1,)})
        moved = make_pattern(z, {canonicalize(z, "a a"): (1,), canonicalize(z, "a a a"): (1,)})

        # when
        x = create_sft(z, alphabet, [moved, p])

        # then
        assert x.forbidden == (p,)
        assert x.forbidden == golden_mean_shift(z).forbidden


class TestTilings:
    def test_should_tile_integers_by_dominoes(self, z):
        # given
        tiles = TileSet((support(z, ["", "a"]),), ("D",))

        # when
        x = tiling_sft(z, tiles)

        # then
        assert x.alphabet.layers == (("D", EMPTY_TILE),)
        assert count_locally_admissible(x, box(z, 3)) == 2

    @pytest.mark.parametrize("length", [2, 4, 6, 9])
    def test_should_match_direct_check_on_integers(self, z, length):
        # given
        x = tiling_sft(z, TileSet((support(z, ["", "a"]),)))
        window = box(z, length)

        # when
        patterns = locally_admissible(x, window)

        # then
        assert patterns_in_order(patterns, window) == direct_tiling_patterns(z, [(0,), (1,)], window)
        assert len(patterns) == len(set(patterns))

    @pytest.mark.parametrize("sides", [(1, 4), (2, 2), (2, 3), (3, 3), (2, 4), (3, 4), (4, 4)])
    def test_should_match_direct_check_on_plane(self, z2, sides):
        # given
        square = [(0, 0), (1, 0), (0, 1), (1, 1)]
        tiles = TileSet((support(z2, [lattice_element(z2, v) for v in square]),))
        window = box(z2, *sides)

        # when
        patterns = locally_admissible(tiling_sft(z2, tiles), window)

        # then
        assert patterns_in_order(patterns, window) == direct_tiling_patterns(z2, square, window)
        assert len(patterns) == len(set(patterns))

    def test_should_reject_tiles_without_identity(self, z):
        # when / then
        with pytest.raises(ValueError, match="identity"):
            TileSet((support(z, ["a", "a a"]),))

    def test_should_reject_duplicate_tiles(self, z):
        # when / then
        with pytest.raises(ValueError, match="distinct"):
            TileSet((support(z, ["", "a"]), support(z, ["a", ""])))


class TestSnake:
    def test_should_list_twelve_tiles(self):
        # when
        x = snake_shift()

        # then
        assert x.alphabet.size == 12
        assert snake_tile("WE") == (x.alphabet.layers[0].index("WE"),)

    def test_should_count_horizontal_dominoes(self, z2):
        # when / then
        assert count_locally_admissible(snake_shift(), [IDENTITY, lattice_element(z2, (1, 0))]) == 54

    def test_should_forbid_short_loops(self):
        # given
        loops = snake_cycles(4)

        # when
        plain = snake_shift()
        acyclic = snake_shift(forbid_cycles_up_to=4)

        # then
        assert loops
        assert all(len(loop) == 4 for loop in loops)
        assert is_locally_admissible(plain, loops[0])
        assert not is_locally_admissible(acyclic, loops[0])

    def test_should_reject_broken_arrow(self, z2):
        # given
        p = Pattern(
            (IDENTITY, lattice_element(z2, (1, 0))),
            (snake_tile("WE"), snake_tile("NS")),
        )

        # when / then
        assert not is_locally_admissible(snake_shift(), p)

    def test_should_accept_straight_path(self, z2):
        # given
        p = make_pattern(z2, {lattice_element(z2, (i, 0)): snake_tile("WE") for i in range(3)})

        # when / then
        assert is_locally_admissible(snake_shift(), p)


class TestFullShift:
    def test_should_have_no_forbidden_patterns(self, z2):
        # when
        x = full_shift(z2, Alphabet.of(["a", "b", "c"]))

        # then
        assert x.forbidden == ()
        assert count_locally_admissible(x, box(z2, 2, 2)) == 81
