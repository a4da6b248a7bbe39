import itertools
import math

import pytest

from groupshift.entropy import SubsetFamily, estimate
from groupshift.exceptions import InvalidCoreSet, NoCompletion, SpecError, SupportMismatch
from groupshift.group import IDENTITY, ball, canonicalize, lattice_element
from groupshift.pattern import Alphabet, Pattern, make_pattern, support
from groupshift.reduction import (
    ExactTiling,
    address_name,
    core,
    core_defect_bound,
    entropy_reducing_sft,
    overlay_constraints,
    overlay_sft,
)
from groupshift.sft import (
    TileSet,
    count_locally_admissible,
    create_sft,
    expand_wildcards,
    full_shift,
    golden_mean_shift,
    is_locally_admissible,
    locally_admissible,
    tiling_sft,
)


def square(group, low, high):
    return [lattice_element(group, v) for v in itertools.product(range(low, high + 1), repeat=2)]


@pytest.fixture
def cross(z2):
    return ball(z2, 1).elements


@pytest.fixture
def alternating(z):
    step = canonicalize(z, "a")
    forbidden = [make_pattern(z, {IDENTITY: (s,), step: (s,)}) for s in (0, 1)]
    return create_sft(z, Alphabet.of(["0", "1"]), forbidden, "alternating")


@pytest.fixture
def segment_overlay(golden, z):
    tiling = ExactTiling.boxes(z, [5])
    return overlay_sft(golden, tiling.tileset, tiling_sft(z, tiling.tileset), ["a^-1", "", "a"])


class TestCore:
    def test_should_keep_center_of_square(self, z2, cross):
        # when
        result = core(square(z2, -1, 1), cross, z2)

        # then
        assert result.cells == (IDENTITY,)

    def test_should_keep_whole_tile_for_trivial_kernel(self, z2):
        # given
        tile = square(z2, -1, 1)

        # when
        result = core(tile, [IDENTITY], z2)

        # then
        assert set(result.cells) == set(tile)

    def test_should_drop_right_end_of_segment(self, z):
        # given
        segment = [canonicalize(z, ("a",) * k) for k in range(6)]

        # when
        result = core(segment, ["", "a"], z)

        # then
        assert set(result.cells) == set(segment[:5])

    def test_should_bound_core_defect(self, z2, cross):
        # when
        missing, bound = core_defect_bound(square(z2, 0, 4), cross, z2)

        # then
        assert (missing, bound) == (16, 100)
        assert missing <= bound

    @pytest.mark.parametrize("side", range(3, 11))
    def test_should_bound_core_defect_on_boxes(self, z2, cross, side):
        # when
        missing, bound = core_defect_bound(square(z2, 0, side - 1), cross, z2)

        # then
        assert missing == 4 * side - 4
        assert bound == len(cross) * 4 * side
        assert missing < bound

    @pytest.mark.parametrize(
        ["low", "high"],
        [
            pytest.param(0, 2, id="3x3"),
            pytest.param(-2, 2, id="5x5"),
            pytest.param(0, 5, id="6x6"),
        ],
    )
    def test_should_intersect_cores_of_kernel_union(self, z2, low, high):
        # given
        tile = square(z2, low, high)
        forward = [lattice_element(z2, v) for v in [(0, 0), (1, 0), (0, 2)]]
        backward = [lattice_element(z2, v) for v in [(0, 0), (-1, -1), (-2, 0)]]

        # when
        joint = core(tile, forward + backward, z2)

        # then
        assert joint.cell_set == core(tile, forward, z2).cell_set & core(tile, backward, z2).cell_set


class TestExactTiling:
    def test_should_tile_plane_by_boxes(self, z2):
        # given
        tiling = ExactTiling.boxes(z2, [2, 3])
        window = square(z2, 0, 2)

        # when
        language = tiling.language(window)

        # then
        assert len(language) == 6
        x = tiling_sft(z2, tiling.tileset)
        assert all(is_locally_admissible(x, p) for p in language)

    def test_should_name_box_tile(self, z2):
        # when
        tiling = ExactTiling.boxes(z2, [3, 3], centered=True)

        # then
        assert tiling.tileset.names == ("box",)
        assert IDENTITY in tiling.tileset.tiles[0]
        assert lattice_element(z2, (-1, -1)) in tiling.tileset.tiles[0]

    def test_should_read_symbols_periodically(self, z):
        # given
        tiling = ExactTiling.boxes(z, [3])

        # when / then
        assert [tiling.symbol_at((k,)) for k in range(-3, 4)] == [(0,), (1,), (1,), (0,), (1,), (1,), (0,)]

    def test_should_reject_overlapping_placements(self, z):
        # given
        tiles = TileSet((support(z, ["", "a"]),))

        # when / then
        with pytest.raises(SpecError, match="overlap"):
            ExactTiling(z, tiles, (3,), (((0,), 0), ((1,), 0)))

    def test_should_reject_uncovered_cells(self, z):
        # given
        tiles = TileSet((support(z, ["", "a"]),))

        # when / then
        with pytest.raises(SpecError, match="covers 2 of 3"):
            ExactTiling(z, tiles, (3,), (((0,), 0),))

    def test_should_require_free_abelian_group(self, heisenberg):
        # given
        tiles = TileSet((support(heisenberg, [""]),))

        # when / then
        with pytest.raises(SpecError, match="free abelian"):
            ExactTiling(heisenberg, tiles, (1, 1, 1), (((0, 0, 0), 0),))


class TestEntropyReducingSft:
    def test_should_recover_golden_mean_from_full_shift(self, full_two, z):
        # given
        window = support(z, ["", "a"])
        language = [Pattern(window.cells, values) for values in [((0,), (0,)), ((0,), (1,)), ((1,), (0,))]]

        # when
        x = entropy_reducing_sft(full_two, window, language)

        # then
        assert x.forbidden == golden_mean_shift().forbidden

    def test_should_keep_sft_when_language_is_complete(self, golden, z):
        # given
        window = support(z, ["", "a", "a a"])
        language = locally_admissible(golden, window)

        # when
        x = entropy_reducing_sft(golden, window, language)

        # then
        assert x.forbidden == golden.forbidden

    def test_should_refuse_samples_on_other_support(self, full_two, z):
        # given
        sample = [Pattern((IDENTITY,), ((0,),))]

        # when / then
        with pytest.raises(SupportMismatch, match="differs from D"):
            entropy_reducing_sft(full_two, ["", "a"], sample)

    def test_should_restrict_to_tiling_language(self, z2):
        # given
        tiling = ExactTiling.boxes(z2, [2, 2])
        x = tiling_sft(z2, tiling.tileset)
        window = square(z2, 0, 2)

        # when
        restricted = entropy_reducing_sft(x, window, tiling.language(window))

        # then
        assert count_locally_admissible(x, window) > count_locally_admissible(restricted, window) == 4


class TestOverlay:
    def test_should_pin_core_cells_to_addresses(self, z2, cross):
        # given
        tiling = ExactTiling.boxes(z2, [5, 5])
        x = full_shift(z2, Alphabet.of(["0", "1"]))
        overlay, _ = overlay_sft(x, tiling.tileset, tiling_sft(z2, tiling.tileset), cross)
        window = sorted(tiling.tileset.tiles[0].cells, key=lambda c: (not c.is_identity))
        stars = len(overlay.alphabet.layers[1])
        domains = {cell: [(0 if cell.is_identity else 1, s) for s in range(stars)] for cell in window}

        # when
        count = count_locally_admissible(overlay, window, domains=domains)

        # then
        assert stars == 2 + 25
        assert count == 2**16
        assert count_locally_admissible(x, window) == 2**25

    def test_should_name_address_symbols(self, segment_overlay, z):
        # given
        overlay, _ = segment_overlay

        # when
        names = overlay.alphabet.layers[1]

        # then
        assert names[:2] == ("0", "1")
        assert names[2:] == tuple(address_name(canonicalize(z, ("a",) * k)) for k in range(5))
        assert names[2] == "@1"

    def test_should_expand_wildcards_of_single_layer_alphabet(self, z):
        # given
        forbidden = [make_pattern(z, {IDENTITY: (1,), canonicalize(z, "a"): (None,)})]
        x = create_sft(z, Alphabet.of(["0", "1"]), forbidden, "no-ones")
        tiling = ExactTiling.boxes(z, [5])

        # when
        overlay, factor = overlay_sft(x, tiling.tileset, tiling_sft(z, tiling.tileset), ["a^-1", "", "a"])

        # then
        lifted = [p for p in overlay.forbidden if all(v[0] is None for v in p.values)]
        assert len(lifted) == len(expand_wildcards(x).forbidden) == 2
        assert all(v[1] is not None for p in lifted for v in p.values)
        assert factor.completion(0, [(0,), (0,)]) == ((0,),) * 5

    def test_should_bound_overlay_entropy_by_tilings_and_boundary(self, full_two, z):
        # given
        tiling = ExactTiling.boxes(z, [3])
        tilings = tiling_sft(z, tiling.tileset)
        kernel = ["a^-1", "", "a"]
        overlay, _ = overlay_sft(full_two, tiling.tileset, tilings, kernel)
        tile = tiling.tileset.tiles[0]
        missing, _ = core_defect_bound(tile, kernel, z)
        balls = SubsetFamily("balls")

        # when
        bounded = estimate(overlay, 5, family=balls)
        reference = estimate(tilings, 5, family=balls)

        # then
        share = missing / len(tile) * math.log(2)
        for row, base in zip(bounded.rows, reference.rows):
            slack = (math.log(25) + 2 * math.log(2)) / row.ball_size + 2.0**-row.n
            assert row.value <= base.value + share + slack
        assert bounded.final.value > share

    def test_should_refuse_small_kernel(self, hard_square, z2, cross):
        # given
        tiling = ExactTiling.boxes(z2, [3, 3])

        # when / then
        with pytest.raises(InvalidCoreSet, match="K misses"):
            overlay_sft(hard_square, tiling.tileset, tiling_sft(z2, tiling.tileset), cross)

    def test_should_refuse_constraints_over_other_group(self, hard_square, z, z2):
        # given
        tiling = ExactTiling.boxes(z, [3])

        # when / then
        with pytest.raises(SpecError, match="different group"):
            overlay_sft(hard_square, tiling.tileset, tiling_sft(z, tiling.tileset), ball(z2, 2).elements)

    def test_should_refuse_constraints_with_other_alphabet(self, golden, z):
        # given
        tiling = ExactTiling.boxes(z, [3])

        # when / then
        with pytest.raises(SpecError, match="alphabet"):
            overlay_sft(golden, tiling.tileset, golden, ["a^-1", "", "a"])

    def test_should_build_one_constraint_per_banned_symbol(self, z):
        # given
        tiles = TileSet((support(z, ["", "a", "a a"]),))
        cores = (support(z, ["a"]),)
        addresses = tuple(tiles.tiles[0].cells)

        # when
        patterns = overlay_constraints(tiles, cores, addresses, 2)

        # then
        assert len(patterns) == 3 + 4 + 3


class TestFactorMap:
    def test_should_fill_core_from_boundary(self, segment_overlay, z):
        # given
        overlay, factor = segment_overlay
        cells = [canonicalize(z, ("a",) * k) for k in range(5)]
        stars = [1, 3, 4, 5, 1]
        window = make_pattern(z, {cell: (0 if k == 0 else 1, star) for k, (cell, star) in enumerate(zip(cells, stars))})

        # when
        image = factor.apply(window)

        # then
        assert is_locally_admissible(overlay, window)
        assert [image[cell] for cell in cells] == [(1,), (0,), (0,), (0,), (1,)]

    def test_should_materialize_every_boundary(self, segment_overlay):
        # given
        _, factor = segment_overlay

        # when
        table = factor.materialize()

        # then
        assert len(table) == 4
        assert table[(0, ((1,), (1,)))] == ((1,), (0,), (0,), (0,), (1,))
        assert all(is_locally_admissible(factor.x, Pattern(factor.tileset.tiles[0].cells, v)) for v in table.values())

    def test_should_report_missing_completion(self, alternating, z):
        # given
        tiling = ExactTiling.boxes(z, [3])
        _, factor = overlay_sft(alternating, tiling.tileset, tiling_sft(z, tiling.tileset), ["a^-1", "", "a"])

        # when / then
        with pytest.raises(NoCompletion, match="no locally admissible completion") as e:
            factor.completion(0, [(0,), (1,)])
        assert e.value.witness is not None

    def test_should_copy_sigma_symbols(self, segment_overlay, z):
        # given
        _, factor = segment_overlay
        window = make_pattern(z, {IDENTITY: (1, 0), canonicalize(z, "a"): (1, 1)})

        # when
        image = factor.apply(window)

        # then
        assert image.values == ((0,), (1,))
