import json

import pytest

from groupshift.chart import snake_chart
from groupshift.exceptions import SpecError
from groupshift.group import IDENTITY, canonicalize
from groupshift.pattern import Alphabet, Pattern, resolve_coding
from groupshift.reduction import ExactTiling, overlay_sft
from groupshift.serialization import (
    Workspace,
    alphabet_from_json,
    cells_from_json,
    chart_to_json,
    dumps,
    factor_map_to_json,
    pattern_from_json,
    sft_to_json,
    tiling_to_json,
    word_from_json,
)
from groupshift.sft import tiling_sft


@pytest.fixture
def workspace():
    return Workspace()


@pytest.fixture
def write_json(tmp_path):
    def write(name, doc):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)

    return write


class TestWords:
    @pytest.mark.parametrize("text", ["", "1", "  "])
    def test_should_read_identity(self, text):
        # when / then
        assert word_from_json(text) == ()

    def test_should_reject_repeated_cells(self, z2):
        # when / then
        with pytest.raises(SpecError, match="same element twice"):
            cells_from_json(z2, ["a", "b a b^-1"])

    def test_should_require_a_list(self, z2):
        # when / then
        with pytest.raises(SpecError, match="JSON list"):
            cells_from_json(z2, "a")


class TestAlphabetAndPatterns:
    def test_should_read_layered_alphabet(self):
        # when
        alphabet = alphabet_from_json([["0", "1"], ["x", "y", "z"]])

        # then
        assert alphabet.depth == 2
        assert alphabet.parse("1|*") == (1, None)

    def test_should_reject_empty_alphabet(self):
        # when / then
        with pytest.raises(SpecError, match="nonempty"):
            alphabet_from_json([])

    def test_should_canonicalize_pattern_cells(self, z2):
        # given
        alphabet = Alphabet.of(["0", "1"])

        # when
        p = pattern_from_json(z2, alphabet, {"support": ["b a", "1"], "values": ["1", "0"]})

        # then
        assert p.cells == (IDENTITY, canonicalize(z2, "a b"))
        assert p.values == ((0,), (1,))

    def test_should_reject_two_symbols_on_one_cell(self, z2):
        # given
        alphabet = Alphabet.of(["0", "1"])

        # when / then
        with pytest.raises(SpecError, match="two different symbols"):
            pattern_from_json(z2, alphabet, {"support": ["a b", "b a"], "values": ["1", "0"]})

    def test_should_reject_mismatched_lengths(self, z):
        # when / then
        with pytest.raises(SpecError, match="differ in length"):
            pattern_from_json(z, Alphabet.of(["0"]), {"support": ["", "a"], "values": ["0"]})


class TestSftDocuments:
    def test_should_write_golden_mean(self, golden):
        # when
        doc = sft_to_json(golden)

        # then
        assert doc["type"] == "sft"
        assert doc["name"] == "golden-mean"
        assert doc["group"]["oracle"] == {"kind": "free-abelian", "generators": ["a"]}
        assert doc["alphabet"] == ["0", "1"]
        assert doc["forbidden"] == [{"support": ["", "a"], "values": ["1", "1"]}]

    def test_should_read_back_written_sft(self, workspace, hard_square):
        # when
        x = workspace.sft(json.loads(dumps(sft_to_json(hard_square))))

        # then
        assert x.forbidden == hard_square.forbidden
        assert x.group.generators == hard_square.group.generators

    def test_should_resolve_builtin_group_by_name(self, workspace, golden):
        # given
        doc = {"type": "sft", "group": "Z", "alphabet": ["0", "1"], "forbidden": [{"support": ["", "a"], "values": ["1", "1"]}]}

        # when
        x = workspace.sft(doc)

        # then
        assert x.forbidden == golden.forbidden

    def test_should_refer_to_loaded_documents_by_name(self, workspace, write_json, golden):
        # given
        workspace.load(write_json("mine.json", {**sft_to_json(golden), "name": "mine"}))

        # when
        x = workspace.sft("mine")

        # then
        assert x.forbidden == golden.forbidden
        assert workspace.sft("mine") is x

    def test_should_build_subgroup_documents(self, workspace):
        # given
        doc = {"type": "group", "name": "2Z", "generators": ["c"], "oracle": {"kind": "subgroup", "ambient": "Z", "images": {"c": "a a"}}}

        # when
        group = workspace.group(doc)

        # then
        assert group.name == "2Z"
        assert group.oracle.decide(("c", "c^-1"))
        assert not group.oracle.decide(("c",))

    def test_should_read_group_of_sft(self, workspace):
        # when / then
        assert workspace.group("builtin:hard-square").name == "Z2"

    def test_should_refuse_group_as_sft(self, workspace):
        # when / then
        with pytest.raises(SpecError, match="does not describe an SFT"):
            workspace.sft("Z")


class TestWorkspaceErrors:
    def test_should_report_invalid_json(self, workspace, tmp_path):
        # given
        path = tmp_path / "broken.json"
        path.write_text("{not json")

        # when / then
        with pytest.raises(SpecError, match="is not valid JSON"):
            workspace.load(path)

    def test_should_require_json_object(self, workspace, write_json):
        # when / then
        with pytest.raises(SpecError, match="must hold a JSON object"):
            workspace.load(write_json("list.json", [1, 2]))

    def test_should_report_unknown_reference(self, workspace):
        # when / then
        with pytest.raises(SpecError, match="neither a loaded document"):
            workspace.sft("nowhere")

    def test_should_report_missing_fields(self, workspace):
        # when / then
        with pytest.raises(SpecError, match="missing"):
            workspace.sft({"type": "sft", "group": "Z"})

    def test_should_refuse_other_document_type(self, workspace):
        # when / then
        with pytest.raises(SpecError, match="expected an SFT document"):
            workspace.sft({"type": "chart", "group": "Z", "alphabet": ["0"]})


class TestChartDocuments:
    def test_should_read_back_snake_chart(self, workspace):
        # given
        chart = snake_chart()

        # when
        loaded = workspace.chart(chart_to_json(chart))

        # then
        assert loaded.h_group.name == "Z"
        assert loaded.cocycle.window == chart.cocycle.window
        assert set(loaded.cocycle.entries) == set(chart.cocycle.entries)

    def test_should_infer_acting_group_from_letters(self, workspace):
        # given
        doc = chart_to_json(snake_chart())
        del doc["h_group"]

        # when
        loaded = workspace.chart(doc)

        # then
        assert loaded.h_group.generators == ("t",)

    def test_should_refuse_table_off_window(self, workspace):
        # given
        doc = chart_to_json(snake_chart())
        doc["table"][0]["pattern"]["support"] = ["a"]

        # when / then
        with pytest.raises(SpecError, match="not on the window"):
            workspace.chart(doc)


class TestTilingDocuments:
    def test_should_build_box_tiling(self, workspace):
        # when
        tiling = workspace.tiling({"type": "tiling", "group": "Z2", "boxes": [2, 3]})

        # then
        assert tiling.periods == (2, 3)
        assert len(tiling.tileset.tiles[0]) == 6

    def test_should_read_back_written_tiling(self, workspace, z):
        # given
        tiling = ExactTiling.boxes(z, [3])

        # when
        loaded = workspace.tiling(json.loads(dumps(tiling_to_json(tiling))))

        # then
        assert loaded.tileset == tiling.tileset
        assert [loaded.symbol_at((k,)) for k in range(6)] == [tiling.symbol_at((k,)) for k in range(6)]

    def test_should_read_tile_sets(self, workspace):
        # given
        doc = {"type": "tileset", "group": "Z", "tiles": [{"name": "pair", "cells": ["", "a"]}, {"cells": [""]}]}

        # when
        group, tileset = workspace.tileset(doc)

        # then
        assert group.name == "Z"
        assert tileset.names == ("pair", "T1")

    def test_should_reject_tile_without_identity(self, workspace):
        # given
        doc = {"type": "tileset", "group": "Z", "tiles": [{"cells": ["a"]}]}

        # when / then
        with pytest.raises(SpecError, match="contain the identity"):
            workspace.tileset(doc)


class TestCodingDocuments:
    def test_should_read_entries_in_both_forms(self, workspace):
        # given
        doc = {"type": "coding", "group": "Z", "alphabet": ["0", "1"], "entries": [{"word": "a", "value": "1"}, ["a a", "0"]]}

        # when
        group, coding = workspace.coding(doc)
        resolved = resolve_coding(group, coding)

        # then
        assert isinstance(resolved, Pattern)
        assert resolved[canonicalize(group, "a^-1")] == (1,)
        assert resolved[canonicalize(group, "a^-1 a^-1")] == (0,)


class TestFactorMapDocument:
    def test_should_list_every_boundary(self, golden, z):
        # given
        tiling = ExactTiling.boxes(z, [5])
        _, factor = overlay_sft(golden, tiling.tileset, tiling_sft(z, tiling.tileset), ["a^-1", "", "a"])

        # when
        doc = factor_map_to_json(factor, factor.materialize())

        # then
        assert doc["type"] == "factor-map"
        assert len(doc["table"]) == 4
        assert doc["addresses"][0] == ""
        assert all(len(row["completion"]["support"]) == 5 for row in doc["table"])


class TestDumps:
    def test_should_be_stable_text(self, golden):
        # when
        text = dumps(sft_to_json(golden))

        # then
        assert text.endswith("}\n")
        assert text == dumps(json.loads(text))
