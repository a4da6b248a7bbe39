"""JSON documents for groups, patterns, SFTs, charts, tile sets and tilings.

Every document may carry "type" and "name". A Workspace keeps the loaded
documents and resolves references lazily: a reference is an inline
document, the name of a loaded document, a path to a JSON file, or one of
the built-in names.
"""

import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from groupshift.exceptions import SpecError
from groupshift.group import Element, GroupSpec, element_name, free_abelian_group, session_for, subgroup
from groupshift.oracles import format_word, oracle_from_json, parse_word, split_letter
from groupshift.pattern import Alphabet, Pattern, PatternCoding, Support, Symbol, support
from groupshift.sft import (
    SftSpec,
    TileSet,
    create_sft,
    full_shift,
    golden_mean_shift,
    hard_square_shift,
    integers,
    plane,
    snake_shift,
)
from groupshift.chart import Chart, Cocycle, snake_chart
from groupshift.reduction import ExactTiling, FactorMapSpec

logger = logging.getLogger(__name__)

Document = Dict[str, Any]
Reference = Union[str, Mapping[str, Any]]

IDENTITY_WORDS = ("", "1")


def word_from_json(text: str) -> Tuple[str, ...]:
    return () if text.strip() in IDENTITY_WORDS else parse_word(text)


def word_to_json(element: Element) -> str:
    return format_word(element.word)


def cells_from_json(group: GroupSpec, words: Sequence[str]) -> Support:
    if not isinstance(words, list):
        raise SpecError("a support must be a JSON list of words")
    session = session_for(group)
    cells = [session.canonicalize(group.check_word(word_from_json(w))) for w in words]
    if len(set(cells)) != len(cells):
        raise SpecError("support lists the same element twice")
    return support(group, cells)


def cells_to_json(cells: Sequence[Element]) -> List[str]:
    return [word_to_json(cell) for cell in cells]


def alphabet_from_json(obj: Sequence[Any]) -> Alphabet:
    if not obj:
        raise SpecError("alphabet must be nonempty")
    try:
        if all(isinstance(name, str) for name in obj):
            return Alphabet.of(obj)
        return Alphabet(tuple(tuple(layer) for layer in obj))
    except ValueError as e:
        raise SpecError(str(e))


def alphabet_to_json(alphabet: Alphabet) -> List[Any]:
    if alphabet.depth == 1:
        return list(alphabet.layers[0])
    return [list(layer) for layer in alphabet.layers]


def pattern_from_json(group: GroupSpec, alphabet: Alphabet, obj: Mapping[str, Any]) -> Pattern:
    words = obj.get("support", [])
    names = obj.get("values", [])
    if len(words) != len(names):
        raise SpecError("pattern `support` and `values` differ in length")
    session = session_for(group)
    assignment: Dict[Element, Symbol] = {}
    for word, name in zip(words, names):
        cell = session.canonicalize(group.check_word(word_from_json(word)))
        symbol = alphabet.parse(name)
        if assignment.get(cell, symbol) != symbol:
            raise SpecError(f"pattern gives cell {element_name(cell)!r} two different symbols")
        assignment[cell] = symbol
    cells = session.sorted(assignment)
    return Pattern(tuple(cells), tuple(assignment[cell] for cell in cells))


def pattern_to_json(alphabet: Alphabet, p: Pattern) -> Document:
    return {"support": cells_to_json(p.cells), "values": [alphabet.name(v) for v in p.values]}


def group_to_json(group: GroupSpec) -> Document:
    doc: Document = {
        "type": "group",
        "name": group.name,
        "generators": list(group.generators),
        "oracle": group.oracle.to_json(),
    }
    if group.relators:
        doc["relators"] = [format_word(r) for r in group.relators]
    return doc


def sft_to_json(x: SftSpec) -> Document:
    doc: Document = {"type": "sft"}
    if x.name:
        doc["name"] = x.name
    doc["group"] = group_to_json(x.group)
    doc["alphabet"] = alphabet_to_json(x.alphabet)
    doc["forbidden"] = [pattern_to_json(x.alphabet, p) for p in x.forbidden]
    return doc


def chart_to_json(ch: Chart) -> Document:
    window = ch.cocycle.window
    return {
        "type": "chart",
        "sft": sft_to_json(ch.sft),
        "h_group": group_to_json(ch.h_group),
        "h_generators": list(ch.h_group.letters),
        "window": cells_to_json(window),
        "table": [
            {
                "gen": letter,
                "pattern": pattern_to_json(ch.sft.alphabet, Pattern(window, values)),
                "value": word_to_json(value),
            }
            for letter, values, value in ch.cocycle.entries
        ],
    }


def tileset_to_json(tileset: TileSet, group: GroupSpec) -> Document:
    return {
        "type": "tileset",
        "group": group_to_json(group),
        "tiles": [{"name": name, "cells": cells_to_json(tile.cells)} for name, tile in zip(tileset.names, tileset.tiles)],
    }


def tiling_to_json(tiling: ExactTiling) -> Document:
    return {
        "type": "tiling",
        "group": group_to_json(tiling.group),
        "tiles": tileset_to_json(tiling.tileset, tiling.group),
        "periods": list(tiling.periods),
        "placements": [
            {"center": list(center), "tile": tiling.tileset.names[tile]}
            for center, tile in sorted(tiling.centers.items())
        ],
    }


def factor_map_to_json(fm: FactorMapSpec, table: Mapping[Tuple[int, Tuple[Symbol, ...]], Tuple[Symbol, ...]]) -> Document:
    """The materialized factor map: (tile, boundary pattern) -> completion."""
    alphabet = fm.x.alphabet
    rows = []
    for (tile, boundary_values), completion in sorted(table.items()):
        boundary = fm.boundary(tile)
        cells = fm.tileset.tiles[tile].cells
        rows.append(
            {
                "tile": fm.tileset.names[tile],
                "boundary": pattern_to_json(alphabet, Pattern(boundary, boundary_values)),
                "completion": pattern_to_json(alphabet, Pattern(cells, completion)),
            }
        )
    return {
        "type": "factor-map",
        "sft": sft_to_json(fm.x),
        "cores": {name: cells_to_json(c.cells) for name, c in zip(fm.tileset.names, fm.cores)},
        "addresses": cells_to_json(fm.addresses),
        "table": rows,
    }


def dumps(doc: Document) -> str:
    """Stable JSON text: fixed key order and indentation, trailing newline."""
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


BUILTINS: Dict[str, Callable[[], Any]] = {
    "Z": integers,
    "Z2": plane,
    "builtin:golden-mean": golden_mean_shift,
    "builtin:hard-square": hard_square_shift,
    "builtin:full-2": lambda: full_shift(integers(), Alphabet.of(["0", "1"]), "full-2"),
    "builtin:snake": snake_shift,
    "builtin:snake-chart": snake_chart,
}


class Workspace:
    """Named registry of documents, built on first use."""

    def __init__(self) -> None:
        self._documents: Dict[str, Document] = {}
        self._built: Dict[Tuple[str, str], Any] = {}

    def load(self, path: Union[str, Path]) -> Document:
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise SpecError(f"cannot read {path}: {e.strerror}")
        except json.JSONDecodeError as e:
            raise SpecError(f"{path} is not valid JSON: {e.msg} (line {e.lineno})")
        if not isinstance(doc, dict):
            raise SpecError(f"{path} must hold a JSON object")
        self.register(doc)
        logger.debug(f"Loaded {doc.get('type', 'document')} from {path}")
        return doc

    def register(self, doc: Document) -> None:
        name = doc.get("name")
        if isinstance(name, str) and name:
            self._documents.setdefault(name, doc)

    def _document(self, ref: Reference) -> Union[Document, Any]:
        if isinstance(ref, Mapping):
            return dict(ref)
        if not isinstance(ref, str):
            raise SpecError(f"bad reference {ref!r}")
        if ref in self._documents:
            return self._documents[ref]
        if ref in BUILTINS:
            return BUILTINS[ref]()
        if Path(ref).is_file():
            return self.load(ref)
        raise SpecError(f"reference {ref!r} is neither a loaded document, a file nor a built-in")

    def _resolve(self, kind: str, ref: Reference, build: Callable[[Document], Any]) -> Any:
        key = (kind, ref) if isinstance(ref, str) else None
        if key is not None and key in self._built:
            return self._built[key]
        found = self._document(ref)
        result = build(found) if isinstance(found, dict) else found
        if key is not None:
            self._built[key] = result
        return result

    def group(self, ref: Reference) -> GroupSpec:
        result = self._resolve("group", ref, self._build_group)
        if isinstance(result, SftSpec):
            return result.group
        if not isinstance(result, GroupSpec):
            raise SpecError(f"{ref!r} does not describe a group")
        return result

    def sft(self, ref: Reference) -> SftSpec:
        result = self._resolve("sft", ref, self._build_sft)
        if not isinstance(result, SftSpec):
            raise SpecError(f"{ref!r} does not describe an SFT")
        return result

    def chart(self, ref: Reference) -> Chart:
        result = self._resolve("chart", ref, self._build_chart)
        if not isinstance(result, Chart):
            raise SpecError(f"{ref!r} does not describe a chart")
        return result

    def tileset(self, ref: Reference, group: Optional[GroupSpec] = None) -> Tuple[GroupSpec, TileSet]:
        found = self._document(ref)
        if not isinstance(found, dict) or found.get("type", "tileset") != "tileset":
            raise SpecError(f"{ref!r} does not describe a tile set")
        g = self.group(found["group"]) if "group" in found else group
        if g is None:
            raise SpecError("tile set document names no group")
        tiles = found.get("tiles", [])
        try:
            built = TileSet(
                tuple(cells_from_json(g, tile["cells"]) for tile in tiles),
                tuple(tile.get("name", f"T{i}") for i, tile in enumerate(tiles)),
            )
        except (KeyError, TypeError):
            raise SpecError("tile entries need a `cells` list")
        except ValueError as e:
            raise SpecError(str(e))
        return g, built

    def tiling(self, ref: Reference) -> ExactTiling:
        found = self._document(ref)
        if not isinstance(found, dict) or found.get("type", "tiling") != "tiling":
            raise SpecError(f"{ref!r} does not describe a tiling")
        group = self.group(found["group"])
        try:
            if "boxes" in found:
                return ExactTiling.boxes(group, [int(s) for s in found["boxes"]], bool(found.get("centered", False)))
            _, tileset = self.tileset(found["tiles"], group)
            names = list(tileset.names)
            placements = tuple(
                (tuple(int(v) for v in entry["center"]), names.index(entry["tile"])) for entry in found["placements"]
            )
            return ExactTiling(group, tileset, tuple(int(p) for p in found["periods"]), placements)
        except (KeyError, TypeError) as e:
            raise SpecError(f"tiling document is missing or misuses {e}")
        except ValueError as e:
            raise SpecError(str(e))

    def support(self, group: GroupSpec, ref: Union[str, Sequence[str]]) -> Support:
        if isinstance(ref, str):
            path = Path(ref)
            if not path.is_file():
                raise SpecError(f"support file {ref} not found")
            try:
                words = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as e:
                raise SpecError(f"{path} is not valid JSON: {e.msg} (line {e.lineno})")
            if isinstance(words, dict):
                words = words.get("support", words.get("cells"))
            return cells_from_json(group, words)
        return cells_from_json(group, list(ref))

    def language(self, x: SftSpec, path: str) -> List[Pattern]:
        found = self._document(path)
        if isinstance(found, dict):
            found = found.get("patterns", [])
        if not isinstance(found, list):
            raise SpecError(f"{path} must hold a list of patterns")
        return [pattern_from_json(x.group, x.alphabet, entry) for entry in found]

    def coding(self, doc: Document) -> Tuple[GroupSpec, PatternCoding]:
        group = self.group(doc["group"])
        alphabet = alphabet_from_json(doc["alphabet"])
        entries = []
        for entry in doc.get("entries", []):
            word, name = (entry["word"], entry["value"]) if isinstance(entry, dict) else entry
            entries.append((group.check_word(word_from_json(word)), alphabet.parse(name)))
        return group, PatternCoding.of(entries)

    def _build_group(self, doc: Document) -> Any:
        kind = doc.get("type", "group")
        if kind == "sft":
            return self._build_sft(doc)
        if kind != "group":
            raise SpecError(f"expected a group document, got {kind!r}")
        try:
            name = doc["name"]
            generators = tuple(doc["generators"])
            oracle_doc = doc["oracle"]
        except KeyError as e:
            raise SpecError(f"group document is missing {e}")
        if oracle_doc.get("kind") == "subgroup":
            ambient = self.group(oracle_doc["ambient"])
            return subgroup(ambient, {g: word_from_json(w) for g, w in oracle_doc["images"].items()}, name)
        oracle = oracle_from_json(oracle_doc, generators)
        relators = tuple(word_from_json(r) for r in doc.get("relators", []))
        return GroupSpec(name, generators, oracle, relators)

    def _build_sft(self, doc: Document) -> SftSpec:
        if doc.get("type", "sft") != "sft":
            raise SpecError(f"expected an SFT document, got {doc.get('type')!r}")
        try:
            group = self.group(doc["group"])
            alphabet = alphabet_from_json(doc["alphabet"])
        except KeyError as e:
            raise SpecError(f"SFT document is missing {e}")
        forbidden = [pattern_from_json(group, alphabet, entry) for entry in doc.get("forbidden", [])]
        return create_sft(group, alphabet, forbidden, doc.get("name", ""))

    def _build_chart(self, doc: Document) -> Chart:
        if doc.get("type", "chart") != "chart":
            raise SpecError(f"expected a chart document, got {doc.get('type')!r}")
        try:
            x = self.sft(doc["sft"])
            h_group = self.group(doc["h_group"]) if "h_group" in doc else _h_group(doc["h_generators"])
            window = cells_from_json(x.group, doc["window"])
            entries = []
            for entry in doc["table"]:
                p = pattern_from_json(x.group, x.alphabet, entry["pattern"])
                if set(p.cells) != window.cell_set:
                    raise SpecError(f"table pattern for {entry['gen']!r} is not on the window")
                value = session_for(x.group).canonicalize(x.group.check_word(word_from_json(entry["value"])))
                entries.append((entry["gen"], tuple(p[cell] for cell in window), value))
        except KeyError as e:
            raise SpecError(f"chart document is missing {e}")
        return Chart(x, Cocycle(h_group, window.cells, tuple(entries)))


def _h_group(letters: Sequence[str]) -> GroupSpec:
    """Free abelian group on the generators named in a chart's letter list."""
    names = tuple(dict.fromkeys(split_letter(letter)[0] for letter in letters))
    return free_abelian_group(names, "Z" if len(names) == 1 else f"Z{len(names)}")


__all__ = [
    "BUILTINS",
    "Workspace",
    "alphabet_from_json",
    "alphabet_to_json",
    "cells_from_json",
    "cells_to_json",
    "chart_to_json",
    "dumps",
    "factor_map_to_json",
    "group_to_json",
    "pattern_from_json",
    "pattern_to_json",
    "sft_to_json",
    "tileset_to_json",
    "tiling_to_json",
    "word_from_json",
]
