"""Word-problem oracles.

A word is a tuple of letters; a letter is a generator name or its inverse
written ``name^-1``. Oracles that can compute a hashable normal form of a
word derive from ValueOracle; canonicalization then reduces to dictionary
lookups. Oracles that can only answer "is this word trivial?" derive from
WordProblemOracle directly.
"""

import logging
import subprocess
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Hashable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from typing_extensions import TypeAlias

from groupshift.exceptions import OracleError, SpecError, UnknownGenerator

logger = logging.getLogger(__name__)

Word: TypeAlias = Tuple[str, ...]

INVERSE_SUFFIX = "^-1"


def is_inverse_letter(letter: str) -> bool:
    return letter.endswith(INVERSE_SUFFIX)


def inverse_letter(letter: str) -> str:
    if is_inverse_letter(letter):
        return letter[: -len(INVERSE_SUFFIX)]
    return letter + INVERSE_SUFFIX


def split_letter(letter: str) -> Tuple[str, int]:
    """Return (generator, exponent) for a letter, exponent being +1 or -1."""
    if is_inverse_letter(letter):
        return letter[: -len(INVERSE_SUFFIX)], -1
    return letter, 1


def parse_word(text: str) -> Word:
    """Parse a space-separated word; ``a⁻¹`` is accepted as ``a^-1``."""
    return tuple(token.replace("⁻¹", INVERSE_SUFFIX) for token in text.split())


def format_word(word: Sequence[str]) -> str:
    return " ".join(word)


def invert_word(word: Sequence[str]) -> Word:
    return tuple(inverse_letter(letter) for letter in reversed(word))


class WordProblemOracle(ABC):
    kind: str = "abstract"

    @abstractmethod
    def generators(self) -> Tuple[str, ...]:
        """Generator names this oracle interprets."""

    @abstractmethod
    def decide(self, word: Word) -> bool:
        """Return True iff the word represents the identity."""

    @abstractmethod
    def to_json(self) -> Dict[str, Any]:
        pass

    def _generator(self, letter: str) -> Tuple[str, int]:
        name, exponent = split_letter(letter)
        if name not in self.generators():
            raise UnknownGenerator(f"letter {letter!r} is not a generator of {self.kind} oracle")
        return name, exponent


class ValueOracle(WordProblemOracle):
    """Oracle that evaluates words to hashable normal forms."""

    @abstractmethod
    def evaluate(self, word: Word) -> Hashable:
        pass

    @property
    @abstractmethod
    def identity(self) -> Hashable:
        pass

    def decide(self, word: Word) -> bool:
        return self.evaluate(word) == self.identity


@dataclass(frozen=True)
class FreeAbelianOracle(ValueOracle):
    """ℤ^d; the value of a word is its exponent vector."""

    names: Tuple[str, ...]
    kind = "free-abelian"

    def generators(self) -> Tuple[str, ...]:
        return self.names

    @property
    def identity(self) -> Tuple[int, ...]:
        return (0,) * len(self.names)

    def evaluate(self, word: Word) -> Tuple[int, ...]:
        vector = [0] * len(self.names)
        for letter in word:
            name, exponent = self._generator(letter)
            vector[self.names.index(name)] += exponent
        return tuple(vector)

    def to_json(self) -> Dict[str, Any]:
        return {"kind": self.kind, "generators": list(self.names)}


@dataclass(frozen=True)
class FiniteCyclicOracle(ValueOracle):
    name: str
    order: int
    kind = "finite-cyclic"

    def __post_init__(self) -> None:
        if self.order < 1:
            raise SpecError("`order` of a finite cyclic group must be positive.")

    def generators(self) -> Tuple[str, ...]:
        return (self.name,)

    @property
    def identity(self) -> int:
        return 0

    def evaluate(self, word: Word) -> int:
        return sum(self._generator(letter)[1] for letter in word) % self.order

    def to_json(self) -> Dict[str, Any]:
        return {"kind": self.kind, "generators": [self.name], "m": self.order}


@dataclass(frozen=True)
class DirectProductOracle(ValueOracle):
    """Product of value oracles with pairwise disjoint generator names."""

    factors: Tuple[ValueOracle, ...]
    kind = "direct-product"

    def __post_init__(self) -> None:
        names = [name for factor in self.factors for name in factor.generators()]
        if len(names) != len(set(names)):
            raise SpecError("direct product factors must use distinct generator names")

    def generators(self) -> Tuple[str, ...]:
        return tuple(name for factor in self.factors for name in factor.generators())

    @property
    def identity(self) -> Tuple[Hashable, ...]:
        return tuple(factor.identity for factor in self.factors)

    def evaluate(self, word: Word) -> Tuple[Hashable, ...]:
        parts: List[List[str]] = [[] for _ in self.factors]
        for letter in word:
            name, _ = self._generator(letter)
            for index, factor in enumerate(self.factors):
                if name in factor.generators():
                    parts[index].append(letter)
                    break
        return tuple(factor.evaluate(tuple(part)) for factor, part in zip(self.factors, parts))

    def to_json(self) -> Dict[str, Any]:
        return {"kind": self.kind, "factors": [factor.to_json() for factor in self.factors]}


@dataclass(frozen=True)
class SemidirectOracle(ValueOracle):
    """ℤ^d ⋊_φ ℤ with (v, k)(w, l) = (v + w·φ^k, k + l), v and w row vectors.

    Conjugating a base generator by the acting generator gives
    t e_i t⁻¹ = row i of φ. φ must be unimodular. Powers of φ are kept as
    object arrays of Python ints, so hyperbolic actions never wrap around.
    """

    base: Tuple[str, ...]
    acting: str
    matrix: Tuple[Tuple[int, ...], ...]
    kind = "semidirect"
    _powers: Dict[int, np.ndarray] = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        d = len(self.base)
        if len(self.matrix) != d or any(len(row) != d for row in self.matrix):
            raise SpecError(f"semidirect action matrix must be {d}x{d}")
        if self.acting in self.base:
            raise SpecError("acting generator must differ from the base generators")
        phi = np.array(self.matrix, dtype=np.int64).reshape(d, d)
        if d and round(abs(np.linalg.det(phi))) != 1:
            raise SpecError("semidirect action matrix must have determinant ±1")
        inverse = np.rint(np.linalg.inv(phi)).astype(np.int64) if d else phi
        if d and not np.array_equal(phi @ inverse, np.eye(d, dtype=np.int64)):
            raise SpecError("semidirect action matrix has no integer inverse")
        self._powers[0] = np.eye(d, dtype=np.int64).astype(object)
        self._powers[1] = phi.astype(object)
        self._powers[-1] = inverse.astype(object)

    def generators(self) -> Tuple[str, ...]:
        return self.base + (self.acting,)

    @property
    def identity(self) -> Tuple[Tuple[int, ...], int]:
        return (0,) * len(self.base), 0

    def _power(self, k: int) -> np.ndarray:
        with self._lock:
            return self._power_unlocked(k)

    def _power_unlocked(self, k: int) -> np.ndarray:
        if k not in self._powers:
            step = self._powers[1] if k > 0 else self._powers[-1]
            self._powers[k] = self._power_unlocked(k - 1 if k > 0 else k + 1) @ step
        return self._powers[k]

    def evaluate(self, word: Word) -> Tuple[Tuple[int, ...], int]:
        vector = np.zeros(len(self.base), dtype=np.int64).astype(object)
        shift = 0
        for letter in word:
            name, exponent = self._generator(letter)
            if name == self.acting:
                shift += exponent
            else:
                vector = vector + exponent * self._power(shift)[self.base.index(name)]
        return tuple(int(value) for value in vector), shift

    def to_json(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "generators": list(self.base),
            "acting": self.acting,
            "matrix": [list(row) for row in self.matrix],
        }


@dataclass(frozen=True)
class LamplighterOracle(ValueOracle):
    """ℤ₂ ≀ ℤ; the value is (lit lamps, lamplighter position)."""

    shift: str = "t"
    lamp: str = "s"
    kind = "lamplighter"

    def generators(self) -> Tuple[str, ...]:
        return self.shift, self.lamp

    @property
    def identity(self) -> Tuple[FrozenSet[int], int]:
        return frozenset(), 0

    def evaluate(self, word: Word) -> Tuple[FrozenSet[int], int]:
        lamps = set()
        position = 0
        for letter in word:
            name, exponent = self._generator(letter)
            if name == self.shift:
                position += exponent
            else:
                lamps ^= {position}
        return frozenset(lamps), position

    def to_json(self) -> Dict[str, Any]:
        return {"kind": self.kind, "shift": self.shift, "lamp": self.lamp}


class SubprocessOracle(WordProblemOracle):
    """Delegates the word problem to an external process.

    Protocol: one space-separated word per line on stdin, one line "1"
    (identity) or "0" per word on stdout.
    """

    kind = "subprocess"

    def __init__(self, command: Sequence[str], names: Sequence[str]) -> None:
        self.command = tuple(command)
        self.names = tuple(names)
        self._process: Optional[subprocess.Popen] = None
        self._lock = threading.Lock()

    def generators(self) -> Tuple[str, ...]:
        return self.names

    def _ensure_started(self) -> subprocess.Popen:
        if self._process is None or self._process.poll() is not None:
            logger.info(f"Starting word-problem subprocess: {' '.join(self.command)}")
            try:
                self._process = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as e:
                raise OracleError(f"cannot start word-problem oracle {self.command!r}: {e}")
        return self._process

    def decide(self, word: Word) -> bool:
        for letter in word:
            self._generator(letter)
        with self._lock:
            process = self._ensure_started()
            assert process.stdin is not None and process.stdout is not None
            try:
                process.stdin.write(format_word(word) + "\n")
                process.stdin.flush()
                reply = process.stdout.readline().strip()
            except (BrokenPipeError, OSError) as e:
                raise OracleError(f"word-problem oracle failed: {e}")
        if reply not in ("0", "1"):
            raise OracleError(f"word-problem oracle replied {reply!r} to {format_word(word)!r}")
        return reply == "1"

    def close(self) -> None:
        with self._lock:
            if self._process is not None:
                if self._process.stdin:
                    self._process.stdin.close()
                self._process.wait(timeout=5)
                self._process = None

    def to_json(self) -> Dict[str, Any]:
        return {"kind": self.kind, "command": list(self.command), "generators": list(self.names)}


def oracle_from_json(obj: Mapping[str, Any], generators: Sequence[str]) -> WordProblemOracle:
    """Build a built-in oracle from its JSON description.

    `generators` are the owning group's declared generators; they are used
    when the description does not list its own.
    """
    kind = obj.get("kind")
    names = tuple(obj.get("generators", generators))
    if kind == "free-abelian":
        if "d" in obj and "generators" not in obj:
            names = tuple(generators)[: int(obj["d"])]
        return FreeAbelianOracle(names)
    if kind == "finite-cyclic":
        if len(names) != 1:
            raise SpecError("finite cyclic oracle needs exactly one generator")
        return FiniteCyclicOracle(names[0], int(obj["m"]))
    if kind == "direct-product":
        factors = []
        for factor in obj.get("factors", []):
            if "generators" not in factor:
                raise SpecError("direct product factors must list their generators")
            built = oracle_from_json(factor, factor["generators"])
            if not isinstance(built, ValueOracle):
                raise SpecError("direct product factors must be built-in oracles")
            factors.append(built)
        return DirectProductOracle(tuple(factors))
    if kind == "semidirect":
        acting = obj.get("acting", "t")
        base = tuple(name for name in names if name != acting)
        matrix = tuple(tuple(int(v) for v in row) for row in obj["matrix"])
        return SemidirectOracle(base, acting, matrix)
    if kind == "lamplighter":
        return LamplighterOracle(obj.get("shift", "t"), obj.get("lamp", "s"))
    if kind == "subprocess":
        command = obj.get("command")
        if not command:
            raise SpecError("subprocess oracle needs a `command`")
        return SubprocessOracle(command, names)
    raise SpecError(f"unknown oracle kind {kind!r}")
