"""Finitely generated groups presented by word-problem oracles.

Elements are canonical words: the shortlex-least word (letters ranked in
declaration order, each generator followed by its inverse) representing
the element. Canonical words are discovered breadth first; a prefix of a
shortlex-least word is itself shortlex-least, so extending the canonical
words of length k by one letter, in order, reaches every element of
length k + 1 first through its canonical word.
"""

import logging
import threading
import weakref
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from groupshift.cache import CanonicalCache, create_cache
from groupshift.config import Budget
from groupshift.exceptions import EmbeddingNotInjective, OracleError, ResourceLimit, SpecError, UnknownGenerator
from groupshift.oracles import (
    FreeAbelianOracle,
    ValueOracle,
    Word,
    WordProblemOracle,
    format_word,
    inverse_letter,
    invert_word,
    is_inverse_letter,
    parse_word,
    split_letter,
)

logger = logging.getLogger(__name__)

WordLike = Union[str, Sequence[str]]


@dataclass(frozen=True)
class Element:
    word: Word

    def __str__(self) -> str:
        return format_word(self.word)

    def __len__(self) -> int:
        return len(self.word)

    @property
    def is_identity(self) -> bool:
        return not self.word


IDENTITY = Element(())


def element_name(element: Element) -> str:
    """Human-readable name; the identity is written "1"."""
    return format_word(element.word) if element.word else "1"


@dataclass(frozen=True)
class GroupSpec:
    name: str
    generators: Tuple[str, ...]
    oracle: WordProblemOracle
    relators: Tuple[Word, ...] = ()
    letters: Tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(set(self.generators)) != len(self.generators):
            raise SpecError(f"group {self.name!r} declares a generator twice")
        letters: List[str] = []
        for generator in self.generators:
            for letter in (generator, inverse_letter(generator)):
                if letter not in letters:
                    letters.append(letter)
        known = set(self.oracle.generators())
        for letter in letters:
            if split_letter(letter)[0] not in known:
                raise UnknownGenerator(f"generator {letter!r} is not interpreted by the {self.oracle.kind} oracle")
        object.__setattr__(self, "letters", tuple(letters))
        for relator in self.relators:
            self.check_word(relator)

    @property
    def base_generators(self) -> Tuple[str, ...]:
        """Declared generators with explicit inverses removed."""
        return tuple(dict.fromkeys(split_letter(g)[0] for g in self.generators))

    def check_word(self, word: Sequence[str]) -> Word:
        for letter in word:
            if letter not in self.letters:
                raise UnknownGenerator(f"letter {letter!r} in word {format_word(word)!r} is not a generator of {self.name}")
        return tuple(word)


@dataclass(frozen=True)
class Ball:
    radius: int
    elements: Tuple[Element, ...]

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, element: object) -> bool:
        return element in self.elements


def as_word(word: WordLike) -> Word:
    if isinstance(word, str):
        return parse_word(word)
    if isinstance(word, Element):
        return word.word
    return tuple(word)


class Session:
    """Canonical element arithmetic for one group.

    A session owns the breadth-first levels of canonical words and a cache
    of word -> Element lookups. It is safe to share between threads.
    """

    def __init__(
        self,
        group: GroupSpec,
        cache: Optional[CanonicalCache] = None,
        budget: Optional[Budget] = None,
    ) -> None:
        self.group = group
        self.cache: CanonicalCache = cache if cache is not None else create_cache()
        self.ball_cap = (budget or Budget.from_env()).ball_cap
        self._rank = {letter: index for index, letter in enumerate(group.letters)}
        self._levels: List[List[Element]] = [[IDENTITY]]
        self._by_value: Dict[Hashable, Element] = {}
        self._known = 1
        self._saturated = False
        self._lock = threading.RLock()
        self._values = isinstance(group.oracle, ValueOracle)
        if self._values:
            self._by_value[self._evaluate(())] = IDENTITY

    def _evaluate(self, word: Word) -> Hashable:
        assert isinstance(self.group.oracle, ValueOracle)
        return self.group.oracle.evaluate(word)

    def decide(self, word: WordLike) -> bool:
        return self.group.oracle.decide(self.group.check_word(as_word(word)))

    def sort_key(self, element: Element) -> Tuple[int, Tuple[int, ...]]:
        return len(element.word), tuple(self._rank[letter] for letter in element.word)

    def sorted(self, elements: Iterable[Element]) -> List[Element]:
        return sorted(elements, key=self.sort_key)

    def _match(self, word: Word, start: int = 0) -> Optional[Element]:
        """Known canonical element equal to word, scanning levels from `start`."""
        if self._values:
            return self._by_value.get(self._evaluate(word))
        inverse = invert_word(word)
        for level in self._levels[start:]:
            for candidate in level:
                if self.group.oracle.decide(candidate.word + inverse):
                    return candidate
        return None

    def _grow(self) -> bool:
        """Add the next breadth-first level; False once the group is exhausted."""
        if self._saturated:
            return False
        new_level: List[Element] = []
        new_values: Dict[Hashable, Element] = {}
        for element in self._levels[-1]:
            for letter in self.group.letters:
                word = element.word + (letter,)
                if self._values:
                    value = self._evaluate(word)
                    if value in self._by_value or value in new_values:
                        continue
                    new_values[value] = Element(word)
                elif self._match(word) is not None or any(
                    self.group.oracle.decide(word + invert_word(e.word)) for e in new_level
                ):
                    continue
                new_level.append(Element(word))
                if self._known + len(new_level) > self.ball_cap:
                    raise ResourceLimit(f"ball of {self.group.name} exceeds cap of {self.ball_cap} elements")
        if not new_level:
            self._saturated = True
            logger.debug(f"{self.group.name}: group exhausted with {self._known} elements")
            return False
        self._by_value.update(new_values)
        self._known += len(new_level)
        self._levels.append(new_level)
        logger.debug(f"{self.group.name}: level {len(self._levels) - 1} has {len(new_level)} elements")
        return True

    def _ensure_radius(self, radius: int) -> None:
        while len(self._levels) <= radius and self._grow():
            pass

    def canonicalize(self, word: WordLike) -> Element:
        word = self.group.check_word(as_word(word))
        cached = self.cache.get(word)
        if cached is not None:
            return cached
        with self._lock:
            found = self._match(word)
            while found is None and len(self._levels) <= len(word) and self._grow():
                found = self._match(word, start=len(self._levels) - 1)
        if found is None:
            raise OracleError(f"oracle of {self.group.name} is inconsistent: no canonical form of length <= {len(word)} for {format_word(word)!r}")
        self.cache.put(word, found)
        return found

    def multiply(self, x: Element, y: Element) -> Element:
        if not x.word:
            return y
        if not y.word:
            return x
        return self.canonicalize(x.word + y.word)

    def invert(self, x: Element) -> Element:
        return self.canonicalize(invert_word(x.word))

    def ball(self, radius: int) -> Ball:
        if radius < 0:
            raise ValueError("`radius` must be non-negative.")
        with self._lock:
            self._ensure_radius(radius)
            elements = tuple(e for level in self._levels[: radius + 1] for e in level)
        return Ball(radius, elements)

    def whole_group(self) -> Ball:
        """Every element of a finite group; ResourceLimit past the ball cap."""
        with self._lock:
            while self._grow():
                pass
            return self.ball(len(self._levels) - 1)


_SESSIONS: "weakref.WeakKeyDictionary[GroupSpec, Session]" = weakref.WeakKeyDictionary()
_SESSIONS_LOCK = threading.RLock()


def session_for(group: GroupSpec) -> Session:
    """Default session of a group spec."""
    with _SESSIONS_LOCK:
        session = _SESSIONS.get(group)
        if session is None:
            session = Session(group)
            _SESSIONS[group] = session
        return session


def wp_decide(group: GroupSpec, word: WordLike) -> bool:
    return session_for(group).decide(word)


def canonicalize(group: GroupSpec, word: WordLike) -> Element:
    return session_for(group).canonicalize(word)


def multiply(group: GroupSpec, x: Element, y: Element) -> Element:
    return session_for(group).multiply(x, y)


def invert(group: GroupSpec, x: Element) -> Element:
    return session_for(group).invert(x)


def ball(group: GroupSpec, radius: int) -> Ball:
    return session_for(group).ball(radius)


def elements(group: GroupSpec, words: Iterable[WordLike]) -> List[Element]:
    """Canonicalize words into a shortlex-sorted list of distinct elements."""
    session = session_for(group)
    return session.sorted(set(session.canonicalize(word) for word in words))


def exponent_vector(group: GroupSpec, element: Element) -> Tuple[int, ...]:
    """Exponent sums of the base generators in the element's canonical word."""
    bases = group.base_generators
    vector = [0] * len(bases)
    for letter in element.word:
        name, exponent = split_letter(letter)
        vector[bases.index(name)] += exponent
    return tuple(vector)


def lattice_element(group: GroupSpec, vector: Sequence[int]) -> Element:
    """Element b_1^{v_1} ... b_d^{v_d} for the base generators b_i."""
    bases = group.base_generators
    if len(vector) != len(bases):
        raise SpecError(f"vector {tuple(vector)} has wrong length for {group.name}")
    word: List[str] = []
    for name, exponent in zip(bases, vector):
        letter = name if exponent >= 0 else inverse_letter(name)
        word.extend([letter] * abs(exponent))
    return canonicalize(group, tuple(word))


def invariance_defect(group: GroupSpec, F: Iterable[Element], K: Iterable[Element]) -> Fraction:
    """|KF Δ F| / |F| for finite nonempty F."""
    cells = set(F)
    if not cells:
        raise ValueError("`F` must be nonempty.")
    session = session_for(group)
    product = {session.multiply(k, f) for k in K for f in cells}
    return Fraction(len(product ^ cells), len(cells))


def is_invariant(group: GroupSpec, F: Iterable[Element], K: Iterable[Element], eps: Union[float, Fraction]) -> bool:
    return invariance_defect(group, F, K) <= eps


def free_abelian_group(names: Sequence[str] = ("a", "b"), name: Optional[str] = None) -> GroupSpec:
    names = tuple(names)
    return GroupSpec(name or f"Z{len(names)}", names, FreeAbelianOracle(names))


@dataclass(frozen=True, eq=False)
class SubgroupOracle(ValueOracle):
    """Evaluates words over subgroup generators inside an ambient group.

    The value of a word is its image's canonical element in the ambient
    group, so canonicalization in the subgroup works for any ambient oracle.
    """

    ambient: GroupSpec
    images: Tuple[Tuple[str, Word], ...]
    kind = "subgroup"

    def generators(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.images)

    @property
    def identity(self) -> Element:
        return IDENTITY

    def image(self, word: Word) -> Word:
        lookup = dict(self.images)
        result: List[str] = []
        for letter in word:
            name, _ = self._generator(letter)
            result.extend(invert_word(lookup[name]) if is_inverse_letter(letter) else lookup[name])
        return tuple(result)

    def evaluate(self, word: Word) -> Element:
        return canonicalize(self.ambient, self.image(word))

    def to_json(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "ambient": self.ambient.name,
            "images": {name: format_word(word) for name, word in self.images},
        }


def subgroup(ambient: GroupSpec, images: Mapping[str, WordLike], name: Optional[str] = None) -> GroupSpec:
    """The subgroup of `ambient` generated by the given words, as its own group."""
    pairs = tuple((generator, ambient.check_word(as_word(word))) for generator, word in images.items())
    oracle = SubgroupOracle(ambient, pairs)
    return GroupSpec(name or f"{ambient.name}_sub", tuple(images), oracle)


@dataclass(frozen=True)
class Homomorphism:
    """Map from source to target given by images of the source generators."""

    source: GroupSpec
    target: GroupSpec
    images: Tuple[Tuple[str, Word], ...]

    @classmethod
    def of(cls, source: GroupSpec, target: GroupSpec, images: Mapping[str, WordLike]) -> "Homomorphism":
        pairs = tuple((name, target.check_word(as_word(word))) for name, word in images.items())
        missing = [name for name in source.base_generators if name not in dict(pairs)]
        if missing:
            raise SpecError(f"no image given for generators {missing} of {source.name}")
        return cls(source, target, pairs)

    def word_image(self, word: Sequence[str]) -> Word:
        lookup = dict(self.images)
        result: List[str] = []
        for letter in word:
            name, exponent = split_letter(letter)
            result.extend(lookup[name] if exponent > 0 else invert_word(lookup[name]))
        return tuple(result)

    def __call__(self, element: Element) -> Element:
        return canonicalize(self.target, self.word_image(element.word))

    def check_injective(self, radius: int) -> None:
        """Raise EmbeddingNotInjective unless ball(radius) maps injectively."""
        seen: Dict[Element, Element] = {}
        for element in ball(self.source, radius):
            image = self(element)
            if image in seen:
                raise EmbeddingNotInjective(
                    f"{element_name(seen[image])} and {element_name(element)} both map to {element_name(image)}"
                )
            seen[image] = element
