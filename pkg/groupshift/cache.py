import logging
import os
import threading
from abc import ABC, abstractmethod
from typing import Dict, Generic, Hashable, Optional, TypeVar

logger = logging.getLogger(__name__)

K = TypeVar("K", bound=Hashable)
V = TypeVar("V")


class CanonicalCache(ABC, Generic[K, V]):
    """Abstract memo for word -> canonical element lookups of one session."""

    @abstractmethod
    def get(self, key: K) -> Optional[V]:
        """Return the cached value for key, or None when absent."""

    @abstractmethod
    def put(self, key: K, value: V) -> None:
        """Store value under key."""

    @abstractmethod
    def __len__(self) -> int:
        pass


class InMemoryCache(CanonicalCache[K, V]):
    """Dictionary cache guarded by a lock so sessions can be shared by threads."""

    def __init__(self) -> None:
        self._entries: Dict[K, V] = {}
        self._lock = threading.Lock()

    def get(self, key: K) -> Optional[V]:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: K, value: V) -> None:
        with self._lock:
            self._entries[key] = value

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


class NullCache(CanonicalCache[K, V]):
    """Cache that remembers nothing; results must not depend on caching."""

    def get(self, key: K) -> Optional[V]:
        return None

    def put(self, key: K, value: V) -> None:
        pass

    def __len__(self) -> int:
        return 0


def create_cache(kind: Optional[str] = None) -> CanonicalCache:
    """Create the cache backend selected by `kind` or GROUPSHIFT_CACHE.

    Args:
        kind: "memory" (default) or "none".
    """
    if kind is None:
        kind = os.getenv("GROUPSHIFT_CACHE", "memory")

    if kind == "none":
        logger.debug("Using null canonicalization cache")
        return NullCache()
    if kind != "memory":
        logger.warning(f"Unknown cache kind {kind!r}, falling back to in-memory cache")
    return InMemoryCache()
