import logging
import os
from dataclasses import dataclass, replace
from typing import Optional

from groupshift.exceptions import ResourceLimit, SpecError

try:
    from dotenv import load_dotenv

    HAS_DOTENV = True
except ImportError:
    HAS_DOTENV = False

if HAS_DOTENV:
    load_dotenv()

logger = logging.getLogger(__name__)

ENV_PREFIX = "GROUPSHIFT_BUDGET_"


@dataclass(frozen=True)
class Budget:
    """Explicit limits for every exhaustive computation.

    Exceeding a limit raises ResourceLimit; nothing is ever silently truncated.
    """

    nodes: int = 5_000_000
    ball_cap: int = 100_000
    patterns: int = 1_000_000
    subsets: int = 100_000
    states: int = 2048
    iterations: int = 100_000

    def __post_init__(self) -> None:
        for name in ("nodes", "ball_cap", "patterns", "subsets", "states", "iterations"):
            if getattr(self, name) < 1:
                raise ValueError(f"`{name}` must be positive.")

    def check(self, name: str, used: int) -> None:
        limit = getattr(self, name)
        if used > limit:
            raise ResourceLimit(f"{name} budget exceeded ({used} > {limit})")

    def with_overrides(self, **overrides: Optional[int]) -> "Budget":
        values = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **values)

    @classmethod
    def from_env(cls) -> "Budget":
        """Build a budget from GROUPSHIFT_BUDGET_* variables; a .env file is read once at import."""
        fields = {
            "nodes": "NODES",
            "ball_cap": "BALL",
            "patterns": "PATTERNS",
            "subsets": "SUBSETS",
            "states": "STATES",
            "iterations": "ITERATIONS",
        }
        values = {}
        for name, suffix in fields.items():
            raw = os.getenv(ENV_PREFIX + suffix)
            if raw is None or raw.strip() == "":
                continue
            try:
                values[name] = int(raw)
            except ValueError:
                raise SpecError(f"{ENV_PREFIX + suffix} must be an integer, got {raw!r}")
            logger.debug(f"Budget override from environment: {name}={values[name]}")
        try:
            return cls(**values)
        except ValueError as e:
            raise SpecError(str(e))
