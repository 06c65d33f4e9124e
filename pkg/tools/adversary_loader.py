"""
Adversary Loader - reads and writes adversary files.

File format:
    {"n": 4, "t": 2, "values": [1, 0, 1, 1],
     "crashes": [{"process": 2, "round": 1, "delivers_to": [3]}]}

Processes and rounds are 1-indexed; unknown keys are rejected.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from core.errors import ParseError
from core.model import Adversary, Crash, FailurePattern, validate_adversary
from tools.utils import dumps_json

logger = logging.getLogger(__name__)


class CrashModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    process: int = Field(ge=1)
    round: int = Field(ge=1)
    delivers_to: List[int] = Field(default_factory=list)


class AdversaryFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=2)
    t: int = Field(ge=0)
    values: List[int]
    crashes: List[CrashModel] = Field(default_factory=list)

    def to_adversary(self) -> Adversary:
        crashes = tuple(Crash(c.process, c.round, frozenset(c.delivers_to)) for c in self.crashes)
        return Adversary(self.n, tuple(self.values), FailurePattern(crashes, self.t))


def _line_of(text: str, key: str) -> Optional[int]:
    needle = f'"{key}"'
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return None


def parse_adversary(text: str, value_count: Optional[int] = None) -> Adversary:
    try:
        payload = orjson.loads(text)
    except orjson.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    try:
        parsed = AdversaryFile.model_validate(payload)
    except ValidationError as exc:
        error = exc.errors()[0]
        location = ".".join(str(part) for part in error["loc"])
        key = next((str(part) for part in reversed(error["loc"]) if isinstance(part, str)), None)
        raise ParseError(error["msg"], field=location or None, line=_line_of(text, key) if key else None) from exc
    adversary = parsed.to_adversary()
    validate_adversary(adversary, value_count)
    return adversary


class AdversaryLoader:
    """Loads adversary files relative to a base directory, caching parsed results"""

    def __init__(self, base_dir: Union[str, Path] = "."):
        self.base_dir = Path(base_dir)
        self._cache: Dict[str, Adversary] = {}

    def load(self, name: Union[str, Path], value_count: Optional[int] = None) -> Adversary:
        path = Path(name) if Path(name).is_absolute() else self.base_dir / name
        key = f"{path}|{value_count}"
        if key not in self._cache:
            if not path.exists():
                raise ParseError(f"adversary file not found: {path}")
            self._cache[key] = parse_adversary(path.read_text(encoding="utf-8"), value_count)
            logger.debug(f"Loaded adversary from {path}")
        return self._cache[key]


def load_adversary(path: Union[str, Path], value_count: Optional[int] = None) -> Adversary:
    return AdversaryLoader().load(path, value_count)


def save_adversary(adv: Adversary, path: Union[str, Path]) -> None:
    Path(path).write_bytes(dumps_json(adv.describe()))
