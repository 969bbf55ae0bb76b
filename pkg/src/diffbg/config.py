"""Pipeline configuration shared by every command."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Optional, Union

from .errors import ParameterError

BASELINE_METHODS = ("frame_diff", "mean_threshold", "temporal_median", "eigen_background")

MIN_WINDOW = 2
MAX_WINDOW = 60


@dataclass
class PipelineConfig:
    """All tunable parameters, validated on construction.

    ``epsilon=None`` selects the median-distance heuristic ("auto" on the
    command line and in config files).
    """

    epsilon: Optional[float] = None
    eta: int = 1
    m: int = 5
    mu: float = 2.0
    rho: float = 0.9
    max_iterations: int = 10
    passes: int = 1
    grid_rows: int = 1
    grid_cols: int = 1
    overlap_px: int = 20
    workers: int = 1
    shared_epsilon: bool = False
    baseline_method: str = "frame_diff"
    baseline_threshold: float = 25.0
    history: int = 5
    eigen_count: int = 3
    speckle_min_size: int = 8

    def __post_init__(self) -> None:
        if self.epsilon is not None:
            self.epsilon = float(self.epsilon)
            if not self.epsilon > 0:
                raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        _check_int(self, "eta", 1)
        _check_int(self, "m", MIN_WINDOW, MAX_WINDOW)
        if not self.mu > 0:
            raise ParameterError(f"mu must be positive, got {self.mu}")
        if not 0 < self.rho <= 1:
            raise ParameterError(f"rho must lie in (0, 1], got {self.rho}")
        _check_int(self, "max_iterations", 1)
        _check_int(self, "passes", 1, 2)
        _check_int(self, "grid_rows", 1)
        _check_int(self, "grid_cols", 1)
        _check_int(self, "overlap_px", 0)
        _check_int(self, "workers", 1)
        if self.baseline_method not in BASELINE_METHODS:
            raise ParameterError(
                f"unknown baseline method {self.baseline_method!r}; "
                f"expected one of {', '.join(BASELINE_METHODS)}"
            )
        if not self.baseline_threshold >= 0:
            raise ParameterError("baseline_threshold must be non-negative")
        _check_int(self, "history", 1)
        _check_int(self, "eigen_count", 1)
        _check_int(self, "speckle_min_size", 1)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        if d["epsilon"] is None:
            d["epsilon"] = "auto"
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {', '.join(sorted(unknown))}")
        data = dict(data)
        if "epsilon" in data:
            data["epsilon"] = parse_epsilon(data["epsilon"])
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"malformed config: {exc}") from exc
        if not isinstance(data, dict):
            raise ParameterError("config must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "PipelineConfig":
        return cls.from_json(Path(path).read_text())

    def replace(self, **changes: Any) -> "PipelineConfig":
        d = asdict(self)
        d.update(changes)
        return PipelineConfig(**d)


def parse_epsilon(value: Union[str, float, int, None]) -> Optional[float]:
    if value is None:
        return None
    if isinstance(value, str):
        if value.strip().lower() == "auto":
            return None
        try:
            return float(value)
        except ValueError:
            raise ParameterError(f"epsilon must be a positive number or 'auto', got {value!r}")
    return float(value)


def _check_int(cfg: PipelineConfig, name: str, lo: int, hi: Optional[int] = None) -> None:
    value = getattr(cfg, name)
    if isinstance(value, bool) or int(value) != value:
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    setattr(cfg, name, value)
    if value < lo or (hi is not None and value > hi):
        bound = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
        raise ParameterError(f"{name} must be {bound}, got {value}")
