from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from gsr_dist.core.exceptions import DomainError
from gsr_dist.schemas.params import ModelParams

MAX_GRID_POINTS = 10**6


class TimeGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    t_min: float = Field(..., ge=0)
    t_max: float = Field(..., gt=0)
    n_points: int = Field(..., ge=1, le=MAX_GRID_POINTS)
    spacing: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def validate_grid(self):
        if self.n_points > 1 and not self.t_max > self.t_min:
            raise ValueError("t_max must exceed t_min")
        if self.n_points == 1 and self.t_max != self.t_min and self.t_min != 0:
            raise ValueError("a single-point grid needs t_min == t_max")
        if self.spacing == "log" and self.t_min <= 0:
            raise ValueError("log spacing needs t_min > 0")
        return self

    @classmethod
    def parse(cls, spec: str) -> "TimeGrid":
        """Parse 'min:max:n[:log]'"""
        parts = spec.split(":")
        if len(parts) not in (3, 4):
            raise DomainError(f"grid '{spec}' must look like min:max:n[:log]")
        try:
            t_min, t_max, n_points = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise DomainError(f"grid '{spec}' has a non-numeric field") from exc
        spacing = parts[3] if len(parts) == 4 else "linear"
        return cls(t_min=t_min, t_max=t_max, n_points=n_points, spacing=spacing)

    def values(self) -> List[float]:
        if self.n_points == 1:
            return [self.t_max]
        if self.spacing == "log":
            grid = np.geomspace(self.t_min, self.t_max, self.n_points)
        else:
            grid = np.linspace(self.t_min, self.t_max, self.n_points)
        return [float(t) for t in grid]


def parse_headstarts(specs: List[str]) -> List[float]:
    """Expand repeatable --headstart values; 'a:b:n' is an inclusive linear range"""
    values: List[float] = []
    for spec in specs:
        parts = spec.split(":")
        if len(parts) not in (1, 3):
            raise DomainError(f"headstart '{spec}' must be a value or a range a:b:n")
        try:
            if len(parts) == 1:
                values.append(float(spec))
                continue
            start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise DomainError(f"headstart '{spec}' has a non-numeric field") from exc
        if n < 1:
            raise DomainError("headstart range needs n >= 1")
        values.extend(float(r) for r in np.linspace(start, stop, n))
    return values


class RunConfig(BaseModel):
    """Everything a subcommand needs after flag parsing"""

    model_config = ConfigDict(frozen=True)

    command: str
    params: ModelParams
    headstarts: List[float] = Field(default_factory=lambda: [0.0])
    time_grid: Optional[TimeGrid] = None
    n_modes: int = Field(500, ge=1)
    out: Optional[Path] = None
    format: Literal["csv", "json"] = "csv"

    @field_validator("headstarts")
    @classmethod
    def validate_headstarts(cls, v):
        if not v:
            raise ValueError("at least one headstart is required")
        if any(r < 0 for r in v):
            raise ValueError("headstarts must be nonnegative")
        return v

    @model_validator(mode="after")
    def validate_headstart_range(self):
        if any(r > self.params.a_threshold for r in self.headstarts):
            raise ValueError("headstarts must not exceed the threshold A")
        return self
