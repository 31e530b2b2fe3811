from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

SURVIVAL_UPPER_SLACK = 1e-6
MONOTONE_SLACK = 1e-9
DENSITY_LOWER_SLACK = -1e-9


class CurveKind(str, Enum):
    SURVIVAL_PRE = "survival_pre"
    SURVIVAL_POST = "survival_post"
    DENSITY_PRE = "density_pre"
    DENSITY_POST = "density_post"
    EMPIRICAL_SURVIVAL = "empirical_survival"

    @property
    def is_survival(self) -> bool:
        return self in (
            CurveKind.SURVIVAL_PRE,
            CurveKind.SURVIVAL_POST,
            CurveKind.EMPIRICAL_SURVIVAL,
        )


class CurveFlag(str, Enum):
    OK = "ok"
    PRECONV = "preconv"


class CurveMeta(BaseModel):
    model_config = ConfigDict(frozen=True)

    r: Optional[float] = Field(None, description="Headstart the curve was evaluated at")
    n_modes: Optional[int] = None
    t_star: Optional[float] = None
    t_conv: Optional[float] = None
    mc_paths: Optional[int] = None
    dt: Optional[float] = None
    worst_undershoot: float = Field(0.0, description="Most negative series value before clamping")


class Curve(BaseModel):
    """Time grid with values, per-point flags and provenance"""

    model_config = ConfigDict(frozen=True)

    grid: List[float]
    values: List[float]
    kind: CurveKind
    flags: Optional[List[CurveFlag]] = None
    std_errors: Optional[List[float]] = None
    meta: CurveMeta = Field(default_factory=CurveMeta)

    @model_validator(mode="after")
    def validate_curve(self):
        n = len(self.grid)
        if len(self.values) != n:
            raise ValueError("grid and values must have the same length")
        if self.flags is not None and len(self.flags) != n:
            raise ValueError("flags must match the grid length")
        if self.std_errors is not None and len(self.std_errors) != n:
            raise ValueError("std_errors must match the grid length")
        if any(t2 <= t1 for t1, t2 in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")

        if self.kind.is_survival:
            if any(v < 0 or v > 1 + SURVIVAL_UPPER_SLACK for v in self.values):
                raise ValueError("survival values must lie in [0, 1]")
            checked = [v for v, f in zip(self.values, self.point_flags) if f is CurveFlag.OK]
            if any(v2 > v1 + MONOTONE_SLACK for v1, v2 in zip(checked, checked[1:])):
                raise ValueError("survival values must be non-increasing in t")
        elif any(v < DENSITY_LOWER_SLACK for v in self.values):
            raise ValueError("density values must be nonnegative")
        return self

    @property
    def point_flags(self) -> List[CurveFlag]:
        return self.flags if self.flags is not None else [CurveFlag.OK] * len(self.grid)
