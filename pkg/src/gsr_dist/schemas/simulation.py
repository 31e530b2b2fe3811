from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from gsr_dist.schemas.params import ModelParams

MIN_PATHS = 100
MAX_SEED = 2**64 - 1


class SimConfig(BaseModel):
    """Euler discretization settings for one headstart"""

    model_config = ConfigDict(frozen=True)

    params: ModelParams
    r: float = Field(..., ge=0, description="Headstart")
    dt: float = Field(..., gt=0, description="Time step")
    n_paths: int = Field(..., ge=MIN_PATHS, description="Number of simulated paths")
    t_max: float = Field(..., gt=0, description="Censoring horizon")
    seed: int = Field(0, ge=0, le=MAX_SEED, description="Stream key shared by all paths")

    @model_validator(mode="after")
    def validate_config(self):
        if self.r > self.params.a_threshold:
            raise ValueError("headstart r must not exceed the threshold A")
        if self.dt > self.t_max / 100:
            raise ValueError("dt must not exceed t_max/100")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


class PassageSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    stop_time: float = Field(..., gt=0, description="Crossing time, or t_max when censored")
    crossed: bool
    dt: float = Field(..., gt=0)
    t_max: float = Field(..., gt=0)

    @model_validator(mode="after")
    def validate_sample(self):
        if self.crossed and self.stop_time > self.t_max * (1 + 1e-12):
            raise ValueError("a crossing cannot happen after t_max")
        return self


class ComparisonReport(BaseModel):
    """Analytic-vs-empirical verdict; field order is the JSON order"""

    model_config = ConfigDict(frozen=True)

    max_abs_dev: float
    n_outside_3se: int
    n_grid: int
    dt: float
    n_paths: int
    verdict: Literal["pass", "fail"]

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"
