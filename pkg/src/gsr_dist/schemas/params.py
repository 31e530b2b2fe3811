from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ModelParams(BaseModel):
    """Drift, threshold and regime: the triple behind every formula.

    Everything downstream reads ``mu_sq`` only, so results for mu and -mu are
    bit-identical.
    """

    model_config = ConfigDict(frozen=True)

    mu: float = Field(..., description="Post-change drift magnitude per unit sqrt(time), nonzero")
    a_threshold: float = Field(..., gt=0, description="Detection threshold A")
    theta: int = Field(..., description="Regime flag: 0 pre-change, 1 post-change")

    @field_validator("mu")
    @classmethod
    def validate_mu(cls, v):
        if v == 0 or v != v or abs(v) == float("inf"):
            raise ValueError("mu must be a finite nonzero drift")
        return v

    @field_validator("a_threshold")
    @classmethod
    def validate_threshold(cls, v):
        if v == float("inf"):
            raise ValueError("threshold must be finite")
        return v

    @field_validator("theta")
    @classmethod
    def validate_theta(cls, v):
        if v not in (0, 1):
            raise ValueError("theta must be 0 (pre-change) or 1 (post-change)")
        return v

    @property
    def mu_sq(self) -> float:
        return self.mu * self.mu

    @property
    def u_threshold(self) -> float:
        """Whittaker argument 2/(mu^2 A) at the absorbing boundary"""
        return self.u_of(self.a_threshold)

    def u_of(self, x: float) -> float:
        return 2.0 / (self.mu_sq * x)


class EvalPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: ModelParams
    r: float = Field(..., ge=0, description="Headstart")
    t: float = Field(..., ge=0, description="Time")

    @model_validator(mode="after")
    def validate_headstart(self):
        if self.r > self.params.a_threshold:
            raise ValueError("headstart r must not exceed the threshold A")
        return self
