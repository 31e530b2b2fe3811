import cmath

from pydantic import BaseModel, ConfigDict, Field, field_validator


class WhittakerIndices(BaseModel):
    """Index pair (a, b) of W_{a,b} and M_{a,b}; b is purely real or purely imaginary"""

    model_config = ConfigDict(frozen=True)

    first: float = Field(..., description="Index a")
    second: complex = Field(..., description="Index b")

    @field_validator("first")
    @classmethod
    def validate_first(cls, v):
        if v != v or abs(v) == float("inf"):
            raise ValueError("index a must be finite")
        return v

    @field_validator("second")
    @classmethod
    def validate_second(cls, v):
        if not cmath.isfinite(v):
            raise ValueError("index b must be finite")
        if v.real * v.imag != 0:
            raise ValueError("index b must be purely real or purely imaginary")
        return v

    @property
    def a(self) -> float:
        return self.first

    @property
    def b(self) -> complex:
        return self.second

    @property
    def imaginary(self) -> bool:
        return self.second.imag != 0
