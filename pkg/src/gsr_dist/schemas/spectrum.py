import json
import math
from typing import Any, Dict, Iterator, List, NamedTuple, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from gsr_dist.schemas.params import ModelParams


class Mode(NamedTuple):
    """One term of the spectral series.

    xi is alpha0 (real) or i*beta; rate is -lambda > 0.
    """

    xi: complex
    rate: float
    survival_coefficient: float
    density_norm: float


class ModeWeight(BaseModel):
    """Both normalizations attached to one eigenvalue root"""

    model_config = ConfigDict(frozen=True)

    xi: complex = Field(..., description="alpha (real root) or i*beta (imaginary root)")
    survival_coefficient: float = Field(..., description="Coefficient of the survival series term")
    density_norm: float = Field(..., description="Transition-density constant without the (mu^2/2)^(2 theta) factor")
    imag_residue: float = Field(
        0.0, ge=0, description="Relative imaginary part discarded from the survival coefficient"
    )


class Spectrum(BaseModel):
    """Eigen-decomposition for one (mu, A, theta), truncated to n_modes imaginary roots.

    Weights list the alpha0 term first when alpha0 is present.
    """

    model_config = ConfigDict(frozen=True)

    params: ModelParams
    alpha0: Optional[float] = Field(None, description="Real root in [0, 1], pre-change only")
    betas: List[float] = Field(..., description="Imaginary-axis roots, strictly increasing")
    weights_survival: List[float]
    weights_density_norm: List[float]
    n_modes: int = Field(..., ge=1)
    residual_max: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def validate_spectrum(self):
        if self.n_modes != len(self.betas):
            raise ValueError("n_modes must equal the number of betas")
        if any(b < 0 for b in self.betas):
            raise ValueError("betas must be nonnegative")
        if any(b2 <= b1 for b1, b2 in zip(self.betas, self.betas[1:])):
            raise ValueError("betas must be strictly increasing")

        if self.alpha0 is not None:
            if self.params.theta != 0:
                raise ValueError("alpha0 may only be present in the pre-change regime")
            if not 0.0 <= self.alpha0 <= 1.0:
                raise ValueError("alpha0 must lie in [0, 1]")

        expected = self.n_modes + (1 if self.alpha0 is not None else 0)
        for name in ("weights_survival", "weights_density_norm"):
            weights = getattr(self, name)
            if len(weights) != expected:
                raise ValueError(f"{name} must have {expected} entries")
            if not all(math.isfinite(w) for w in weights):
                raise ValueError(f"{name} must be finite")
        return self

    def modes(self) -> Iterator[Mode]:
        mu_sq = self.params.mu_sq
        offset = 0
        if self.alpha0 is not None:
            alpha = self.alpha0
            yield Mode(
                complex(alpha, 0.0),
                mu_sq * (1.0 - alpha * alpha) / 8.0,
                self.weights_survival[0],
                self.weights_density_norm[0],
            )
            offset = 1
        for k, beta in enumerate(self.betas):
            yield Mode(
                complex(0.0, beta),
                mu_sq * (1.0 + beta * beta) / 8.0,
                self.weights_survival[offset + k],
                self.weights_density_norm[offset + k],
            )

    def eigenvalues(self) -> List[float]:
        return [-mode.rate for mode in self.modes()]

    def truncated(self, n_modes: int) -> "Spectrum":
        """Same spectrum keeping only the first n_modes imaginary roots"""
        n = min(n_modes, self.n_modes)
        head = 1 if self.alpha0 is not None else 0
        return Spectrum(
            params=self.params,
            alpha0=self.alpha0,
            betas=self.betas[:n],
            weights_survival=self.weights_survival[: head + n],
            weights_density_norm=self.weights_density_norm[: head + n],
            n_modes=n,
            residual_max=self.residual_max,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mu": self.params.mu,
            "A": self.params.a_threshold,
            "theta": self.params.theta,
            "alpha0": self.alpha0,
            "betas": list(self.betas),
            "weights_survival": list(self.weights_survival),
            "weights_density_norm": list(self.weights_density_norm),
            "n_modes": self.n_modes,
            "residual_max": self.residual_max,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Spectrum":
        params = ModelParams(mu=data["mu"], a_threshold=data["A"], theta=data["theta"])
        return cls(
            params=params,
            alpha0=data.get("alpha0"),
            betas=data["betas"],
            weights_survival=data["weights_survival"],
            weights_density_norm=data["weights_density_norm"],
            n_modes=data["n_modes"],
            residual_max=data.get("residual_max", 0.0),
        )

    @classmethod
    def from_json(cls, text: str) -> "Spectrum":
        return cls.from_dict(json.loads(text))
