from gsr_dist.schemas.curve import Curve, CurveFlag, CurveKind, CurveMeta
from gsr_dist.schemas.indices import WhittakerIndices
from gsr_dist.schemas.params import EvalPoint, ModelParams
from gsr_dist.schemas.run import RunConfig, TimeGrid, parse_headstarts
from gsr_dist.schemas.simulation import ComparisonReport, PassageSample, SimConfig
from gsr_dist.schemas.spectrum import Mode, ModeWeight, Spectrum

__all__ = [
    "ComparisonReport",
    "Curve",
    "CurveFlag",
    "CurveKind",
    "CurveMeta",
    "EvalPoint",
    "Mode",
    "ModeWeight",
    "ModelParams",
    "PassageSample",
    "RunConfig",
    "SimConfig",
    "Spectrum",
    "TimeGrid",
    "WhittakerIndices",
    "parse_headstarts",
]
