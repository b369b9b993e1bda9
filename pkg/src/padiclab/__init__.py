"""padiclab: p-adic Diophantine approximation at desk scale."""

from .core import (
    INF,
    ExactMag,
    PAdicScalar,
    PlaceVector,
    Prime,
    content,
    norm_inf,
    norm_p,
    normalize_p_primitive,
    padic_abs,
    sample_padic,
    valuation,
)
from .errors import (
    BudgetExceeded,
    DegenerateOnSample,
    DomainError,
    InvalidInput,
    PadicLabError,
    PrecisionExhausted,
    RankDeficient,
    SingularMatrix,
    ZeroVectorError,
)

__all__ = [
    "INF",
    "ExactMag",
    "PAdicScalar",
    "PlaceVector",
    "Prime",
    "content",
    "norm_inf",
    "norm_p",
    "normalize_p_primitive",
    "padic_abs",
    "sample_padic",
    "valuation",
    "BudgetExceeded",
    "DegenerateOnSample",
    "DomainError",
    "InvalidInput",
    "PadicLabError",
    "PrecisionExhausted",
    "RankDeficient",
    "SingularMatrix",
    "ZeroVectorError",
]

__version__ = "0.1.0"
