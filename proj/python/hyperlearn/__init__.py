"""Graph-regularized CP factorization of hypergraph tensors."""

from ._hyperlearn import *  # noqa: F401,F403
from ._hyperlearn import (  # noqa: F401
    Error,
    InvalidArgument,
    NumericalError,
    ParseError,
)

__version__ = "0.1.0"
