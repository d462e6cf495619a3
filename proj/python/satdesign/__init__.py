"""Saturation designs for clustered experiments with interference."""

from ._core import *  # noqa: F401,F403
from ._core import (  # noqa: F401
    Clustering,
    ConstraintError,
    Error,
    Graph,
    InvalidInput,
    LinearModel,
)

__version__ = "0.1.0"
