"""INR-based CT reconstruction with subsampled gradient estimation."""

from ._inrct import *  # noqa: F401,F403
from ._inrct import __doc__  # noqa: F401
