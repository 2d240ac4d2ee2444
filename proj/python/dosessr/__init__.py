"""Two-stage adaptive dose-finding designs with unblinded sample size re-estimation."""

from dosessr._core import *  # noqa: F401,F403
from dosessr._core import __version__  # noqa: F401
