"""Monte Carlo bound experiments and the explicit proof certificates."""

from .constructions import *  # noqa: F401,F403
from .experiments import *  # noqa: F401,F403
from .stats import *  # noqa: F401,F403
from . import constructions as _c, experiments as _e, stats as _s

__all__ = [*_c.__all__, *_e.__all__, *_s.__all__]
