"""Moments of level-crossing counts and level-set measures of smooth random processes.

Subpackages and modules:

* ``bounds``: feasibility windows and explicit moment bounds
* ``simulate``: process and field families with exact derivatives
* ``crossings``: crossing counters and Kac counters
* ``geometry``: Crofton estimators on balls and spheres
* ``diagnostics``: empirical moments, heavy tails and hypothesis checks
* ``kacrice``: Kac counters against Rice formulas
* ``cli``: the ``levelsets`` batch runner
"""

__version__ = "0.1.0"

from .bounds import (
    UNBOUNDED_M,
    Ball,
    BoundParams,
    Sphere,
    alpha_interval,
    bound_breakdown,
    crofton_constant,
    feasible_p_max,
    is_feasible,
    moment_bound_ball,
    moment_bound_interval,
    moment_bound_sphere,
    series_D,
    series_E,
)
from .errors import ConfigError, InfeasibleError, LevelSetError, NumericError
from .stats import MomentEstimate, moment_estimate
