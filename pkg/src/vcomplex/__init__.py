"""V-complexity of real functions, compression-based complexity, and the
complexity curve of cream mixing into coffee."""
from .functions import FunctionSpec, builtin, parse_spec, sampled
from .vcomplexity import (StepFunction, asymptotic_grid, equidistribute,
                          greedy_equidistribution, optimal_constant, v_complexity)
from .compression import (GridSpec, discretize, lz77_decode, lz77_encode,
                          rle_complexity, rle_encode, uniform_step_error,
                          window_ratio_experiment)

__version__ = "0.1.0"
