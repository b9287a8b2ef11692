"""Second-order blind source separation with bootstrap tests for the noise dimension."""

from .bootstrap import BootstrapStrategy, NoiseTest, resample_noise, test_dimension
from .bss import BssMethod, BssSolution, NoiseStatistic, amuse, noise_statistic, sobi
from .errors import (
    ConvergenceFailure,
    InvalidDimensionError,
    InvalidInputError,
    InvalidLagError,
    InvalidModelError,
    ParseError,
    ReportIOError,
    SingularCovarianceError,
    SosdimError,
    UnsupportedFormatError,
)
from .estimation import (
    DimensionEstimate,
    estimate_backward,
    estimate_dimension,
    estimate_divide_conquer,
    estimate_forward,
)
from .linalg import inv_sqrt_sym, joint_diagonalize, sym_eig
from .series import WhiteningResult, autocov, center, whiten

__version__ = "0.1.0"
