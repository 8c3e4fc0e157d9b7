"""Reduced dynamics of open quantum systems with fixed initial system-environment correlations."""

from . import kernels, operators
from .dynamics import (AssignmentContext, MapSnapshot, PhysicalDomainWarning, PseudoKraus, TotalModel, assign,
                       condition_number, cp_check, cp_spectra, decompose_total, epsilon_matrix, in_physical_domain,
                       inhomogeneity, inverse_map, kraus_uncorrelated, linear_map, pseudo_kraus_inhomogeneity,
                       reduced_exact, sample_physical_domain, uncorrelated_map)
from .errors import (CorrDynError, DimensionMismatch, InvalidParams, NotAState, NotCP, NotHermitian, NotTraceless,
                     ReconstructionFailure, SingularMap, SingularTime)
from .generators import (CanonicalForm, Trajectory, canonical_decompose, correlated_canonical, exact_trajectory,
                         generator, integrate_master_equation, integrate_piecewise, map_derivative,
                         trajectory_residual)
from .models import (JCParams, SwapParams, jc_coefficients, jc_domain, jc_map_closed_form, jc_model,
                     jc_rates_closed_form, swap_correlated_map_closed_form, swap_model, swap_zero_discord_map)
from .scenario import Scenario, SchemaError, load_scenario

__version__ = "0.1.0"
