"""spindrift: nuclear spin-diffusion coefficients in dilute-spin cubic
crystals and core-shell nanoparticle polarization dynamics.

The pipeline runs lattice Monte Carlo ensembles through dipolar second-moment
line widths (SQ/ZQ), converts them to spin-diffusion coefficients (nearest
neighbor and lattice sum), fits the cross-structure power laws and feeds the
coefficients into a radial finite-element build-up/decay model.
"""

from . import constants, crystal, diffusion, dipolar, linewidth, oracle, particle, scaling
from .crystal import CubicStructure, OccupiedLattice, Orientation
from .diffusion import DiffusionCoefficient, d_lattice_sum, d_nearest_neighbor, flip_flop_rate
from .dipolar import CouplingCutoff, CutoffTable, SpinSpecies, coupling, cutoff_radius
from .kernels import BACKEND
from .linewidth import LineWidthResult, SpectralDensity, p_zero, powder_linewidths
from .particle import (FitResult, ParticleGeometry, RadialProfile, Trace,
                       fit_mono_exponential, fit_t1, rate_model, simulate_buildup,
                       simulate_decay, volume_average)
from .scaling import PowerLawFit, abundance_rate_ratio, fit_power_law, predict_zq_width

__version__ = "0.1.0"
