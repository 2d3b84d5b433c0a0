"""Frequency-domain quantum noise of a detuned dual-recycled Michelson with
EPR-entangled squeezed light and conditional dual-homodyne readout."""
__version__ = "0.1.0"

from .twophoton import SpectralDensityMatrix, db_to_squeeze_factor, squeeze_factor_to_db
from .squeezer import HomodyneAngles, SqueezerSpec, conditional_variance, epr_matrix
from .network import Network, Mirror, BeamSplitter, Loss, Isolator
from .cavity import CavitySpec, OmcSpec
from .geo import GeoConfig, GeoModel, LossBudget, build_geo, default_grid, sensitivity
from .optimize import OptimizationResult, choose_branch, optimize_epr, optimize_epr_branches
