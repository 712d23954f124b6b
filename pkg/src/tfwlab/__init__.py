"""Thomas-Fermi-von Weizsaecker ground states with Yukawa and Coulomb interactions on a periodic box."""
from .energy import (NuclearConfig, SOLOVEJ_CONSTANT, assemble_density, el_residual, energy_density,
                     estimate_class_params, solovej_check, tfw_energy)
from .grid import Grid, ball_integral, build_grid, spectral_derivative, wkinf_diff_norm
from .interaction import d_pair, green_apply, kernel_multiplier, yukawa_real
from .solver import GroundState, SolverOptions, continuation_sweep, solve_ground, solve_homogeneous

__version__ = "0.1.0"
