"""qpathlab: wave-field dynamics, local momentum fields, sliced propagators
and stochastic path ensembles on a periodic 1D grid."""

__version__ = "0.1.0"

from .grid import Grid1D, RealField, WaveField, integrate, spectral_derivative
from .solver import (EvolutionTrace, PolarField, PotentialSpec,
                     continuity_residual, evolve_trace, polar_decompose,
                     qhj_residual, quantum_potential, split_step_evolve)
from .propagators import (CausticError, KernelMatrix, SliceScheme,
                          compose_sliced, free_action_W, free_kernel_G,
                          ho_action_W, ho_kernel_G, momentum_spray,
                          short_time_action)
from .bohm import (Trajectory, field_momentum_density, global_momentum,
                   integrate_trajectories, local_momentum, moyal_mean_momentum)
from .stochastic import (DriftFields, PathEnsemble, conditional_mean_velocity,
                         drift_fields, mean_path_vs_bohm, sample_paths)

__all__ = [
    "Grid1D", "WaveField", "RealField", "spectral_derivative", "integrate",
    "PotentialSpec", "PolarField", "EvolutionTrace", "split_step_evolve",
    "evolve_trace", "polar_decompose", "quantum_potential",
    "continuity_residual", "qhj_residual",
    "CausticError", "SliceScheme", "KernelMatrix", "short_time_action",
    "free_action_W", "free_kernel_G", "ho_action_W", "ho_kernel_G",
    "compose_sliced", "momentum_spray",
    "Trajectory", "local_momentum", "moyal_mean_momentum",
    "field_momentum_density", "global_momentum", "integrate_trajectories",
    "DriftFields", "PathEnsemble", "drift_fields", "sample_paths",
    "conditional_mean_velocity", "mean_path_vs_bohm",
]
