"""Gaussian-process tomographic reconstruction."""

from ._gptomo import (
    ConfigError,
    IoError,
    KernelSpec,
    NumericalError,
    RunConfig,
    SystemMatrix,
    __version__,
    build_system_matrix,
    corrupt,
    e_norm,
    fit_sequential,
    nll,
    posterior,
    reconstruct_l2,
    reconstruct_tv,
    run_experiment,
    shepp_logan,
    tv_grid_search,
)

__all__ = [
    "ConfigError",
    "IoError",
    "KernelSpec",
    "NumericalError",
    "RunConfig",
    "SystemMatrix",
    "__version__",
    "build_system_matrix",
    "corrupt",
    "e_norm",
    "fit_sequential",
    "nll",
    "posterior",
    "reconstruct_l2",
    "reconstruct_tv",
    "run_experiment",
    "shepp_logan",
    "tv_grid_search",
]
