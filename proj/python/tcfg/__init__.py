"""Tangential-damping classifier-free guidance on toy diffusion models."""

from ._core import (
    NoiseSchedule,
    TcfgError,
    analytic_eps,
    cfg_combine,
    frechet_gaussian_2d,
    guide,
    mean_manifold_distance,
    pooled_tcfg_project,
    project_to_moons,
    run_cli,
    sample_oracle,
    spectral_gap_index,
    svd,
    tcfg_combine,
    tcfg_project,
    two_moons,
)

__all__ = [
    "NoiseSchedule",
    "TcfgError",
    "analytic_eps",
    "cfg_combine",
    "frechet_gaussian_2d",
    "guide",
    "mean_manifold_distance",
    "pooled_tcfg_project",
    "project_to_moons",
    "run_cli",
    "sample_oracle",
    "spectral_gap_index",
    "svd",
    "tcfg_combine",
    "tcfg_project",
    "two_moons",
]
