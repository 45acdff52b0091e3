"""Linear stitching between generative-model latent spaces."""

from ._core import (
    LatentStitchError,
    LinearMap,
    Probe,
    accuracy,
    accuracy_delta,
    apply_map,
    balanced_subset,
    default_alpha,
    fid,
    fit_lasso,
    fit_lstsq,
    fit_map,
    fit_ridge,
    generate_synthetic,
    lasso_alpha_max,
    latent_mse,
    match_percent,
    pixel_rmse,
    plateau_index,
    predict,
    read_latents,
    read_map,
    read_probe,
    write_latents,
    write_map,
)

__all__ = [name for name in dir() if not name.startswith("_")]
