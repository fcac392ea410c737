"""Texture descriptors from the discrete Schroedinger transform."""

__version__ = "0.1.0"

from .classify import (
    ClassificationReport,
    LdaModel,
    PcaModel,
    cross_validate,
    lda_fit,
    lda_predict,
    pca_fit,
    pca_transform,
    stratified_folds,
)
from .data import (
    DatasetIndex,
    add_gaussian_noise,
    add_salt_pepper,
    scan_dataset,
    synth_texture_dataset,
    tile_image,
)
from .features import Histogram, build_descriptor, central_moments, histogram, t_grid
from .imageio import load_grey_image, write_pgm
from .transform import (
    ChirpKernel,
    InvalidParameterError,
    make_chirp_kernel,
    transform_1d,
    transform_1d_expanded,
    transform_2d,
    transform_frequency,
)
