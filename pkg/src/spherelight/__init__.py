"""Spherical light distributions for HDR environment maps.

Decompose panoramas onto an anchor lattice, compare distributions with
entropic optimal transport, render spherical Gaussian maps, and score
illumination maps.
"""
from .decompose import IlluminationParams, LightMask, bin_to_anchors, decompose, light_mask
from .errors import DegenerateInputError, ImageFormatError, UnsupportedSizeError
from .gaussian_map import GaussianMapConfig, evaluate_gaussian_map, reconstruct_params, render_gaussian_map
from .hdrio import HdrImage, Panorama, read_image, write_image
from .metrics import MetricReport, angular_error, cosine_loss, evaluate, rmse, si_rmse
from .sphconv import KernelGrid, kernel_sample_grid, sample_bilinear, spherical_convolve
from .sphere import (
    AnchorSet,
    cost_matrix,
    direction_to_pixel,
    generate_anchors,
    geodesic_distance,
    pixel_to_direction,
    solid_angle_weights,
)
from .transport import SinkhornConfig, TransportPlan, exact_emd, sinkhorn, sml, sml_gradient, sml_rgb

__version__ = "0.1.0"
