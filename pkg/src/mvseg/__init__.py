"""Active-contour segmentation of manifold-valued images.

Pixels live on a Riemannian manifold (R^n, S^1, S^2, SO(3) or SPD(n)).  Two
level-set solvers are provided: geodesic active contours driven by the
manifold gradient magnitude, and Chan-Vese contours driven by geodesic
distances to intrinsic region means.  A texture front end turns grayscale
images into SPD(M^2)-valued images of patch second moments.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BadMagicError,
    CutLocusError,
    FormatError,
    InvalidArgumentError,
    MvsegError,
    NonConvergenceError,
    NumericalBlowupError,
    NumericalError,
    PixelInvariantError,
    TruncatedError,
    UnsupportedFormatError,
)
from .geometry import (  # noqa: E402
    SO3,
    SPD,
    Euclidean,
    Manifold,
    MeanSolverParams,
    Sphere1,
    Sphere2,
    intrinsic_mean,
    parse_manifold,
)
from .image import ManifoldImage, gradient_magnitude, stopping_function, structure_tensor  # noqa: E402
from .levelset import Circle, Rectangle, dice, extract_mask, init_shape, reinitialize  # noqa: E402
from .segmentation import (  # noqa: E402
    ChanVeseParams,
    GacParams,
    SegmentationResult,
    segment_chan_vese,
    segment_gac,
)
from .synthetic import generate_synthetic, stripe_montage  # noqa: E402
from .texture import TextureFeatureParams, local_covariance, patch_vector, texture_to_mvi  # noqa: E402
