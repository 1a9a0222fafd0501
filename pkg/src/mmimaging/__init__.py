"""mmWave radar imaging toolkit.

Simulates multi-antenna channel impulse responses for synthetic scenes,
removes static background and internal leakage, reconstructs spatial
pseudospectra with subarray MUSIC (spatial / temporal / joint-transmitter
smoothing) and evaluates silhouette and SSIM metrics. A small CLI ties
the stages together and defines the portable tensor container format.
"""

__version__ = "0.1.0"

from .background import BackgroundConfig, BackgroundError, EmptyCirSet, estimate_alpha, remove_background
from .container import ContainerError, read_tensor, sha256_file, verify_manifest, write_manifest, write_tensor
from .geometry import (
    DEFAULT_MISSING,
    SPEED_OF_LIGHT,
    ArrayGeometry,
    Direction,
    GeometryError,
    SubarraySpec,
    enumerate_subarrays,
    full_array,
    load_geometry,
    parse_geometry,
    steering_matrix,
    steering_vector,
    subarray_at,
)
from .metrics import MetricError, silhouette_difference, ssim, to_mask, validate_depth_image
from .music import (
    CovarianceMatrix,
    MusicConfig,
    SpectrumError,
    SpectrumImage,
    SpectrumTensor,
    angle_grids,
    build_spectrum_tensor,
    covariance,
    gate_taps,
    music_spectrum,
    noise_subspace,
    parse_music_config,
    source_order,
    subarray_snapshots,
)
from .scene import (
    DEFAULT_TAP_SPACING,
    CirFrame,
    Ellipsoid,
    HumanPhantom,
    Scatterer,
    Scene,
    SceneError,
    SceneTemplate,
    load_scene,
    parse_scene,
    realize,
    render_ground_truth,
    sample_phantom,
    simulate_frames,
    synthesize_cir,
)
