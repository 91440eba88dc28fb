"""reconeval: evaluation toolkit for 3D reconstructions across air and
underwater imagery.

Covers trajectory accuracy under similarity alignment, point-cloud and mesh
geometry metrics, perceptual color metrics, image preprocessing, and greedy
weak-voxel view selection for cross-domain augmentation.
"""

__version__ = "0.1.0"

from .alignment import (
    IcpConfig,
    IcpResult,
    icp_rigid,
    rms_radius,
    rms_scale_normalize,
    umeyama_align,
)
from .errors import ParseError
from .geometry import (
    CameraPinhole,
    PointCloud,
    SimilarityTransform,
    SpatialIndex,
    TimedPose,
    Trajectory,
    TriangleMesh,
    VoxelGrid,
    apply_similarity,
    nearest_neighbor,
    voxelize,
)
from .geometry_metrics import (
    CloudComparison,
    CloudMetrics,
    MeshStats,
    chamfer_rms,
    cloud_metrics,
    evaluate_cloud_pair,
    mean_nn_distance,
    mesh_stats,
    surface_roughness,
)
from .radiometry import (
    DeltaEStats,
    Image8,
    clahe,
    crop,
    delta_e_from_lab,
    delta_e_stats,
    exposure_normalize,
    lab_to_srgb,
    psnr,
    srgb_to_lab,
    ssim,
    white_balance_grayworld,
)
from .selection import (
    CandidateImage,
    SelectionResult,
    WeakVoxelSet,
    find_weak_voxels,
    greedy_select,
    score_image,
)
from .trajectory_metrics import AteResult, RpeResult, associate, ate, default_max_dt, rpe

__all__ = [
    "__version__",
    "AteResult",
    "CameraPinhole",
    "CandidateImage",
    "CloudComparison",
    "CloudMetrics",
    "DeltaEStats",
    "IcpConfig",
    "IcpResult",
    "Image8",
    "MeshStats",
    "ParseError",
    "PointCloud",
    "RpeResult",
    "SelectionResult",
    "SimilarityTransform",
    "SpatialIndex",
    "TimedPose",
    "Trajectory",
    "TriangleMesh",
    "VoxelGrid",
    "WeakVoxelSet",
    "apply_similarity",
    "associate",
    "ate",
    "chamfer_rms",
    "clahe",
    "cloud_metrics",
    "crop",
    "default_max_dt",
    "delta_e_from_lab",
    "delta_e_stats",
    "evaluate_cloud_pair",
    "exposure_normalize",
    "find_weak_voxels",
    "greedy_select",
    "icp_rigid",
    "lab_to_srgb",
    "mean_nn_distance",
    "mesh_stats",
    "nearest_neighbor",
    "psnr",
    "rms_radius",
    "rms_scale_normalize",
    "rpe",
    "score_image",
    "srgb_to_lab",
    "ssim",
    "surface_roughness",
    "umeyama_align",
    "voxelize",
    "white_balance_grayworld",
]
