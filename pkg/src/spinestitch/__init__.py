"""Stitching of truncated spinal X-ray sequences from screw landmarks.

The pipeline registers image pairs by minimizing the squared distances
between warped screw centroids, orders an unordered image set by the same
energy, joins adjacent images along a minimal hybrid-energy seam and blends
them with a sigmoid cross-fade. A synthetic-sequence generator and
SSIM/PSNR harness make every stage checkable without clinical data.
"""

from .composition import BlendConfig, Canvas, blend_pair, compute_canvas, stitch_all
from .config import PipelineConfig, load_config, parse_config
from .estimators import PointSetRegistration, Stitcher
from .exceptions import (
    AmbiguousOrientation,
    ConfigError,
    DegenerateConfiguration,
    DegenerateExtent,
    DisconnectedSet,
    EmptyOverlap,
    ExtentMismatch,
    FeatureMapMismatch,
    InfeasibleSpec,
    NonInvertibleResult,
    NoValidMatches,
    OrderingError,
    ProjectiveDivideByZero,
    RegistrationError,
    SingularMatrix,
    StitchError,
    TooManyImages,
    TooSmall,
)
from .geometry import (
    BoundingBox,
    apply_homography,
    compose,
    identity,
    invert,
    translation,
    warp_image,
)
from .harness import evaluate_against_truth, run_cell, sweep
from .masks import connected_components, extract_centroids, fallback_segment
from .metrics import MetricReport, psnr, ssim
from .ordering import (
    PairwiseEnergyMatrix,
    StitchPlan,
    build_energy_matrix,
    order_exact,
    order_greedy,
    pick_reference_and_chain,
)
from .register import (
    RegistrationConfig,
    RegistrationResult,
    align_energy,
    estimate_transform,
    register_pair,
)
from .seam import (
    OrientedGradientFeatures,
    PrecomputedFeatures,
    SeamPath,
    SeamWeights,
    color_energy,
    feature_energy,
    find_seam,
    gradient_energy,
    hybrid_energy,
)
from .synth import GroundTruth, SynthSpec, generate, make_centroid_pair

__version__ = "0.1.0"

__all__ = [
    "AmbiguousOrientation",
    "BlendConfig",
    "BoundingBox",
    "Canvas",
    "ConfigError",
    "DegenerateConfiguration",
    "DegenerateExtent",
    "DisconnectedSet",
    "EmptyOverlap",
    "ExtentMismatch",
    "FeatureMapMismatch",
    "GroundTruth",
    "InfeasibleSpec",
    "MetricReport",
    "NonInvertibleResult",
    "NoValidMatches",
    "OrderingError",
    "OrientedGradientFeatures",
    "PairwiseEnergyMatrix",
    "PipelineConfig",
    "PointSetRegistration",
    "PrecomputedFeatures",
    "ProjectiveDivideByZero",
    "RegistrationConfig",
    "RegistrationError",
    "RegistrationResult",
    "SeamPath",
    "SeamWeights",
    "SingularMatrix",
    "StitchError",
    "StitchPlan",
    "Stitcher",
    "SynthSpec",
    "TooManyImages",
    "TooSmall",
    "align_energy",
    "apply_homography",
    "blend_pair",
    "build_energy_matrix",
    "color_energy",
    "compose",
    "compute_canvas",
    "connected_components",
    "estimate_transform",
    "evaluate_against_truth",
    "extract_centroids",
    "fallback_segment",
    "feature_energy",
    "find_seam",
    "generate",
    "gradient_energy",
    "hybrid_energy",
    "identity",
    "invert",
    "load_config",
    "make_centroid_pair",
    "order_exact",
    "order_greedy",
    "parse_config",
    "pick_reference_and_chain",
    "psnr",
    "register_pair",
    "run_cell",
    "ssim",
    "stitch_all",
    "sweep",
    "translation",
    "warp_image",
]
