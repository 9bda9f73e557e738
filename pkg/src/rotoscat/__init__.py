"""Roto-translation scattering features for image classification.

The package builds Morlet wavelet filter banks in the Fourier domain,
computes first and second order scattering coefficients of images (the
second order acting jointly on position and orientation), selects
discriminative coefficients by orthogonal least squares, and classifies
with a Gaussian kernel SVM. A command line front end wires the pieces
into a reproducible pipeline.
"""

from .filterbank import (
    MorletParams,
    SpatialFilterBank,
    AngularFilterBank,
    LittlewoodPaleyReport,
    build_spatial_bank,
    build_angular_bank,
    default_angular_scales,
    validate_bank,
    angular_frame_map,
    rotate_quarter,
    periodize_fourier,
    bank_cache_key,
    save_banks,
    load_banks,
)
from .scattering import (
    Layer1,
    Layer2,
    ScatteringOutput,
    ScatteringConfig,
    wavelet_modulus_w1,
    roto_translation_w2,
    average_aj,
    scatter,
    count_frames,
    completeness_check,
    enumerate_paths,
)
from .features import (
    SelectedBasis,
    log_transform,
    default_epsilon,
    ols_select,
    project,
    save_basis,
    load_basis,
)
from .classifier import (
    KernelModel,
    estimate_bandwidth,
    train,
    predict,
    decision_values,
    save_model,
    load_model,
)
from .datasets import (
    LabeledDataset,
    load_cifar,
    save_cifar,
    load_image_dir,
    rescale_square,
    rgb_to_yuv,
    yuv_to_rgb,
    split_train_test,
    subset_per_class,
)
from .featurefile import (
    load_features,
    save_features,
    load_manifest,
    save_manifest,
    manifest_path,
)
from .pipeline import (
    PipelineConfig,
    transform_dataset,
    transform_images,
    train_eval,
    ablate,
)

__version__ = "0.1.0"

__all__ = [
    "MorletParams",
    "SpatialFilterBank",
    "AngularFilterBank",
    "LittlewoodPaleyReport",
    "build_spatial_bank",
    "build_angular_bank",
    "default_angular_scales",
    "validate_bank",
    "angular_frame_map",
    "rotate_quarter",
    "periodize_fourier",
    "bank_cache_key",
    "save_banks",
    "load_banks",
    "Layer1",
    "Layer2",
    "ScatteringOutput",
    "ScatteringConfig",
    "wavelet_modulus_w1",
    "roto_translation_w2",
    "average_aj",
    "scatter",
    "count_frames",
    "completeness_check",
    "enumerate_paths",
    "SelectedBasis",
    "log_transform",
    "default_epsilon",
    "ols_select",
    "project",
    "save_basis",
    "load_basis",
    "KernelModel",
    "estimate_bandwidth",
    "train",
    "predict",
    "decision_values",
    "save_model",
    "load_model",
    "LabeledDataset",
    "load_cifar",
    "save_cifar",
    "load_image_dir",
    "rescale_square",
    "rgb_to_yuv",
    "yuv_to_rgb",
    "split_train_test",
    "subset_per_class",
    "load_features",
    "save_features",
    "load_manifest",
    "save_manifest",
    "manifest_path",
    "PipelineConfig",
    "transform_dataset",
    "transform_images",
    "train_eval",
    "ablate",
    "__version__",
]
