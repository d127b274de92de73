"""Wavelet-scattering features for images with linear classification on
top: filter banks, the two-layer cascade, standardization, a deterministic
linear SVM, and binary file formats for features, standardizers, and
models."""

from .classifier import (Evaluation, LinearModel, evaluate, predict,
                         read_model, train, write_model)
from .conv_engine import (Plane, conv2d_direct, conv2d_fft, fold_spectrum,
                          modulus, rot90_periodic, subsample_filter)
from .errors import (DataError, DegenerateBankError, FormatError,
                     IngestionError, ParameterError, ScatterkitError)
from .features import (Standardizer, apply_standardizer, fit_standardizer,
                       read_features, read_standardizer, write_features,
                       write_standardizer)
from .filterbank import (AngularFilterBank, MorletParams, SpatialFilterBank,
                         build_filter_bank, littlewood_paley_scan,
                         make_angular_bank, make_gaussian_lowpass,
                         make_haar_bank, make_morlet_2d)
from .scattering import (PathEntry, ScatteringConfig, ScatteringFeatures,
                         ScatteringTransform, count_features, enumerate_paths,
                         get_transform, path_line, scatter, stride_log2)

__version__ = "0.1.0"

__all__ = [
    "AngularFilterBank", "DataError", "DegenerateBankError", "Evaluation",
    "FormatError", "IngestionError", "LinearModel", "MorletParams",
    "ParameterError", "PathEntry", "Plane", "ScatteringConfig",
    "ScatteringFeatures", "ScatteringTransform", "ScatterkitError",
    "SpatialFilterBank", "Standardizer", "apply_standardizer",
    "build_filter_bank", "conv2d_direct", "conv2d_fft", "count_features",
    "enumerate_paths", "evaluate", "fit_standardizer", "fold_spectrum",
    "get_transform", "littlewood_paley_scan", "make_angular_bank",
    "make_gaussian_lowpass", "make_haar_bank", "make_morlet_2d", "modulus",
    "path_line", "predict", "read_features", "read_model",
    "read_standardizer", "rot90_periodic", "scatter", "stride_log2",
    "subsample_filter", "train", "write_features", "write_model",
    "write_standardizer",
]
