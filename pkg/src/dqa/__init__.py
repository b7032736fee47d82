"""Quality assessment for dehazed images.

Two scoring paths share one feature pipeline: a reduced-reference score
computed against a compact packet extracted from the haze-free source
(lower is better), and a learned no-reference score trained to predict
mean opinion (higher is better).
"""

__version__ = "0.1.0"

from .errors import (ConfigMismatchError, ConvergenceError, DataError,
                     DegenerateSampleError, DimensionError, DqaError,
                     FitError, FormatError, ManifestError, ModelFormatError,
                     OneSidedSampleError, PacketVersionError, ProtocolError)
from .evaluation import (EvalReport, LogisticParams, krcc, logistic_fit,
                         plcc_rmse, run_protocol, srcc)
from .features import (ChannelConfig, FeatureVector, ca_features,
                       global_features, ld_features, local_features)
from .image_io import (DatasetManifest, ManifestEntry, YCbCrImage,
                       decode_image, downsample_half, load_manifest)
from .naturalness import (AggdFit, GgdFit, fit_aggd, fit_ggd, mscn,
                          on_features, paired_products)
from .nrbp import (SvrConfig, SvrModel, apply_scaler, fit_scaler,
                   load_model, nrbp_features, save_model, svr_predict,
                   svr_train)
from .rrpd import RRFeaturePacket, extract_rr_packet, rrpd_score
from .stats import StatVec5, five_stats, quantize_for_hist
from .structure import (CsfParams, LocalMomentConfig, csf_filter,
                        csf_transfer, gaussian_window, gradient_magnitude,
                        local_moments)

__all__ = [
    "__version__",
    "AggdFit", "ChannelConfig", "ConfigMismatchError", "ConvergenceError",
    "CsfParams", "DataError", "DatasetManifest", "DegenerateSampleError",
    "DimensionError", "DqaError", "EvalReport", "FeatureVector", "FitError",
    "FormatError", "GgdFit", "LocalMomentConfig", "LogisticParams",
    "ManifestEntry", "ManifestError", "ModelFormatError", "OneSidedSampleError",
    "PacketVersionError", "ProtocolError", "RRFeaturePacket", "StatVec5",
    "SvrConfig", "SvrModel", "YCbCrImage",
    "apply_scaler", "ca_features", "csf_filter", "csf_transfer", "decode_image",
    "downsample_half", "extract_rr_packet", "fit_aggd", "fit_ggd",
    "fit_scaler", "five_stats", "gaussian_window", "global_features",
    "gradient_magnitude", "krcc", "ld_features", "load_manifest",
    "load_model", "local_features", "local_moments", "logistic_fit", "mscn",
    "nrbp_features", "on_features", "paired_products", "plcc_rmse",
    "quantize_for_hist", "rrpd_score", "run_protocol", "save_model", "srcc",
    "svr_predict", "svr_train",
]
