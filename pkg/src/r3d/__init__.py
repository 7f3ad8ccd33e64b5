"""Synthetic 3-D radio-map dataset toolkit.

Pipeline stages, each its own module:

* ``env``: procedural city occupancy grids
* ``propagate2d``: per-floor base predictions (analytic or imported)
* ``channel_model``: the log-distance target model
* ``fitting``: coefficient fits, aggregation, oversampling
* ``synthesis``: whole-volume maps, linear-power composition, normalization
* ``sampling_encoding``: sparse measurements, transmitter heatmaps, features
* ``metrics``: RMSE / NMSE / PSNR / windowed SSIM
* ``dataset_io``: the R3DM sample format, the builder, and the manifest
"""

from .channel_model import TargetCoefficients, distances, eval_target, polarization_gain_db
from .env import CityGenParams, OccupancyGrid, generate_city, load_occupancy, slice_at_height
from .errors import R3DError
from .fitting import (
    CoefficientSpace,
    FitResult,
    MaskedMeasurements,
    aggregate,
    fit_coefficients,
    oversample,
)
from .grid import GridDims, Point3
from .metrics import SsimConfig, nmse, psnr, rmse, ssim
from .propagate2d import (
    Base2DParams,
    BaseMap3D,
    count_wall_crossings,
    import_slices,
    predict_slice,
    stack_slices,
)
from .sampling_encoding import (
    FeatureTensor,
    HeatmapConfig,
    SamplerConfig,
    SparseMap,
    assemble_features,
    encode_heatmap,
    sample_sparse,
)
from .synthesis import (
    ComposeConfig,
    NormStats,
    RadioMap3D,
    Transmitter,
    compose_multi,
    compute_dataset_stats,
    normalize_quantize,
    synth_single,
)
from .dataset_io import (
    BuildConfig,
    DatasetSample,
    Manifest,
    build_dataset,
    read_sample,
    split_dataset,
    write_sample,
)

__version__ = "0.1.0"
