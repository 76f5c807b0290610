"""Fingerprint image quality metrics and a dataset comparison harness."""

from .classifier import (FeatureVector, Minutia, QualityNet, ScoreSet,
                         build_feature_vector, extract_minutiae_lite,
                         load_model, predict_quality, save_model,
                         target_separation, train_quality_net)
from .config import QualityConfig, load_config
from .global_metrics import (SpectrumROI, orientation_continuity,
                             ridge_uniformity, spectrum_quality)
from .harness import (DataError, DatasetManifest, ManifestEntry, SubsetReport,
                      combined_quality, compute_metrics, load_manifest,
                      normalize_subsets, rank_and_partition, run_comparison,
                      subset_mean, write_reports)
from .image import (BlockGrid, GrayImage, ImageFormatError,
                    compute_centroid_weights, load_image, partition_blocks,
                    prepare_grid, save_pgm, segment_foreground)
from .local_metrics import (QualityScore, chen_local_index,
                            directional_quality, gabor_quality, hong_classify,
                            lim_local_score)
from .orientation import (OrientationField, RidgeStats, block_orientation,
                          compute_ridge_stats, orientation_coherence,
                          ridge_valley_stats, sinusoid_params)
from .synth import SynthSpec, generate_synthetic

__version__ = "0.1.0"
