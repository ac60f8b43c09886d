"""Sliding-window spotting of short facial events in video.

Pipeline: temporal pyramid -> fixed-length scanning windows -> LBP-TOP /
HOG-TOP / HIGO-TOP descriptors -> linear SVM -> temporal NMS, with
per-window and per-video DET evaluation under LOSO and random splits.
"""

from .classifier import LinearModel, TrainConfig, load_model, predict, save_model, score, train
from .core import DatasetManifest, Interval, VideoRecord, VideoVolume, load_manifest, load_volume, save_volume
from .descriptors import BlockGrid, DescriptorConfig, extract, window_features
from .errors import MespotError
from .evaluation import DetCurve, SplitSpec, aggregate_overall, det_per_video, det_per_window, reference_point
from .sampling import enumerate_windows, iou, label_window, normalize_ground_truth
from .spotting import Detection, scan, spot, temporal_nms
from .temporal import ScaleSpec, build_pyramid, map_to_original, resample_temporal

__version__ = "0.1.0"
