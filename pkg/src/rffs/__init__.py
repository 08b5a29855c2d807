"""Point-cloud structural features and evaluation harness for free-flow speed.

Pipeline: locate a label's LiDAR tile, subsample the segment on an 80x80
grid, normalize it, group points around a 7x7 raster-center grid at three
scales, reduce each group to ten eigenvalue/height statistics, and train or
evaluate a softmax baseline on the pooled 30-channel map.
"""

from .core import BBox, EigenPair2D, EigenTriple, Point3, PointCloud, SpeedSample, validate_cloud
from .raster_features import (FeatureMap, StructuralFeatureVector, assemble_feature_map,
                              covariance_eigen, eigen2d, feature_map_from_cloud,
                              group_neighborhood, multi_scale_group, pooled_features,
                              raster_centers, structural_stats)
from .segment_sampler import normalize_cloud, sample_cloud, sampling_grid, segment_bbox
from .spatial_index import (KdTree, TileIndex, TileRecord, build_kdtree, build_tile_index,
                            k_nearest, locate_tile)
from .speed_head import (LogisticModel, TrainConfig, bin_center, bin_speed, cross_entropy,
                         cross_entropy_grad, evaluate, predict, train_logistic)

__version__ = "0.1.0"
