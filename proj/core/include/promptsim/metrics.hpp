#pragma once

#include <optional>
#include <vector>

#include "promptsim/volume.hpp"

namespace promptsim {

/// Surface-to-surface distances (mm) between two nonempty masks: for every
/// surface voxel of `a`, the distance to the nearest surface voxel of `b`
/// (and the reverse). Surfaces are 6-neighbour voxel surfaces and distances
/// are measured between voxel centres.
struct SurfaceDistances {
  std::vector<double> a_to_b;
  std::vector<double> b_to_a;
};

SurfaceDistances surface_distances(const BinaryMask& a, const BinaryMask& b);

/// 2|a & b| / (|a| + |b|); two empty masks score 1.
double dice(const BinaryMask& a, const BinaryMask& b);

/// Normalised surface Dice: fraction of surface voxels (of both masks
/// together) lying within `tolerance_mm` (inclusive) of the other surface.
double nsd(const BinaryMask& a, const BinaryMask& b, double tolerance_mm = 1.0);

/// Average symmetric surface distance (mm).
double asd(const BinaryMask& a, const BinaryMask& b);

/// Max of the two directed 95th-percentile surface distances (mm), with
/// linear-interpolation percentiles.
double hd95(const BinaryMask& a, const BinaryMask& b);

/// Exact (100th percentile) symmetric Hausdorff distance.
double hausdorff(const BinaryMask& a, const BinaryMask& b);

double nsd(const SurfaceDistances& d, double tolerance_mm);
double asd(const SurfaceDistances& d);
double hd95(const SurfaceDistances& d);

struct MetricValues {
  double dice = 0.0;
  double nsd = 0.0;
  double asd_mm = 0.0;
  double hd95_mm = 0.0;

  friend bool operator==(const MetricValues&, const MetricValues&) = default;
};

struct MetricsReport {
  MetricValues whole;
  /// Scores restricted to the annotated slices, when requested.
  std::optional<MetricValues> annotated;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

struct AnnotatedSlices {
  SliceAxis axis = SliceAxis::Transverse;
  std::vector<std::int64_t> indices;
};

MetricValues score(const BinaryMask& a, const BinaryMask& b, double tolerance_mm = 1.0);

/// Whole-volume metrics and, when `slices` is given and nonempty, the same
/// metrics on both masks restricted to those slices (stacked into a thin
/// volume with the original spacing).
MetricsReport report(const BinaryMask& a, const BinaryMask& b, const std::optional<AnnotatedSlices>& slices = {},
                     double tolerance_mm = 1.0);

/// Stacks the listed planes (in the given order) into a volume: dims
/// (nx, ny, n) for transverse, (n, ny, nz) for longitudinal.
BinaryMask restrict_to_slices(const BinaryMask& mask, const AnnotatedSlices& slices);

}  // namespace promptsim
