#pragma once

#include <array>
#include <vector>

#include "promptsim/rng.hpp"
#include "promptsim/volume.hpp"

namespace promptsim {

/// Zhang-Suen thinning. Output is a subset of the input, 8-connected
/// component count is preserved and no output pixel has a full 3x3
/// foreground neighbourhood. Pixels outside the image count as background.
///
/// Plain Zhang-Suen erases some small components outright (a 2x2 block
/// is the classic case); such components get back the pixels removed in
/// the sub-iteration that emptied them.
Binary2D skeletonize_2d(const Binary2D& img);

/// Normalised Gaussian taps for offsets -r..r, r = ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian with half-sample symmetric ("reflect") padding:
/// ... c b a | a b c ... . Sigmas are in pixels, one per axis.
Scalar2D gaussian_blur(const Scalar2D& img, double sigma_x, double sigma_y);
Scalar2D gaussian_blur(const Scalar2D& img, double sigma);
/// 3D variant; sigmas in voxels per axis. Output dtype is float32.
VoxelGrid gaussian_blur(const VoxelGrid& grid, const std::array<double, 3>& sigma_vox);

Scalar2D to_scalar(const Binary2D& img);

/// 1 where value > t.
Binary2D threshold(const Scalar2D& img, double t);
BinaryMask threshold(const VoxelGrid& grid, double t);

/// Foreground pixels with at least one 4-neighbour equal to 0 (outside the
/// image counts as 0).
Binary2D boundary_2d(const Binary2D& img);

/// Flat indices (ascending) of foreground voxels with at least one background
/// 6-neighbour; the volume border counts as background. Throws
/// EmptyMaskError on an empty mask.
std::vector<std::size_t> surface_voxels_3d(const BinaryMask& mask);
BinaryMask surface_mask_3d(const BinaryMask& mask);

struct DeformationField2D {
  int width = 0;
  int height = 0;
  std::vector<double> dx;
  std::vector<double> dy;

  DeformationField2D() = default;
  DeformationField2D(int w, int h)
      : width(w), height(h), dx(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0),
        dy(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0) {}

  double max_magnitude() const noexcept;
};

/// I.i.d. standard-normal displacements, Gaussian-smoothed with
/// `smooth_sigma_px`, then rescaled so the largest displacement magnitude is
/// exactly `amplitude_px`. Zero amplitude yields a zero field.
DeformationField2D random_deformation_2d(int width, int height, Rng& rng, double amplitude_px,
                                         double smooth_sigma_px);

/// Backward warp with nearest-neighbour lookup: out(p) = img(round(p + d(p))),
/// 0 when the source falls outside the image.
Binary2D warp_2d(const Binary2D& img, const DeformationField2D& field);

/// Smooth random mask keeping roughly `coverage` of the pixels: white noise
/// blurred at `scale_px`, thresholded at its (1 - coverage) quantile.
Binary2D random_break_mask(int width, int height, Rng& rng, double coverage, double scale_px);

/// Binary dilation with a Euclidean disk of the given radius (pixels).
Binary2D dilate_disk(const Binary2D& img, double radius);

}  // namespace promptsim
