#pragma once

#include <span>
#include <vector>

#include "inrct/geometry.hpp"
#include "inrct/grid.hpp"

namespace inrct {

/// Ray-driven Joseph projector for a fixed (geometry, grid) pair.
///
/// Each ray is sampled once per slice along its dominant axis and the image is
/// linearly interpolated across the remaining axes. `back` applies the exact
/// transpose of the same stencil, so <P x, y> == <x, P^T y> up to rounding.
/// Both operators are pure; there are no differentiation hooks.
class Projector {
 public:
  Projector(Geometry geometry, VoxelGrid grid);

  const Geometry& geometry() const { return geometry_; }
  const VoxelGrid& grid() const { return grid_; }
  std::size_t num_rays() const { return layout_.num_rays(); }
  std::size_t num_voxels() const { return grid_.size(); }
  int num_views() const { return layout_.num_views; }

  std::vector<double> forward(std::span<const double> image) const;
  std::vector<double> back(std::span<const double> sino) const;

  /// Projects only the listed views; rays of other views are left untouched.
  void forward_views(std::span<const double> image, std::span<double> sino,
                     std::span<const int> views) const;
  /// Accumulates the backprojection of the listed views into `image`.
  void back_views(std::span<const double> sino, std::span<double> image,
                  std::span<const int> views) const;

 private:
  template <class Visit>
  void trace(int view, int row, int col, Visit&& visit) const;

  Geometry geometry_;
  VoxelGrid grid_;
  ScanLayout layout_;
  std::vector<double> cos_, sin_;
};

Sinogram forward_project(const ImageVec& image, const Geometry& geometry);
ImageVec back_project(const Sinogram& sino, const VoxelGrid& grid);

/// Discrete Ram-Lak kernel h(k), |k| < num_det, for detector spacing `det_spacing`:
/// h(0) = 1/(4 d^2), h(even) = 0, h(odd k) = -1/(pi k d)^2.
struct RampFilter {
  std::vector<double> kernel;  // kernel[k + num_det - 1] = h(k)
  int num_det = 0;
  double det_spacing = 1.0;

  double at(int k) const { return kernel[k + num_det - 1]; }
};

RampFilter make_ramp_filter(int num_det, double det_spacing);
/// Kernel whose convolution (including the spacing factor) is the identity.
RampFilter make_identity_filter(int num_det, double det_spacing);

/// Convolves every detector row of every view with the kernel, scaled by the
/// detector spacing so the result approximates the continuous convolution.
std::vector<double> apply_ramp(std::span<const double> sino, const ScanLayout& layout,
                               const RampFilter& filter);
Sinogram apply_ramp(const Sinogram& sino, const RampFilter& filter);

/// Fan-beam FBP (2D) or FDK (3D) for a full circular scan with equispaced views.
ImageVec fbp_reconstruct(const Sinogram& sino, const VoxelGrid& grid);

}  // namespace inrct
