#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace inrct {

/// Axis-aligned voxel grid centered on the rotation isocenter.
///
/// Axis 0 is x (fastest varying in memory), then y, then z. Only `ndim`
/// leading entries of `dims` and `spacing` are meaningful.
struct VoxelGrid {
  int ndim = 2;
  std::array<int, 3> dims{1, 1, 1};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};

  static VoxelGrid make2d(int nx, int ny, double sx, double sy);
  static VoxelGrid make2d(int n, double s) { return make2d(n, n, s, s); }
  static VoxelGrid make3d(int nx, int ny, int nz, double sx, double sy, double sz);
  static VoxelGrid make3d(int n, double s) { return make3d(n, n, n, s, s, s); }

  std::size_t size() const;
  /// mm coordinate of the center of voxel 0 along `axis`.
  double origin(int axis) const { return -0.5 * (dims[axis] - 1) * spacing[axis]; }
  /// mm coordinate of the center of voxel `i` along `axis`.
  double center(int axis, int i) const { return origin(axis) + i * spacing[axis]; }
  double half_extent(int axis) const { return 0.5 * dims[axis] * spacing[axis]; }

  bool operator==(const VoxelGrid&) const = default;
};

enum class MaskShape { Inscribed, Full };

/// Field-of-view mask. Owns the count `n` of reconstructed voxels and the
/// ordered list of their grid indices.
class FovMask {
 public:
  FovMask(VoxelGrid grid, std::vector<std::uint8_t> inside);

  const VoxelGrid& grid() const { return grid_; }
  std::size_t n() const { return voxels_.size(); }
  std::span<const std::uint8_t> inside() const { return inside_; }
  /// Grid indices of inside voxels in row-major order.
  std::span<const std::size_t> voxels() const { return voxels_; }

  /// Maps a physical mm coordinate onto [-1,1] along `axis`.
  double to_normalized(int axis, double mm) const { return mm / grid_.half_extent(axis); }
  double to_mm(int axis, double u) const { return u * grid_.half_extent(axis); }

  /// Scatters n mask values into a zero-filled full-grid array.
  std::vector<double> scatter(std::span<const double> masked) const;
  /// Gathers the inside-voxel entries of a full-grid array.
  std::vector<double> gather(std::span<const double> full) const;

 private:
  VoxelGrid grid_;
  std::vector<std::uint8_t> inside_;
  std::vector<std::size_t> voxels_;
};

FovMask make_fov_mask(const VoxelGrid& grid, MaskShape shape);

/// Normalized voxel-center coordinates of every inside voxel, point-major
/// (n * ndim values).
std::vector<double> mask_coordinates(const FovMask& mask);

struct IndexBatch {
  std::vector<std::size_t> indices;
  std::size_t n_total = 0;
};

using Rng = std::mt19937_64;

/// Uniform sample of `batch_size` distinct indices from [0, n).
IndexBatch sample_index_batch(const FovMask& mask, std::size_t batch_size, Rng& rng);
IndexBatch sample_index_batch(std::size_t n, std::size_t batch_size, Rng& rng);

}  // namespace inrct
