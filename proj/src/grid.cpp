#include "inrct/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace inrct {

namespace {

void check_axis(int dim, double spacing) {
  if (dim < 1) throw std::invalid_argument("grid dimension must be >= 1");
  if (!(spacing > 0.0)) throw std::invalid_argument("grid spacing must be > 0");
}

}  // namespace

VoxelGrid VoxelGrid::make2d(int nx, int ny, double sx, double sy) {
  check_axis(nx, sx);
  check_axis(ny, sy);
  return VoxelGrid{2, {nx, ny, 1}, {sx, sy, 1.0}};
}

VoxelGrid VoxelGrid::make3d(int nx, int ny, int nz, double sx, double sy, double sz) {
  check_axis(nx, sx);
  check_axis(ny, sy);
  check_axis(nz, sz);
  return VoxelGrid{3, {nx, ny, nz}, {sx, sy, sz}};
}

std::size_t VoxelGrid::size() const {
  std::size_t total = 1;
  for (int a = 0; a < ndim; ++a) total *= static_cast<std::size_t>(dims[a]);
  return total;
}

FovMask::FovMask(VoxelGrid grid, std::vector<std::uint8_t> inside)
    : grid_(grid), inside_(std::move(inside)) {
  if (inside_.size() != grid_.size())
    throw std::invalid_argument("mask flag count does not match grid size");
  for (std::size_t i = 0; i < inside_.size(); ++i)
    if (inside_[i]) voxels_.push_back(i);
}

std::vector<double> FovMask::scatter(std::span<const double> masked) const {
  if (masked.size() != n()) throw std::invalid_argument("scatter: expected n values");
  std::vector<double> full(grid_.size(), 0.0);
  for (std::size_t k = 0; k < voxels_.size(); ++k) full[voxels_[k]] = masked[k];
  return full;
}

std::vector<double> FovMask::gather(std::span<const double> full) const {
  if (full.size() != grid_.size()) throw std::invalid_argument("gather: expected grid-sized array");
  std::vector<double> masked(voxels_.size());
  for (std::size_t k = 0; k < voxels_.size(); ++k) masked[k] = full[voxels_[k]];
  return masked;
}

FovMask make_fov_mask(const VoxelGrid& grid, MaskShape shape) {
  std::vector<std::uint8_t> inside(grid.size(), 1);
  if (shape == MaskShape::Inscribed) {
    // Circle in the xy plane; extruded along z for volumes.
    const double radius = std::min(grid.half_extent(0), grid.half_extent(1));
    const double r2 = radius * radius;
    const int nz = grid.ndim == 3 ? grid.dims[2] : 1;
    std::size_t idx = 0;
    for (int z = 0; z < nz; ++z) {
      for (int y = 0; y < grid.dims[1]; ++y) {
        const double cy = grid.center(1, y);
        for (int x = 0; x < grid.dims[0]; ++x, ++idx) {
          const double cx = grid.center(0, x);
          inside[idx] = (cx * cx + cy * cy <= r2) ? 1 : 0;
        }
      }
    }
  }
  return FovMask(grid, std::move(inside));
}

std::vector<double> mask_coordinates(const FovMask& mask) {
  const VoxelGrid& g = mask.grid();
  const int d = g.ndim;
  std::vector<double> coords;
  coords.reserve(mask.n() * d);
  const std::size_t nx = g.dims[0];
  const std::size_t nxy = nx * g.dims[1];
  for (std::size_t v : mask.voxels()) {
    const int ix = static_cast<int>(v % nx);
    const int iy = static_cast<int>((v / nx) % g.dims[1]);
    coords.push_back(mask.to_normalized(0, g.center(0, ix)));
    coords.push_back(mask.to_normalized(1, g.center(1, iy)));
    if (d == 3) {
      const int iz = static_cast<int>(v / nxy);
      coords.push_back(mask.to_normalized(2, g.center(2, iz)));
    }
  }
  return coords;
}

IndexBatch sample_index_batch(std::size_t n, std::size_t batch_size, Rng& rng) {
  if (batch_size < 1 || batch_size > n)
    throw std::invalid_argument("batch size " + std::to_string(batch_size) +
                                " outside [1, " + std::to_string(n) + "]");
  // Partial Fisher-Yates: the first batch_size slots are a uniform
  // sample without replacement.
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < batch_size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(batch_size);
  return IndexBatch{std::move(pool), n};
}

IndexBatch sample_index_batch(const FovMask& mask, std::size_t batch_size, Rng& rng) {
  return sample_index_batch(mask.n(), batch_size, rng);
}

}  // namespace inrct
