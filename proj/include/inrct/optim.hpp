#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "inrct/geometry.hpp"
#include "inrct/grid.hpp"

namespace inrct {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(std::size_t num_params, double lr, double beta1 = 0.9,
                    double beta2 = 0.999, double eps = 1e-8);

/// One bias-corrected Adam update of `theta` in place.
void adam_step(AdamState& state, std::span<double> theta, std::span<const double> grad);

struct CglsResult {
  ImageVec image;
  /// |P x_k - y| for k = 0..iterations run (k = 0 is |y|).
  std::vector<double> residual_norms;
};

/// Conjugate gradients on min_x |P x - y|^2 from x = 0. Stops early if the
/// normal-equation residual vanishes.
CglsResult cgls(const Geometry& geometry, const VoxelGrid& grid, std::span<const double> y,
                int iterations);

}  // namespace inrct
