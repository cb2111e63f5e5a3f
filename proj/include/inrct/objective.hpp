#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inrct/geometry.hpp"
#include "inrct/projector.hpp"

namespace inrct {

/// Data-fidelity loss on the sinogram residual r = z - y.
///   LS:  0.5 * |r|^2
///   FLS: 0.5 * r^T F r, F = per-view ramp convolution along the detector.
struct LossKind {
  enum class Tag { LS, FLS };
  Tag tag = Tag::LS;
  std::optional<RampFilter> filter;

  static LossKind ls() { return {}; }
  static LossKind fls(RampFilter f) { return {Tag::FLS, std::move(f)}; }
  /// FLS with the ramp built for the geometry's detector.
  static LossKind fls(const Geometry& geometry);
};

std::string to_string(LossKind::Tag tag);
LossKind::Tag parse_loss(const std::string& name);

double loss_value(std::span<const double> z, std::span<const double> y, const ScanLayout& layout,
                  const LossKind& kind);
double loss_value(const Sinogram& z, const Sinogram& y, const LossKind& kind);

/// Gradient of loss_value with respect to z: r for LS, F r for FLS.
std::vector<double> residual_grad(std::span<const double> z, std::span<const double> y,
                                  const ScanLayout& layout, const LossKind& kind);
Sinogram residual_grad(const Sinogram& z, const Sinogram& y, const LossKind& kind);

}  // namespace inrct
