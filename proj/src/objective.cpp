#include "inrct/objective.hpp"

#include <stdexcept>

namespace inrct {

LossKind LossKind::fls(const Geometry& geometry) {
  const ScanLayout layout = scan_layout(geometry);
  return fls(make_ramp_filter(layout.num_det, layout.det_spacing));
}

std::string to_string(LossKind::Tag tag) { return tag == LossKind::Tag::LS ? "ls" : "fls"; }

LossKind::Tag parse_loss(const std::string& name) {
  if (name == "ls" || name == "LS") return LossKind::Tag::LS;
  if (name == "fls" || name == "FLS") return LossKind::Tag::FLS;
  throw std::invalid_argument("unknown loss '" + name + "'");
}

namespace {

std::vector<double> residual(std::span<const double> z, std::span<const double> y,
                             const ScanLayout& layout) {
  if (z.size() != y.size() || z.size() != layout.num_rays())
    throw std::invalid_argument("prediction and measurement sizes do not match the geometry");
  std::vector<double> r(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) r[i] = z[i] - y[i];
  return r;
}

const RampFilter& filter_of(const LossKind& kind) {
  if (!kind.filter) throw std::invalid_argument("FLS loss requires a filter");
  return *kind.filter;
}

}  // namespace

double loss_value(std::span<const double> z, std::span<const double> y, const ScanLayout& layout,
                  const LossKind& kind) {
  const std::vector<double> r = residual(z, y, layout);
  double acc = 0.0;
  if (kind.tag == LossKind::Tag::LS) {
    for (double v : r) acc += v * v;
  } else {
    const std::vector<double> fr = apply_ramp(r, layout, filter_of(kind));
    for (std::size_t i = 0; i < r.size(); ++i) acc += r[i] * fr[i];
  }
  return 0.5 * acc;
}

double loss_value(const Sinogram& z, const Sinogram& y, const LossKind& kind) {
  if (!same_geometry(z.geometry, y.geometry))
    throw std::invalid_argument("loss: sinograms have different geometries");
  return loss_value(z.values, y.values, scan_layout(z.geometry), kind);
}

std::vector<double> residual_grad(std::span<const double> z, std::span<const double> y,
                                  const ScanLayout& layout, const LossKind& kind) {
  std::vector<double> r = residual(z, y, layout);
  if (kind.tag == LossKind::Tag::LS) return r;
  return apply_ramp(r, layout, filter_of(kind));
}

Sinogram residual_grad(const Sinogram& z, const Sinogram& y, const LossKind& kind) {
  if (!same_geometry(z.geometry, y.geometry))
    throw std::invalid_argument("residual_grad: sinograms have different geometries");
  return Sinogram{z.geometry, residual_grad(z.values, y.values, scan_layout(z.geometry), kind)};
}

}  // namespace inrct
