#include "inrct/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace inrct {

ReconProblem::ReconProblem(FovMask mask_in, const Geometry& geometry,
                           std::vector<double> measurements, LossKind loss_in,
                           double value_scale_in)
    : mask(std::move(mask_in)),
      projector(geometry, mask.grid()),
      layout(scan_layout(geometry)),
      y(std::move(measurements)),
      loss(std::move(loss_in)),
      coords(mask_coordinates(mask)),
      value_scale(value_scale_in) {
  if (!(value_scale > 0.0) || !std::isfinite(value_scale))
    throw std::invalid_argument("value_scale must be finite and > 0");
  if (y.size() != layout.num_rays())
    throw std::invalid_argument("measurement vector length does not match the geometry");
  if (loss.tag == LossKind::Tag::FLS && (!loss.filter || loss.filter->num_det != layout.num_det))
    throw std::invalid_argument("FLS filter does not match the detector");
}

namespace {

std::vector<int> checked_views(std::span<const int> views, int num_views) {
  std::vector<int> out;
  if (views.empty()) {
    out.resize(num_views);
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  out.assign(views.begin(), views.end());
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end())
    throw std::invalid_argument("view subset contains duplicates");
  if (out.front() < 0 || out.back() >= num_views)
    throw std::invalid_argument("view subset index out of range");
  return out;
}

}  // namespace

ResidualPass residual_pass(const InrModel& model, const ReconProblem& problem,
                           std::span<const int> views) {
  const std::vector<int> sel = checked_views(views, problem.layout.num_views);
  const bool all = sel.size() == static_cast<std::size_t>(problem.layout.num_views);

  ResidualPass pass;
  pass.values =
      problem.cache.usable_for(model) ? eval(model, problem.cache) : eval(model, problem.coords);
  std::vector<double> image = problem.mask.scatter(pass.values);
  const double s = problem.value_scale;
  if (s != 1.0)
    for (double& x : image) x *= s;

  pass.z.assign(problem.layout.num_rays(), 0.0);
  problem.projector.forward_views(image, pass.z, sel);

  // Rays outside the selected views drop out of the loss.
  std::vector<double> y_sel;
  std::span<const double> y = problem.y;
  if (!all) {
    y_sel.assign(problem.y.size(), 0.0);
    const std::size_t per_view = problem.layout.rays_per_view();
    for (int view : sel)
      std::copy_n(problem.y.begin() + view * per_view, per_view, y_sel.begin() + view * per_view);
    y = y_sel;
  }
  pass.loss = loss_value(pass.z, y, problem.layout, problem.loss);
  const std::vector<double> r = residual_grad(pass.z, y, problem.layout, problem.loss);

  std::vector<double> back(problem.projector.num_voxels(), 0.0);
  problem.projector.back_views(r, back, sel);
  pass.v = problem.mask.gather(back);
  if (s != 1.0)
    for (double& x : pass.v) x *= s;
  return pass;
}

std::vector<double> exact_gradient_from_pass(const InrModel& model, const ReconProblem& problem,
                                             const ResidualPass& pass) {
  if (!problem.cache.usable_for(model)) return weighted_param_grad(model, problem.coords, pass.v);
  std::vector<std::size_t> all(pass.v.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<double> grad(model.num_params(), 0.0);
  accumulate_weighted_param_grad(model, problem.cache, all, pass.v, grad);
  return grad;
}

std::vector<double> exact_gradient(const InrModel& model, const ReconProblem& problem) {
  return exact_gradient_from_pass(model, problem, residual_pass(model, problem));
}

std::vector<double> exact_gradient_subset_views(const InrModel& model,
                                                const ReconProblem& problem,
                                                std::span<const int> views) {
  if (views.empty())
    throw std::invalid_argument("view subset must not be empty");
  return exact_gradient_from_pass(model, problem, residual_pass(model, problem, views));
}

GradEstimate estimate_from_pass(const InrModel& model, const ReconProblem& problem,
                                const ResidualPass& pass, std::size_t batch_size, Rng& rng) {
  const std::size_t n = problem.mask.n();
  GradEstimate est;
  est.batch = sample_index_batch(n, batch_size, rng);
  // Sorted indices keep the accumulation order of the full-batch case.
  std::sort(est.batch.indices.begin(), est.batch.indices.end());
  est.scale = static_cast<double>(n) / static_cast<double>(batch_size);
  est.loss = pass.loss;

  std::vector<double> weights(batch_size);
  for (std::size_t k = 0; k < batch_size; ++k) weights[k] = pass.v[est.batch.indices[k]];
  if (problem.cache.usable_for(model)) {
    est.grad.assign(model.num_params(), 0.0);
    accumulate_weighted_param_grad(model, problem.cache, est.batch.indices, weights, est.grad);
  } else {
    const int d = model.input_dim();
    std::vector<double> coords(batch_size * d);
    for (std::size_t k = 0; k < batch_size; ++k)
      std::copy_n(problem.coords.begin() + est.batch.indices[k] * d, d, coords.begin() + k * d);
    est.grad = weighted_param_grad(model, coords, weights);
  }
  if (est.scale != 1.0)
    for (double& g : est.grad) g *= est.scale;
  return est;
}

GradEstimate stochastic_gradient(const InrModel& model, const ReconProblem& problem,
                                 std::size_t batch_size, Rng& rng) {
  if (batch_size < 1 || batch_size > problem.mask.n())
    throw std::invalid_argument("batch size must lie in [1, n]");
  return estimate_from_pass(model, problem, residual_pass(model, problem), batch_size, rng);
}

GradEstimate stochastic_gradient_subset_views(const InrModel& model, const ReconProblem& problem,
                                              std::size_t batch_size, Rng& rng,
                                              std::span<const int> views) {
  if (views.empty()) throw std::invalid_argument("view subset must not be empty");
  if (batch_size < 1 || batch_size > problem.mask.n())
    throw std::invalid_argument("batch size must lie in [1, n]");
  return estimate_from_pass(model, problem, residual_pass(model, problem, views), batch_size,
                            rng);
}

MemoryProxyReport memory_proxy(const InrModel& model, const FovMask& mask,
                               std::size_t batch_size) {
  if (batch_size < 1 || batch_size > mask.n())
    throw std::invalid_argument("batch size must lie in [1, n]");
  const std::size_t per_eval = model.tracked_values_per_eval();
  MemoryProxyReport r;
  r.tracked_values_exact = per_eval * mask.n();
  r.tracked_values_stochastic = per_eval * batch_size;
  r.ratio = static_cast<double>(r.tracked_values_exact) /
            static_cast<double>(r.tracked_values_stochastic);
  return r;
}

}  // namespace inrct
