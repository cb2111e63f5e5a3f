#pragma once

#include <span>
#include <vector>

#include "inrct/geometry.hpp"
#include "inrct/grid.hpp"
#include "inrct/inr.hpp"
#include "inrct/objective.hpp"
#include "inrct/projector.hpp"

namespace inrct {

/// Everything the estimators need besides the model: FOV mask with cached
/// INR coordinates, projector, measurements and loss. The image seen by the
/// projector is value_scale * E{f}, so the network can work in O(1) units.
struct ReconProblem {
  ReconProblem(FovMask mask, const Geometry& geometry, std::vector<double> measurements,
               LossKind loss, double value_scale = 1.0);

  FovMask mask;
  Projector projector;
  ScanLayout layout;
  std::vector<double> y;
  LossKind loss;
  std::vector<double> coords;  // mask_coordinates(mask)
  double value_scale = 1.0;
  /// Optional precomputed FFN encodings of `coords`; used whenever it
  /// matches the model being evaluated.
  EncodingCache cache;

  void enable_encoding_cache(const InrModel& model) { cache = EncodingCache(model, coords); }
};

/// Numeric passes of the estimator, computed without any gradient tracking:
/// values = E{f}, z = P s E{f}, v = s times the mask entries of P^T dL/dz,
/// with s = value_scale.
struct ResidualPass {
  std::vector<double> values;  // n
  std::vector<double> z;       // m (zero outside the selected views)
  std::vector<double> v;       // n
  double loss = 0.0;
};

/// `views` empty means all views.
ResidualPass residual_pass(const InrModel& model, const ReconProblem& problem,
                           std::span<const int> views = {});

struct GradEstimate {
  std::vector<double> grad;
  IndexBatch batch;
  double scale = 1.0;  // n / |I|
  double loss = 0.0;
};

/// Full gradient sum_i v_i grad f(x_i); equals the gradient of the loss since
/// the projector is linear.
std::vector<double> exact_gradient(const InrModel& model, const ReconProblem& problem);
std::vector<double> exact_gradient_subset_views(const InrModel& model,
                                                const ReconProblem& problem,
                                                std::span<const int> views);

/// Subsampled estimator (n/|I|) sum_{i in I} v_i grad f(x_i): the gradient of
/// the virtual loss with v held constant.
GradEstimate stochastic_gradient(const InrModel& model, const ReconProblem& problem,
                                 std::size_t batch_size, Rng& rng);
GradEstimate stochastic_gradient_subset_views(const InrModel& model, const ReconProblem& problem,
                                              std::size_t batch_size, Rng& rng,
                                              std::span<const int> views);

/// sum_i v_i grad f(x_i) over all n points of an existing pass.
std::vector<double> exact_gradient_from_pass(const InrModel& model, const ReconProblem& problem,
                                             const ResidualPass& pass);
/// Estimator step 3-5 on an already computed residual pass.
GradEstimate estimate_from_pass(const InrModel& model, const ReconProblem& problem,
                                const ResidualPass& pass, std::size_t batch_size, Rng& rng);

struct MemoryProxyReport {
  std::size_t tracked_values_exact = 0;
  std::size_t tracked_values_stochastic = 0;
  double ratio = 1.0;
};

/// Values retained for reverse mode when differentiating all n evaluations
/// versus a batch of `batch_size`.
MemoryProxyReport memory_proxy(const InrModel& model, const FovMask& mask,
                               std::size_t batch_size);

}  // namespace inrct
