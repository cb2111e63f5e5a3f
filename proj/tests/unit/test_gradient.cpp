#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "inrct/gradient.hpp"
#include "tiny_problem.hpp"

using namespace inrct;
using inrct::testing::quad;

namespace {

double max_abs(const std::vector<double>& v) {
  double a = 0.0;
  for (double x : v) a = std::max(a, std::abs(x));
  return a;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  return [&] {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
  }() / max_abs(b);
}

}  // namespace

TEST_CASE("self-consistent data gives a zero gradient") {
  auto t = inrct::testing::make_tiny_pipeline();
  const ReconProblem base = inrct::testing::tiny_recon_problem(t, LossKind::Tag::LS);
  const std::vector<double> z = residual_pass(t.model, base).z;
  for (LossKind::Tag tag : {LossKind::Tag::LS, LossKind::Tag::FLS}) {
    t.y = z;
    const ReconProblem p = inrct::testing::tiny_recon_problem(t, tag);
    CHECK(max_abs(exact_gradient(t.model, p)) == 0.0);
    Rng rng(1);
    const GradEstimate e = stochastic_gradient(t.model, p, 5, rng);
    CHECK(max_abs(e.grad) == 0.0);
    CHECK(e.loss == 0.0);
  }
}

TEST_CASE("exact gradient matches end-to-end binary128 differences") {
  const auto t = inrct::testing::make_tiny_pipeline();
  for (LossKind::Tag tag : {LossKind::Tag::LS, LossKind::Tag::FLS}) {
    CAPTURE(to_string(tag));
    const ReconProblem p = inrct::testing::tiny_recon_problem(t, tag);
    const std::vector<double> g = exact_gradient(t.model, p);
    const std::vector<double> fd = inrct::testing::central_differences<quad>(
        t.model.params(), 1e-9, inrct::testing::pipeline_loss<quad>(p, t.model));
    const auto cmp = inrct::testing::compare_to_fd(g, fd);
    CHECK(cmp.checked > t.model.num_params() / 2);
    CHECK(cmp.max_rel <= 1e-5);

    // The loss reported by the residual pass is the same function.
    const double l = residual_pass(t.model, p).loss;
    const double ref = static_cast<double>(
        inrct::testing::pipeline_loss<quad>(p, t.model)(inrct::testing::to_type<quad>(t.model.params())));
    CHECK(l == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("doubling the residual doubles the LS gradient") {
  auto t = inrct::testing::make_tiny_pipeline();
  const ReconProblem p = inrct::testing::tiny_recon_problem(t, LossKind::Tag::LS);
  const std::vector<double> g = exact_gradient(t.model, p);
  const std::vector<double> z = residual_pass(t.model, p).z;
  for (std::size_t i = 0; i < z.size(); ++i) t.y[i] = 2 * t.y[i] - z[i];
  const ReconProblem q = inrct::testing::tiny_recon_problem(t, LossKind::Tag::LS);
  std::vector<double> g2 = exact_gradient(t.model, q);
  for (double& v : g2) v *= 0.5;
  CHECK(max_rel_diff(g2, g) <= 1e-12);
}

TEST_CASE("full batch reproduces the exact gradient") {
  const auto t = inrct::testing::make_tiny_pipeline();
  for (LossKind::Tag tag : {LossKind::Tag::LS, LossKind::Tag::FLS}) {
    const ReconProblem p = inrct::testing::tiny_recon_problem(t, tag);
    Rng rng(3);
    const GradEstimate e = stochastic_gradient(t.model, p, p.mask.n(), rng);
    CHECK(e.scale == 1.0);
    CHECK(e.batch.indices.size() == p.mask.n());
    CHECK(e.grad == exact_gradient(t.model, p));
  }
}

TEST_CASE("estimate bookkeeping and errors") {
  const auto t = inrct::testing::make_tiny_pipeline();
  const ReconProblem p = inrct::testing::tiny_recon_problem(t, LossKind::Tag::FLS);
  Rng rng(4);
  const GradEstimate e = stochastic_gradient(t.model, p, 24, rng);
  CHECK(e.grad.size() == t.model.num_params());
  CHECK(e.scale == 64.0 / 24.0);
  CHECK(e.batch.n_total == 64);
  CHECK_THROWS_AS(stochastic_gradient(t.model, p, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(stochastic_gradient(t.model, p, 65, rng), std::invalid_argument);
  CHECK_THROWS_AS(stochastic_gradient_subset_views(t.model, p, 8, rng, {}),
                  std::invalid_argument);
  const std::vector<int> dup{1, 1}, out{4};
  CHECK_THROWS_AS(stochastic_gradient_subset_views(t.model, p, 8, rng, dup),
                  std::invalid_argument);
  CHECK_THROWS_AS(exact_gradient_subset_views(t.model, p, out), std::invalid_argument);
  CHECK_THROWS_AS(ReconProblem(p.mask, t.geometry, std::vector<double>(3), LossKind::ls()),
                  std::invalid_argument);
}

TEST_CASE("view subsets") {
  const auto t = inrct::testing::make_tiny_pipeline();
  const ReconProblem ls = inrct::testing::tiny_recon_problem(t, LossKind::Tag::LS);

  SUBCASE("all views equals the plain estimator") {
    const std::vector<int> all{0, 1, 2, 3};
    Rng a(9), b(9);
    const GradEstimate e1 = stochastic_gradient(t.model, ls, 16, a);
    const GradEstimate e2 = stochastic_gradient_subset_views(t.model, ls, 16, b, all);
    CHECK(e1.grad == e2.grad);
    CHECK(e1.batch.indices == e2.batch.indices);
  }
  SUBCASE("LS gradients add over disjoint subsets") {
    const std::vector<int> a{0, 2}, b{3}, ab{0, 2, 3};
    const std::vector<double> ga = exact_gradient_subset_views(t.model, ls, a);
    const std::vector<double> gb = exact_gradient_subset_views(t.model, ls, b);
    const std::vector<double> gab = exact_gradient_subset_views(t.model, ls, ab);
    std::vector<double> sum(ga.size());
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] = ga[k] + gb[k];
    CHECK(max_rel_diff(sum, gab) <= 1e-12);
  }
  SUBCASE("single view matches differences of the single-view loss") {
    for (LossKind::Tag tag : {LossKind::Tag::LS, LossKind::Tag::FLS}) {
      const ReconProblem p = inrct::testing::tiny_recon_problem(t, tag);
      const std::vector<int> one{2};
      const std::vector<double> g = exact_gradient_subset_views(t.model, p, one);
      const std::vector<double> fd = inrct::testing::central_differences<quad>(
          t.model.params(), 1e-9, inrct::testing::pipeline_loss<quad>(p, t.model, one));
      const auto cmp = inrct::testing::compare_to_fd(g, fd);
      CHECK(cmp.checked > 0);
      CHECK(cmp.max_rel <= 1e-5);
    }
  }
}

TEST_CASE("estimator mean matches the exact gradient") {
  const auto t = inrct::testing::make_tiny_pipeline();
  const ReconProblem p = inrct::testing::tiny_recon_problem(t, LossKind::Tag::FLS);
  const std::vector<double> exact = exact_gradient(t.model, p);
  const ResidualPass pass = residual_pass(t.model, p);
  const int draws = 20000;
  const std::size_t np = exact.size();
  std::vector<double> sum(np, 0.0), sq(np, 0.0);
  Rng rng(77);
  for (int s = 0; s < draws; ++s) {
    const GradEstimate e = estimate_from_pass(t.model, p, pass, 16, rng);
    for (std::size_t k = 0; k < np; ++k) {
      sum[k] += e.grad[k];
      sq[k] += e.grad[k] * e.grad[k];
    }
  }
  int failures = 0;
  for (std::size_t k = 0; k < np; ++k) {
    const double mean = sum[k] / draws;
    const double var = (sq[k] - draws * mean * mean) / (draws - 1);
    const double se = std::sqrt(std::max(var, 0.0) / draws);
    if (std::abs(mean - exact[k]) > 4 * se + 1e-12 * std::abs(exact[k])) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("estimator variance grows as the batch shrinks") {
  const auto t = inrct::testing::make_tiny_pipeline();
  const ReconProblem p = inrct::testing::tiny_recon_problem(t, LossKind::Tag::LS);
  const ResidualPass pass = residual_pass(t.model, p);
  const std::size_t np = t.model.num_params(), n = p.mask.n();
  std::vector<std::vector<double>> variances;
  for (std::size_t b : {n / 2, n / 4, n / 8}) {
    std::vector<double> sum(np, 0.0), sq(np, 0.0);
    Rng rng(5);
    const int draws = 3000;
    for (int s = 0; s < draws; ++s) {
      const GradEstimate e = estimate_from_pass(t.model, p, pass, b, rng);
      for (std::size_t k = 0; k < np; ++k) sum[k] += e.grad[k], sq[k] += e.grad[k] * e.grad[k];
    }
    std::vector<double> var(np);
    for (std::size_t k = 0; k < np; ++k) {
      const double m = sum[k] / draws;
      var[k] = (sq[k] - draws * m * m) / (draws - 1);
    }
    variances.push_back(var);
  }
  int checked = 0;
  for (std::size_t k = 0; k < np; ++k) {
    if (variances[0][k] <= 1e-20) continue;
    ++checked;
    CHECK(variances[1][k] > variances[0][k]);
    CHECK(variances[2][k] > variances[1][k]);
  }
  CHECK(checked > 0);
}

TEST_CASE("memory proxy") {
  Rng rng(0);
  const InrModel m = init_model(inrct::testing::tiny_ffn_config(), 2, rng);
  const FovMask mask = make_fov_mask(VoxelGrid::make2d(64, 1.0), MaskShape::Full);
  const std::size_t n = mask.n();
  CHECK(memory_proxy(m, mask, n).ratio == 1.0);
  const MemoryProxyReport r16 = memory_proxy(m, mask, n / 16);
  CHECK(r16.ratio == 16.0);
  CHECK(r16.tracked_values_exact == m.tracked_values_per_eval() * n);
  CHECK(memory_proxy(m, mask, n / 512).ratio == 512.0);
  CHECK_THROWS_AS(memory_proxy(m, mask, 0), std::invalid_argument);
}

TEST_CASE("cached encodings give the same estimates") {
  const auto t = inrct::testing::make_tiny_pipeline();
  const ReconProblem plain = inrct::testing::tiny_recon_problem(t, LossKind::Tag::FLS);
  ReconProblem cached = inrct::testing::tiny_recon_problem(t, LossKind::Tag::FLS);
  cached.enable_encoding_cache(t.model);
  REQUIRE(cached.cache.usable_for(t.model));
  const std::vector<double> g = exact_gradient(t.model, plain);
  CHECK(max_rel_diff(exact_gradient(t.model, cached), g) <= 1e-13);
  Rng a(2), b(2);
  const GradEstimate e1 = stochastic_gradient(t.model, plain, 16, a);
  const GradEstimate e2 = stochastic_gradient(t.model, cached, 16, b);
  CHECK(e1.batch.indices == e2.batch.indices);
  CHECK(max_rel_diff(e2.grad, e1.grad) <= 1e-13);
  Rng c(3);
  CHECK(stochastic_gradient(t.model, cached, cached.mask.n(), c).grad ==
        exact_gradient(t.model, cached));
}

TEST_CASE("value scale multiplies the imaged values") {
  auto t = inrct::testing::make_tiny_pipeline();
  const ReconProblem p1 = inrct::testing::tiny_recon_problem(t, LossKind::Tag::LS);
  const ReconProblem p2(p1.mask, t.geometry, t.y, LossKind::ls(), 0.5);
  const ResidualPass a = residual_pass(t.model, p1), b = residual_pass(t.model, p2);
  for (std::size_t i = 0; i < a.z.size(); ++i) CHECK(b.z[i] == doctest::Approx(0.5 * a.z[i]));
  // The scaled problem's gradient is still the derivative of its loss.
  const std::vector<double> g = exact_gradient(t.model, p2);
  const std::vector<double> fd = inrct::testing::central_differences<double>(
      t.model.params(), 1e-6, [&](std::span<const double> th) {
        return residual_pass(unflatten_params(t.model, th), p2).loss;
      });
  CHECK(max_rel_diff(g, fd) <= 1e-6);
  CHECK_THROWS_AS(ReconProblem(p1.mask, t.geometry, t.y, LossKind::ls(), 0.0),
                  std::invalid_argument);
}
