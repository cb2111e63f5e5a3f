#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "inrct/optim.hpp"
#include "inrct/projector.hpp"

using namespace inrct;

TEST_CASE("Adam") {
  SUBCASE("zero gradient leaves theta unchanged") {
    AdamState s = make_adam(4, 1e-2);
    std::vector<double> theta{1, -2, 3, 0.5};
    const std::vector<double> before = theta;
    adam_step(s, theta, std::vector<double>(4, 0.0));
    CHECK(theta == before);
    CHECK(s.t == 1);
  }
  SUBCASE("first step has magnitude lr") {
    AdamState s = make_adam(3, 1e-3);
    std::vector<double> theta{0, 0, 0};
    adam_step(s, theta, std::vector<double>{2.0, -0.5, 1e-3});
    CHECK(theta[0] == doctest::Approx(-1e-3).epsilon(1e-6));
    CHECK(theta[1] == doctest::Approx(1e-3).epsilon(1e-6));
    CHECK(theta[2] == doctest::Approx(-1e-3).epsilon(1e-4));
  }
  SUBCASE("matches a scalar transcription of the update") {
    AdamState s = make_adam(1, 0.05, 0.8, 0.95, 1e-6);
    std::vector<double> theta{1.0};
    double m = 0, v = 0, x = 1.0;
    for (int t = 1; t <= 20; ++t) {
      const double g = 2 * x - std::sin(t);
      m = 0.8 * m + 0.2 * g;
      v = 0.95 * v + 0.05 * g * g;
      x -= 0.05 * (m / (1 - std::pow(0.8, t))) / (std::sqrt(v / (1 - std::pow(0.95, t))) + 1e-6);
      const std::vector<double> gv{2 * theta[0] - std::sin(t)};
      adam_step(s, theta, gv);
      CHECK(theta[0] == doctest::Approx(x).epsilon(1e-13));
    }
  }
  SUBCASE("deterministic") {
    std::vector<double> a{0.1, 0.2}, b{0.1, 0.2};
    AdamState sa = make_adam(2, 0.1), sb = make_adam(2, 0.1);
    for (int t = 0; t < 50; ++t) {
      adam_step(sa, a, std::vector<double>{a[0] - 1, a[1] * a[0]});
      adam_step(sb, b, std::vector<double>{b[0] - 1, b[1] * b[0]});
    }
    CHECK(a == b);
  }
  SUBCASE("errors") {
    AdamState s = make_adam(2, 0.1);
    std::vector<double> theta(3);
    CHECK_THROWS_AS(adam_step(s, theta, std::vector<double>(3)), std::invalid_argument);
    CHECK_THROWS_AS(make_adam(2, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_adam(2, 0.1, 1.0), std::invalid_argument);
  }
}

TEST_CASE("CGLS") {
  const VoxelGrid grid = VoxelGrid::make2d(4, 1.0);
  const FanBeamGeometry geom{equispaced_angles(12, 2 * std::numbers::pi), 20.0, 40.0, 8, 1.5};
  const Projector p(geom, grid);

  SUBCASE("recovers the solution of a small full-rank system") {
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(grid.size());
    for (double& v : x) v = u(rng);
    const std::vector<double> y = p.forward(x);
    const CglsResult r = cgls(geom, grid, y, 16);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(r.image.values[i] - x[i]) <= 1e-8);
    CHECK(r.residual_norms.size() <= 17);
    for (std::size_t k = 1; k < r.residual_norms.size(); ++k)
      CHECK(r.residual_norms[k] <= r.residual_norms[k - 1] * (1 + 1e-12));
  }
  SUBCASE("zero data") {
    const CglsResult r = cgls(geom, grid, std::vector<double>(p.num_rays(), 0.0), 5);
    for (double v : r.image.values) CHECK(v == 0.0);
  }
  SUBCASE("residual is nonincreasing on inconsistent data") {
    Rng rng(8);
    std::normal_distribution<double> n;
    std::vector<double> y(p.num_rays());
    for (double& v : y) v = n(rng);
    const CglsResult r = cgls(geom, grid, y, 30);
    for (std::size_t k = 1; k < r.residual_norms.size(); ++k)
      CHECK(r.residual_norms[k] <= r.residual_norms[k - 1] * (1 + 1e-12));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(cgls(geom, grid, std::vector<double>(p.num_rays()), 0), std::invalid_argument);
    CHECK_THROWS_AS(cgls(geom, grid, std::vector<double>(3), 2), std::invalid_argument);
  }
}
