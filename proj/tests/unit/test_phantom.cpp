#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "inrct/phantom.hpp"
#include "inrct/projector.hpp"

using namespace inrct;

namespace {

FanBeamGeometry fan(int views, int det, double du) {
  return FanBeamGeometry{equispaced_angles(views, 2 * std::numbers::pi), 200.0, 400.0, det, du};
}

double l2(const std::vector<double>& v) {
  double a = 0.0;
  for (double x : v) a += x * x;
  return std::sqrt(a);
}

}  // namespace

TEST_CASE("rasterize basics") {
  const VoxelGrid g = VoxelGrid::make2d(16, 1.0);
  SUBCASE("empty phantom") {
    const ImageVec img = rasterize(EllipsePhantom{2, {}}, g, 3);
    CHECK(std::all_of(img.values.begin(), img.values.end(), [](double v) { return v == 0.0; }));
  }
  SUBCASE("covering ellipse gives a constant image") {
    const EllipsePhantom p{2, {Ellipse{{0, 0, 0}, {50, 40, 1}, 0.3, 0.02}}};
    const ImageVec img = rasterize(p, g, 2);
    for (double v : img.values) CHECK(v == doctest::Approx(0.02).epsilon(1e-15));
  }
  SUBCASE("invalid supersample") {
    CHECK_THROWS_AS(rasterize(EllipsePhantom{2, {}}, g, 0), std::invalid_argument);
  }
}

TEST_CASE("rasterized disk mass matches its area") {
  const double s = 0.5, r = 17.3, mu = 0.02;
  const VoxelGrid g = VoxelGrid::make2d(96, s);
  const ImageVec img = rasterize(EllipsePhantom{2, {Ellipse{{0, 0, 0}, {r, r, 1}, 0.0, mu}}}, g, 4);
  double sum = 0.0;
  for (double v : img.values) sum += v;
  const double expected = std::numbers::pi * r * r * mu / (s * s);
  CHECK(std::abs(sum - expected) <= 0.005 * expected);
}

TEST_CASE("supersampling refinement shrinks") {
  const VoxelGrid g = VoxelGrid::make2d(48, 1.0);
  const EllipsePhantom p{2, {Ellipse{{1.3, -2.1, 0}, {15.2, 9.7, 1}, 0.4, 1.0}}};
  std::vector<std::vector<double>> imgs;
  for (int ss : {2, 4, 8, 16}) imgs.push_back(rasterize(p, g, ss).values);
  double prev = 1e300;
  for (std::size_t k = 1; k < imgs.size(); ++k) {
    std::vector<double> d(g.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = imgs[k][i] - imgs[k - 1][i];
    const double change = l2(d);
    CHECK(change < prev);
    prev = change;
  }
}

TEST_CASE("Shepp-Logan definition") {
  const EllipsePhantom p = shepp_logan_2d(60.0);
  CHECK(p.components.size() == 10);
  const ImageVec img = rasterize(p, VoxelGrid::make2d(128, 1.0), 2);
  CHECK(*std::max_element(img.values.begin(), img.values.end()) <= 0.022 + 1e-15);
  CHECK(*std::min_element(img.values.begin(), img.values.end()) >= 0.0);

  const EllipsePhantom outer{2, {p.components[0]}};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-70.0, 70.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng), y = u(rng);
    CHECK(outer.value_at(x, y) == outer.value_at(-x, y));
  }
  const EllipsePhantom p3 = ellipsoid_phantom_3d(30.0);
  CHECK(p3.ndim == 3);
  const ImageVec v = rasterize(p3, VoxelGrid::make3d(32, 2.0), 1);
  CHECK(*std::max_element(v.values.begin(), v.values.end()) <= 0.022 + 1e-15);
}

TEST_CASE("phantom file format") {
  const EllipsePhantom p = parse_phantom(
      "# FORBILD-like\n"
      "0 0 10 8 0.5 0.02   # body\n"
      "\n"
      "1.5 -2 1 2 0 -0.001\n");
  REQUIRE(p.components.size() == 2);
  CHECK(p.ndim == 2);
  CHECK(p.components[1].center[1] == -2.0);
  CHECK(p.components[1].value == -0.001);

  const EllipsePhantom q = parse_phantom("0 0 1 4 5 6 0.1 0.02\n");
  CHECK(q.ndim == 3);
  CHECK(q.components[0].semi_axes[2] == 6.0);

  CHECK_THROWS_AS(parse_phantom("1 2 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_phantom("0 0 -1 1 0 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_phantom("0 0 1 1 0 1\n0 0 0 1 1 1 0 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_phantom("0 0 1 1 0 x\n"), std::invalid_argument);
}

TEST_CASE("simulate_measurements") {
  const VoxelGrid recon = VoxelGrid::make2d(64, 1.0);
  const VoxelGrid fine = VoxelGrid::make2d(256, 0.25);
  const FanBeamGeometry geom = fan(45, 96, 1.5);
  Rng rng(9);

  SUBCASE("noise-free empty phantom") {
    const Sinogram s = simulate_measurements(EllipsePhantom{2, {}}, geom, fine, recon, 0.0, rng);
    CHECK(std::all_of(s.values.begin(), s.values.end(), [](double v) { return v == 0.0; }));
  }
  SUBCASE("fine-grid data differ slightly from the reconstruction model") {
    const EllipsePhantom p = shepp_logan_2d(28.0);
    const Sinogram sim = simulate_measurements(p, geom, fine, recon, 0.0, rng);
    const std::vector<double> crime = Projector(geom, recon).forward(rasterize(p, recon, 1).values);
    std::vector<double> d(crime.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = sim.values[i] - crime[i];
    const double rel = l2(d) / l2(sim.values);
    CHECK(rel > 0.0);
    CHECK(rel < 0.05);
  }
  SUBCASE("linear in component values") {
    EllipsePhantom p = shepp_logan_2d(28.0);
    const Sinogram a = simulate_measurements(p, geom, fine, recon, 0.0, rng);
    for (auto& e : p.components) e.value *= 3.0;
    const Sinogram b = simulate_measurements(p, geom, fine, recon, 0.0, rng);
    for (std::size_t i = 0; i < a.values.size(); ++i)
      CHECK(b.values[i] == doctest::Approx(3.0 * a.values[i]).epsilon(1e-12));
  }
  SUBCASE("noise variance") {
    const double sigma = 0.05;
    const FanBeamGeometry big = fan(120, 96, 1.5);  // m = 11520
    const Sinogram s = simulate_measurements(EllipsePhantom{2, {}}, big, fine, recon, sigma, rng);
    double mean = 0.0, var = 0.0;
    for (double v : s.values) mean += v;
    mean /= s.values.size();
    for (double v : s.values) var += (v - mean) * (v - mean);
    var /= (s.values.size() - 1);
    CHECK(std::abs(var - sigma * sigma) <= 0.05 * sigma * sigma);
  }
  SUBCASE("inverse-crime guard") {
    CHECK_THROWS_AS(
        simulate_measurements(EllipsePhantom{2, {}}, geom, VoxelGrid::make2d(96, 2.0 / 3.0), recon,
                              0.0, rng),
        std::invalid_argument);
    CHECK_THROWS_AS(simulate_measurements(EllipsePhantom{2, {}}, geom, recon, recon, 0.0, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("downsample_average preserves the mean") {
  const VoxelGrid fine = VoxelGrid::make3d(8, 0.5);
  std::vector<double> v(fine.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = double(i % 7);
  const ImageVec c = downsample_average(ImageVec{fine, v}, 2);
  CHECK(c.grid.dims[0] == 4);
  CHECK(c.grid.spacing[2] == 1.0);
  double a = 0.0, b = 0.0;
  for (double x : v) a += x;
  for (double x : c.values) b += x;
  CHECK(b * 8 == doctest::Approx(a));
}
