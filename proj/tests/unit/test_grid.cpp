#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "inrct/grid.hpp"

using namespace inrct;

TEST_CASE("full mask counts every voxel") {
  const FovMask m = make_fov_mask(VoxelGrid::make2d(4, 1.0), MaskShape::Full);
  CHECK(m.n() == 16);
}

TEST_CASE("inscribed mask on 512x512 matches brute-force center count") {
  const double s = 0.7;
  const VoxelGrid g = VoxelGrid::make2d(512, s);
  std::size_t expected = 0;
  for (int y = 0; y < 512; ++y)
    for (int x = 0; x < 512; ++x) {
      const double cx = (x - 255.5) * s, cy = (y - 255.5) * s;
      if (std::sqrt(cx * cx + cy * cy) <= 256 * s) ++expected;
    }
  const FovMask m = make_fov_mask(g, MaskShape::Inscribed);
  CHECK(m.n() == expected);
  std::size_t flags = 0;
  for (auto f : m.inside()) flags += f;
  CHECK(flags == m.n());
}

TEST_CASE("single voxel grid keeps its center") {
  CHECK(make_fov_mask(VoxelGrid::make2d(1, 2.0), MaskShape::Inscribed).n() == 1);
  CHECK(make_fov_mask(VoxelGrid::make3d(1, 2.0), MaskShape::Inscribed).n() == 1);
}

TEST_CASE("inscribed cylinder extrudes the circle along z") {
  const VoxelGrid g2 = VoxelGrid::make2d(16, 1.0);
  const VoxelGrid g3 = VoxelGrid::make3d(16, 16, 5, 1.0, 1.0, 1.0);
  CHECK(make_fov_mask(g3, MaskShape::Inscribed).n() ==
        5 * make_fov_mask(g2, MaskShape::Inscribed).n());
}

TEST_CASE("mask coordinates") {
  SUBCASE("3x3 center maps to origin") {
    const FovMask m = make_fov_mask(VoxelGrid::make2d(3, 1.0), MaskShape::Full);
    const auto c = mask_coordinates(m);
    CHECK(c[2 * 4] == 0.0);
    CHECK(c[2 * 4 + 1] == 0.0);
  }
  SUBCASE("2x2 is symmetric about the origin") {
    const FovMask m = make_fov_mask(VoxelGrid::make2d(2, 1.0), MaskShape::Full);
    const auto c = mask_coordinates(m);
    REQUIRE(c.size() == 8);
    CHECK(c[0] == -c[6]);
    CHECK(c[1] == -c[7]);
    CHECK(c[2] == -c[4]);
    CHECK(c[3] == -c[5]);
    CHECK(c[0] == doctest::Approx(-0.5));
  }
  SUBCASE("length, range and mm round trip") {
    const VoxelGrid g = VoxelGrid::make3d(9, 7, 5, 0.5, 1.5, 2.0);
    const FovMask m = make_fov_mask(g, MaskShape::Inscribed);
    const auto c = mask_coordinates(m);
    CHECK(c.size() == 3 * m.n());
    for (double u : c) CHECK(std::abs(u) <= 1.0);
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < g.dims[a]; ++i) {
        const double mm = g.center(a, i);
        const double back = m.to_mm(a, m.to_normalized(a, mm));
        CHECK(std::abs(back - mm) <= 1e-12 * std::max(1.0, std::abs(mm)));
      }
  }
}

TEST_CASE("index batches") {
  Rng rng(3);
  SUBCASE("batch of n is a permutation") {
    const auto b = sample_index_batch(10, 10, rng);
    const std::set<std::size_t> s(b.indices.begin(), b.indices.end());
    CHECK(s.size() == 10);
    CHECK(*s.rbegin() == 9);
  }
  SUBCASE("fixed seed repeats") {
    Rng a(42), b(42);
    CHECK(sample_index_batch(16, 1, a).indices == sample_index_batch(16, 1, b).indices);
  }
  SUBCASE("out of range sizes are rejected") {
    CHECK_THROWS_AS(sample_index_batch(10, 0, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_index_batch(10, 11, rng), std::invalid_argument);
  }
  SUBCASE("inclusion frequency is |I|/n") {
    const int draws = 100000;
    std::vector<int> hits(100, 0);
    for (int t = 0; t < draws; ++t) {
      const auto b = sample_index_batch(100, 25, rng);
      std::set<std::size_t> s(b.indices.begin(), b.indices.end());
      REQUIRE(s.size() == 25);
      for (auto i : b.indices) ++hits[i];
    }
    double chi2 = 0.0;
    const double expect = 0.25 * draws;
    for (int h : hits) {
      CHECK(std::abs(h / double(draws) - 0.25) <= 0.01);
      chi2 += (h - expect) * (h - expect) / expect;
    }
    // Inclusion counts have variance p(1-p) per draw; 99 dof, generous bound.
    CHECK(chi2 * (1.0 / 0.75) < 160.0);
  }
}
