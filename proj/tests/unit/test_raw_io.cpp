#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include "inrct/raw_io.hpp"

using namespace inrct;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "inrct_io_test";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<double> float_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<float> d;
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("image round trip") {
  const VoxelGrid g = VoxelGrid::make3d(5, 4, 3, 0.5, 0.75, 1.25);
  const ImageVec img{g, float_values(g.size(), 1)};
  const std::string path = scratch("img.raw").string();
  write_image(path, img, {{"note", "x"}});
  const ImageVec back = read_image(path);
  CHECK(back.grid == g);
  CHECK(back.values == img.values);
  CHECK(fs::file_size(path) == g.size() * 4);
  CHECK(read_header(header_path(path)).at("note") == "x");
  CHECK_THROWS_AS(read_sinogram(path), std::runtime_error);
}

TEST_CASE("sinogram round trip") {
  const std::vector<double> angles = equispaced_angles(7, 2 * std::numbers::pi / 3);
  for (const Geometry& g :
       {Geometry{FanBeamGeometry{angles, 123.4, 456.7, 9, 0.3}},
        Geometry{ConeBeamGeometry{angles, 100.0, 210.0, 6, 1.1, 3, 0.9}}}) {
    const Sinogram s{g, float_values(num_rays(g), 2)};
    const std::string path = scratch("sino.raw").string();
    write_sinogram(path, s);
    const Sinogram back = read_sinogram(path);
    CHECK(same_geometry(back.geometry, g));
    CHECK(back.values == s.values);
  }
}

TEST_CASE("truncated data is rejected") {
  const std::string path = scratch("short.raw").string();
  const ImageVec img{VoxelGrid::make2d(4, 1.0), std::vector<double>(16, 1.0)};
  write_image(path, img);
  std::ofstream(path, std::ios::binary | std::ios::trunc).write("abcd", 4);
  CHECK_THROWS_AS(read_image(path), std::runtime_error);
  CHECK_THROWS_AS(read_image(scratch("missing.raw").string()), std::runtime_error);
}

TEST_CASE("header format") {
  const std::string path = scratch("h.hdr").string();
  std::ofstream(path) << "# comment\n a = 1 2 \nkey=value\n\n";
  const Header h = read_header(path);
  CHECK(h.at("a") == "1 2");
  CHECK(h.at("key") == "value");
  CHECK(h.size() == 2);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  for (Arch arch : {Arch::FFN, Arch::SIREN, Arch::HashEnc}) {
    CAPTURE(to_string(arch));
    InrConfig c = default_config(arch);
    c.hidden_width = 16;
    c.fourier_features = 12;
    c.hash_log2_table = 8;
    c.hash_max_resolution = 40;
    Rng rng(6);
    const InrModel m = init_model(c, 3, rng);
    const std::string path = scratch("model.theta").string();
    save_checkpoint(path, m);
    const InrModel back = load_checkpoint(path);
    CHECK(flatten_params(back) == flatten_params(m));
    CHECK(back.fourier_matrix() == m.fourier_matrix());
    CHECK(back.hash_resolutions() == m.hash_resolutions());
    const std::vector<double> x{0.1, -0.4, 0.9, 0.5, 0.5, -1.0};
    CHECK(eval(back, x) == eval(m, x));
  }
}
