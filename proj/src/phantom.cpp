#include "inrct/phantom.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "inrct/projector.hpp"

namespace inrct {

namespace {

constexpr double kValueScale = 0.011;  // Shepp-Logan skull value 2 -> 0.022 mm^-1

double deg(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

double EllipsePhantom::value_at(double x, double y, double z) const {
  double total = 0.0;
  for (const Ellipse& e : components) {
    const double c = std::cos(e.angle), s = std::sin(e.angle);
    const double dx = x - e.center[0], dy = y - e.center[1];
    const double xr = (c * dx + s * dy) / e.semi_axes[0];
    const double yr = (-s * dx + c * dy) / e.semi_axes[1];
    double q = xr * xr + yr * yr;
    if (ndim == 3) {
      const double zr = (z - e.center[2]) / e.semi_axes[2];
      q += zr * zr;
    }
    if (q <= 1.0) total += e.value;
  }
  return total;
}

EllipsePhantom shepp_logan_2d(double scale_mm) {
  // x0, y0, a, b, angle (deg), value
  static constexpr double table[10][6] = {
      {0.0, 0.0, 0.92, 0.69, 90.0, 2.0},
      {0.0, -0.0184, 0.874, 0.6624, 90.0, -0.98},
      {0.22, 0.0, 0.31, 0.11, 72.0, -0.02},
      {-0.22, 0.0, 0.41, 0.16, 108.0, -0.02},
      {0.0, 0.35, 0.25, 0.21, 90.0, 0.01},
      {0.0, 0.1, 0.046, 0.046, 0.0, 0.01},
      {0.0, -0.1, 0.046, 0.046, 0.0, 0.01},
      {-0.08, -0.605, 0.046, 0.023, 0.0, 0.01},
      {0.0, -0.606, 0.023, 0.023, 0.0, 0.01},
      {0.06, -0.605, 0.046, 0.023, 90.0, 0.01},
  };
  EllipsePhantom p{2, {}};
  for (const auto& row : table) {
    Ellipse e;
    e.center = {row[0] * scale_mm, row[1] * scale_mm, 0.0};
    e.semi_axes = {row[2] * scale_mm, row[3] * scale_mm, 1.0};
    e.angle = deg(row[4]);
    e.value = row[5] * kValueScale;
    p.components.push_back(e);
  }
  return p;
}

EllipsePhantom ellipsoid_phantom_3d(double scale_mm) {
  // x0, y0, z0, a, b, c, angle (deg), value
  static constexpr double table[8][8] = {
      {0.0, 0.0, 0.0, 0.69, 0.92, 0.81, 0.0, 2.0},
      {0.0, -0.0184, 0.0, 0.6624, 0.874, 0.78, 0.0, -0.98},
      {0.22, 0.0, 0.0, 0.11, 0.31, 0.22, -18.0, -0.02},
      {-0.22, 0.0, 0.0, 0.16, 0.41, 0.28, 18.0, -0.02},
      {0.0, 0.35, -0.15, 0.21, 0.25, 0.41, 0.0, 0.01},
      {0.0, 0.1, 0.25, 0.046, 0.046, 0.05, 0.0, 0.01},
      {0.0, -0.1, 0.25, 0.046, 0.046, 0.05, 0.0, 0.01},
      {0.0, -0.605, 0.0, 0.046, 0.023, 0.02, 0.0, 0.01},
  };
  EllipsePhantom p{3, {}};
  for (const auto& row : table) {
    Ellipse e;
    e.center = {row[0] * scale_mm, row[1] * scale_mm, row[2] * scale_mm};
    e.semi_axes = {row[3] * scale_mm, row[4] * scale_mm, row[5] * scale_mm};
    e.angle = deg(row[6]);
    e.value = row[7] * kValueScale;
    p.components.push_back(e);
  }
  return p;
}

EllipsePhantom parse_phantom(const std::string& text) {
  EllipsePhantom p{0, {}};
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::vector<double> f;
    double x;
    while (fields >> x) f.push_back(x);
    if (!fields.eof())
      throw std::invalid_argument("phantom line " + std::to_string(lineno) + ": bad number");
    if (f.empty()) continue;
    const int nd = f.size() == 6 ? 2 : f.size() == 8 ? 3 : 0;
    if (nd == 0)
      throw std::invalid_argument("phantom line " + std::to_string(lineno) +
                                  ": expected 6 (2D) or 8 (3D) fields");
    if (p.ndim != 0 && p.ndim != nd)
      throw std::invalid_argument("phantom mixes 2D and 3D components");
    p.ndim = nd;
    Ellipse e;
    if (nd == 2) {
      e.center = {f[0], f[1], 0.0};
      e.semi_axes = {f[2], f[3], 1.0};
      e.angle = f[4];
      e.value = f[5];
    } else {
      e.center = {f[0], f[1], f[2]};
      e.semi_axes = {f[3], f[4], f[5]};
      e.angle = f[6];
      e.value = f[7];
    }
    for (int a = 0; a < nd; ++a)
      if (!(e.semi_axes[a] > 0.0))
        throw std::invalid_argument("phantom line " + std::to_string(lineno) +
                                    ": semi-axes must be > 0");
    p.components.push_back(e);
  }
  if (p.ndim == 0) p.ndim = 2;
  return p;
}

EllipsePhantom load_phantom(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open phantom file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_phantom(ss.str());
}

ImageVec rasterize(const EllipsePhantom& phantom, const VoxelGrid& grid, int supersample) {
  if (supersample < 1) throw std::invalid_argument("supersample must be >= 1");
  if (phantom.ndim != grid.ndim && !phantom.components.empty())
    throw std::invalid_argument("phantom/grid dimension mismatch");
  std::vector<double> offsets(supersample);
  for (int k = 0; k < supersample; ++k) offsets[k] = (k + 0.5) / supersample - 0.5;

  const int nz = grid.ndim == 3 ? grid.dims[2] : 1;
  const int sz = grid.ndim == 3 ? supersample : 1;
  const double inv = 1.0 / (static_cast<double>(supersample) * supersample * sz);
  std::vector<double> values(grid.size(), 0.0);
  if (phantom.components.empty()) return ImageVec{grid, std::move(values)};

  std::size_t idx = 0;
  for (int iz = 0; iz < nz; ++iz) {
    for (int iy = 0; iy < grid.dims[1]; ++iy) {
      for (int ix = 0; ix < grid.dims[0]; ++ix, ++idx) {
        double acc = 0.0;
        for (int kz = 0; kz < sz; ++kz) {
          const double z =
              grid.ndim == 3 ? grid.center(2, iz) + offsets[kz] * grid.spacing[2] : 0.0;
          for (int ky = 0; ky < supersample; ++ky) {
            const double y = grid.center(1, iy) + offsets[ky] * grid.spacing[1];
            for (int kx = 0; kx < supersample; ++kx) {
              const double x = grid.center(0, ix) + offsets[kx] * grid.spacing[0];
              acc += phantom.value_at(x, y, z);
            }
          }
        }
        values[idx] = acc * inv;
      }
    }
  }
  return ImageVec{grid, std::move(values)};
}

ImageVec downsample_average(const ImageVec& fine, int factor) {
  const VoxelGrid& g = fine.grid;
  if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
  for (int a = 0; a < g.ndim; ++a)
    if (g.dims[a] % factor != 0)
      throw std::invalid_argument("grid dims must be divisible by the downsample factor");
  VoxelGrid c = g;
  for (int a = 0; a < g.ndim; ++a) {
    c.dims[a] = g.dims[a] / factor;
    c.spacing[a] = g.spacing[a] * factor;
  }
  std::vector<double> out(c.size(), 0.0);
  const int fz = g.ndim == 3 ? factor : 1;
  const double inv = 1.0 / (static_cast<double>(factor) * factor * fz);
  const int nz = g.ndim == 3 ? g.dims[2] : 1;
  std::size_t idx = 0;
  for (int iz = 0; iz < nz; ++iz)
    for (int iy = 0; iy < g.dims[1]; ++iy)
      for (int ix = 0; ix < g.dims[0]; ++ix, ++idx) {
        const std::size_t cz = g.ndim == 3 ? iz / factor : 0;
        const std::size_t ci =
            ix / factor + c.dims[0] * (iy / factor + static_cast<std::size_t>(c.dims[1]) * cz);
        out[ci] += fine.values[idx] * inv;
      }
  return ImageVec{c, std::move(out)};
}

Sinogram simulate_measurements(const EllipsePhantom& phantom, const Geometry& geometry,
                               const VoxelGrid& sim_grid, const VoxelGrid& recon_grid,
                               double noise_sigma, Rng& rng, int supersample) {
  if (sim_grid.ndim != recon_grid.ndim)
    throw std::invalid_argument("simulation and reconstruction grids differ in dimension");
  for (int a = 0; a < sim_grid.ndim; ++a) {
    if (sim_grid.spacing[a] * 2.0 > recon_grid.spacing[a] * (1.0 + 1e-12) ||
        sim_grid.dims[a] < 2 * recon_grid.dims[a])
      throw std::invalid_argument(
          "simulation grid must be at least 2x finer than the reconstruction grid "
          "(inverse-crime guard)");
  }
  if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
  const ImageVec fine = rasterize(phantom, sim_grid, supersample);
  Projector proj(geometry, sim_grid);
  Sinogram sino{geometry, proj.forward(fine.values)};
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double& v : sino.values) v += noise(rng);
  }
  return sino;
}

}  // namespace inrct
