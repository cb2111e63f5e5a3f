#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "inrct/gradient.hpp"
#include "inrct/phantom.hpp"

using namespace inrct;

namespace {

bool report(const std::string& name, double value, double tol) {
  const bool ok = value <= tol;
  std::printf("%-4s %-44s %.3e (tol %.0e)\n", ok ? "PASS" : "FAIL", name.c_str(), value, tol);
  return ok;
}

std::vector<double> randn(std::size_t n, Rng& rng) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// max |a - b| / max |b|
double scaled_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    d = std::max(d, std::abs(a[k] - b[k]));
    s = std::max(s, std::abs(b[k]));
  }
  return s > 0.0 ? d / s : d;
}

std::vector<double> central_differences(std::vector<double> theta, double h,
                                        const std::function<double(const std::vector<double>&)>& f) {
  std::vector<double> g(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double keep = theta[k];
    theta[k] = keep + h;
    const double up = f(theta);
    theta[k] = keep - h;
    const double down = f(theta);
    theta[k] = keep;
    g[k] = (up - down) / (2 * h);
  }
  return g;
}

double adjoint_mismatch(const Geometry& geom, const VoxelGrid& grid, Rng& rng) {
  const Projector p(geom, grid);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> x = randn(p.num_voxels(), rng), y = randn(p.num_rays(), rng);
    const std::vector<double> px = p.forward(x), pty = p.back(y);
    worst = std::max(worst, std::abs(dot(px, y) - dot(x, pty)) / (norm(px) * norm(y)));
  }
  return worst;
}

InrConfig small_config(Arch arch) {
  InrConfig c = default_config(arch);
  c.hidden_width = 16;
  c.hidden_layers = 2;
  c.fourier_features = 8;
  c.fourier_scale = 1.0;
  c.first_omega = 5.0;
  c.hidden_omega = 5.0;
  c.hash_levels = 4;
  c.hash_log2_table = 8;
  c.hash_base_resolution = 2;
  c.hash_max_resolution = 16;
  return c;
}

InrModel jittered(const InrConfig& cfg, int d, Rng& rng) {
  const InrModel m = init_model(cfg, d, rng);
  std::vector<double> theta = flatten_params(m);
  std::normal_distribution<double> n(0.0, 0.1);
  for (double& t : theta) t += n(rng);
  return unflatten_params(m, theta);
}

}  // namespace

bool run_gradcheck(const GradcheckOptions& opt) {
  Rng rng(opt.seed);
  bool ok = true;
  const auto two_pi = 2 * std::numbers::pi;

  ok &= report("adjoint, fan beam 64x64",
               adjoint_mismatch(FanBeamGeometry{equispaced_angles(30, two_pi), 150, 300, 96, 2.0},
                                VoxelGrid::make2d(64, 1.0), rng),
               1e-10);
  ok &= report("adjoint, cone beam 32^3",
               adjoint_mismatch(
                   ConeBeamGeometry{equispaced_angles(20, two_pi), 100, 200, 48, 2.0, 32, 2.0},
                   VoxelGrid::make3d(32, 1.0), rng),
               1e-10);

  for (Arch arch : {Arch::FFN, Arch::SIREN, Arch::HashEnc}) {
    const InrModel m = jittered(small_config(arch), 2, rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(16), w(8);
    for (double& v : x) v = u(rng);
    for (double& v : w) v = u(rng);
    const std::vector<double> g = weighted_param_grad(m, x, w);
    const std::vector<double> fd = central_differences(
        flatten_params(m), 1e-6, [&](const std::vector<double>& t) {
          return dot(eval(unflatten_params(m, t), x), w);
        });
    ok &= report("parameter gradient, " + to_string(arch), scaled_diff(g, fd), 1e-6);
  }

  // Tiny end-to-end pipeline.
  const VoxelGrid grid = VoxelGrid::make2d(8, 1.0);
  const FanBeamGeometry geom{equispaced_angles(4, two_pi), 30.0, 60.0, 8, 3.0};
  InrConfig tiny = small_config(Arch::FFN);
  tiny.hidden_width = 8;
  const InrModel model = jittered(tiny, 2, rng);
  const std::vector<double> y =
      Projector(geom, grid)
          .forward(rasterize(EllipsePhantom{2, {Ellipse{{0.5, -0.3, 0}, {2.8, 1.9, 1}, 0.4, 0.02}}},
                             grid, 4)
                       .values);
  for (LossKind::Tag tag : {LossKind::Tag::LS, LossKind::Tag::FLS}) {
    const ReconProblem p(make_fov_mask(grid, MaskShape::Full), geom, y,
                         tag == LossKind::Tag::LS ? LossKind::ls() : LossKind::fls(geom));
    const std::vector<double> g = exact_gradient(model, p);
    const std::vector<double> fd =
        central_differences(flatten_params(model), 1e-6, [&](const std::vector<double>& t) {
          return residual_pass(unflatten_params(model, t), p).loss;
        });
    ok &= report("end-to-end gradient, " + to_string(tag), scaled_diff(g, fd), 1e-6);

    Rng brng(opt.seed + 1);
    const GradEstimate full = stochastic_gradient(model, p, p.mask.n(), brng);
    ok &= report("full-batch estimate vs exact, " + to_string(tag), scaled_diff(full.grad, g),
                 1e-12);

    if (tag == LossKind::Tag::FLS && opt.draws > 1) {
      const std::size_t np = g.size();
      std::vector<double> sum(np, 0.0), sq(np, 0.0);
      const ResidualPass pass = residual_pass(model, p);
      for (int s = 0; s < opt.draws; ++s) {
        const GradEstimate e = estimate_from_pass(model, p, pass, p.mask.n() / 4, brng);
        for (std::size_t k = 0; k < np; ++k) sum[k] += e.grad[k], sq[k] += e.grad[k] * e.grad[k];
      }
      double worst = 0.0;
      for (std::size_t k = 0; k < np; ++k) {
        const double mean = sum[k] / opt.draws;
        const double var = (sq[k] - opt.draws * mean * mean) / (opt.draws - 1);
        const double se = std::sqrt(std::max(var, 0.0) / opt.draws);
        if (se > 0.0) worst = std::max(worst, std::abs(mean - g[k]) / se);
      }
      ok &= report("estimator mean vs exact (standard errors)", worst, 4.0);
    }
  }

  const FovMask big = make_fov_mask(VoxelGrid::make2d(128, 1.0), MaskShape::Full);
  ok &= report("memory proxy ratio at n/16, minus 16",
               std::abs(memory_proxy(model, big, big.n() / 16).ratio - 16.0), 0.0);
  std::printf("%s\n", ok ? "all checks passed" : "some checks FAILED");
  return ok;
}
