#include "inrct/optim.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "inrct/projector.hpp"

namespace inrct {

AdamState make_adam(std::size_t num_params, double lr, double beta1, double beta2, double eps) {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  AdamState s;
  s.m.assign(num_params, 0.0);
  s.v.assign(num_params, 0.0);
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  return s;
}

void adam_step(AdamState& s, std::span<double> theta, std::span<const double> grad) {
  if (theta.size() != grad.size() || theta.size() != s.m.size())
    throw std::invalid_argument("adam_step: length mismatch");
  ++s.t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grad[i];
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    const double mhat = s.m[i] / c1;
    const double vhat = s.v[i] / c2;
    theta[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

CglsResult cgls(const Geometry& geometry, const VoxelGrid& grid, std::span<const double> y,
                int iterations) {
  if (iterations < 1) throw std::invalid_argument("CGLS needs iterations >= 1");
  const Projector proj(geometry, grid);
  if (y.size() != proj.num_rays()) throw std::invalid_argument("CGLS: data size mismatch");

  std::vector<double> x(proj.num_voxels(), 0.0);
  std::vector<double> r(y.begin(), y.end());
  std::vector<double> s = proj.back(r);
  std::vector<double> p = s;
  double gamma = dot(s, s);

  CglsResult out;
  out.residual_norms.push_back(std::sqrt(dot(r, r)));
  for (int k = 0; k < iterations && gamma > 0.0; ++k) {
    const std::vector<double> q = proj.forward(p);
    const double qq = dot(q, q);
    if (qq == 0.0) break;
    const double alpha = gamma / qq;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * p[i];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * q[i];
    s = proj.back(r);
    const double gamma_next = dot(s, s);
    const double beta = gamma_next / gamma;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = s[i] + beta * p[i];
    gamma = gamma_next;
    out.residual_norms.push_back(std::sqrt(dot(r, r)));
  }
  out.image = ImageVec{grid, std::move(x)};
  return out;
}

}  // namespace inrct
