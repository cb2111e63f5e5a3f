#include "inrct/projector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace inrct {

Projector::Projector(Geometry geometry, VoxelGrid grid)
    : geometry_(std::move(geometry)), grid_(grid), layout_(scan_layout(geometry_)) {
  if (layout_.ndim != grid_.ndim)
    throw std::invalid_argument(layout_.ndim == 2 ? "fan-beam geometry needs a 2D grid"
                                                  : "cone-beam geometry needs a 3D grid");
  const double hx = grid_.half_extent(0), hy = grid_.half_extent(1);
  if (!(layout_.source_to_iso > std::hypot(hx, hy)))
    throw std::invalid_argument("source orbit intersects the image grid");
  for (double a : layout_.angles) {
    cos_.push_back(std::cos(a));
    sin_.push_back(std::sin(a));
  }
}

// Visits (voxel index, weight) pairs of one ray's interpolation stencil.
template <class Visit>
void Projector::trace(int view, int row, int col, Visit&& visit) const {
  const double c = cos_[view], s = sin_[view];
  const double r = layout_.source_to_iso;
  const double d = layout_.source_to_detector;
  const double u = layout_.det_u(col);
  const double v = grid_.ndim == 3 ? layout_.det_v(row) : 0.0;

  const double src[3] = {r * c, r * s, 0.0};
  const double dir[3] = {-d * c - u * s, -d * s + u * c, v};
  const int nd = grid_.ndim;

  int major = 0;
  for (int a = 1; a < nd; ++a)
    if (std::abs(dir[a]) > std::abs(dir[major])) major = a;
  const double len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
  const double step_w = grid_.spacing[major] * len / std::abs(dir[major]);

  int other[2];
  int no = 0;
  for (int a = 0; a < nd; ++a)
    if (a != major) other[no++] = a;

  std::size_t stride[3] = {1, static_cast<std::size_t>(grid_.dims[0]),
                           static_cast<std::size_t>(grid_.dims[0]) * grid_.dims[1]};

  for (int i = 0; i < grid_.dims[major]; ++i) {
    const double t = (grid_.center(major, i) - src[major]) / dir[major];
    int lo[2] = {0, 0};
    double frac[2] = {0.0, 0.0};
    bool hit = true;
    for (int k = 0; k < no; ++k) {
      const int a = other[k];
      const double f = (src[a] + t * dir[a] - grid_.origin(a)) / grid_.spacing[a];
      if (f <= -1.0 || f >= grid_.dims[a]) {
        hit = false;
        break;
      }
      const double fl = std::floor(f);
      lo[k] = static_cast<int>(fl);
      frac[k] = f - fl;
    }
    if (!hit) continue;
    const std::size_t base = i * stride[major];
    if (no == 1) {
      const int a = other[0];
      if (lo[0] >= 0) visit(base + lo[0] * stride[a], step_w * (1.0 - frac[0]));
      if (lo[0] + 1 < grid_.dims[a]) visit(base + (lo[0] + 1) * stride[a], step_w * frac[0]);
    } else {
      const int a = other[0], b = other[1];
      for (int da = 0; da < 2; ++da) {
        const int ia = lo[0] + da;
        if (ia < 0 || ia >= grid_.dims[a]) continue;
        const double wa = da ? frac[0] : 1.0 - frac[0];
        for (int db = 0; db < 2; ++db) {
          const int ib = lo[1] + db;
          if (ib < 0 || ib >= grid_.dims[b]) continue;
          const double wb = db ? frac[1] : 1.0 - frac[1];
          visit(base + ia * stride[a] + ib * stride[b], step_w * wa * wb);
        }
      }
    }
  }
}

void Projector::forward_views(std::span<const double> image, std::span<double> sino,
                              std::span<const int> views) const {
  if (image.size() != num_voxels()) throw std::invalid_argument("forward: image size mismatch");
  if (sino.size() != num_rays()) throw std::invalid_argument("forward: sinogram size mismatch");
  const std::size_t per_view = layout_.rays_per_view();
  for (int view : views) {
    if (view < 0 || view >= layout_.num_views) throw std::invalid_argument("view out of range");
    double* out = sino.data() + view * per_view;
    for (int row = 0; row < layout_.num_rows; ++row) {
      for (int col = 0; col < layout_.num_det; ++col) {
        double acc = 0.0;
        trace(view, row, col, [&](std::size_t idx, double w) { acc += w * image[idx]; });
        out[static_cast<std::size_t>(row) * layout_.num_det + col] = acc;
      }
    }
  }
}

void Projector::back_views(std::span<const double> sino, std::span<double> image,
                           std::span<const int> views) const {
  if (image.size() != num_voxels()) throw std::invalid_argument("back: image size mismatch");
  if (sino.size() != num_rays()) throw std::invalid_argument("back: sinogram size mismatch");
  const std::size_t per_view = layout_.rays_per_view();
  for (int view : views) {
    if (view < 0 || view >= layout_.num_views) throw std::invalid_argument("view out of range");
    const double* in = sino.data() + view * per_view;
    for (int row = 0; row < layout_.num_rows; ++row) {
      for (int col = 0; col < layout_.num_det; ++col) {
        const double val = in[static_cast<std::size_t>(row) * layout_.num_det + col];
        if (val == 0.0) continue;
        trace(view, row, col, [&](std::size_t idx, double w) { image[idx] += w * val; });
      }
    }
  }
}

namespace {

std::vector<int> all_views(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

std::vector<double> Projector::forward(std::span<const double> image) const {
  std::vector<double> sino(num_rays(), 0.0);
  forward_views(image, sino, all_views(layout_.num_views));
  return sino;
}

std::vector<double> Projector::back(std::span<const double> sino) const {
  std::vector<double> image(num_voxels(), 0.0);
  back_views(sino, image, all_views(layout_.num_views));
  return image;
}

Sinogram forward_project(const ImageVec& image, const Geometry& geometry) {
  Projector p(geometry, image.grid);
  return Sinogram{geometry, p.forward(image.values)};
}

ImageVec back_project(const Sinogram& sino, const VoxelGrid& grid) {
  Projector p(sino.geometry, grid);
  return ImageVec{grid, p.back(sino.values)};
}

RampFilter make_ramp_filter(int num_det, double det_spacing) {
  if (num_det < 1) throw std::invalid_argument("ramp filter needs num_det >= 1");
  if (!(det_spacing > 0.0)) throw std::invalid_argument("ramp filter needs spacing > 0");
  RampFilter f{std::vector<double>(2 * num_det - 1, 0.0), num_det, det_spacing};
  const double d2 = det_spacing * det_spacing;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (int k = -(num_det - 1); k < num_det; ++k) {
    double h = 0.0;
    if (k == 0)
      h = 1.0 / (4.0 * d2);
    else if (k % 2 != 0)
      h = -1.0 / (pi2 * static_cast<double>(k) * k * d2);
    f.kernel[k + num_det - 1] = h;
  }
  return f;
}

RampFilter make_identity_filter(int num_det, double det_spacing) {
  if (num_det < 1 || !(det_spacing > 0.0))
    throw std::invalid_argument("identity filter needs num_det >= 1 and spacing > 0");
  RampFilter f{std::vector<double>(2 * num_det - 1, 0.0), num_det, det_spacing};
  f.kernel[num_det - 1] = 1.0 / det_spacing;
  return f;
}

std::vector<double> apply_ramp(std::span<const double> sino, const ScanLayout& layout,
                               const RampFilter& filter) {
  if (filter.num_det != layout.num_det ||
      filter.kernel.size() != static_cast<std::size_t>(2 * layout.num_det - 1))
    throw std::invalid_argument("ramp kernel does not match detector size");
  if (sino.size() != layout.num_rays())
    throw std::invalid_argument("apply_ramp: sinogram size mismatch");
  const int n = layout.num_det;
  const double* h = filter.kernel.data() + (n - 1);
  std::vector<double> out(sino.size(), 0.0);
  const std::size_t lines = sino.size() / n;
  for (std::size_t line = 0; line < lines; ++line) {
    const double* a = sino.data() + line * n;
    double* o = out.data() + line * n;
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += h[i - j] * a[j];
      o[i] = filter.det_spacing * acc;
    }
  }
  return out;
}

Sinogram apply_ramp(const Sinogram& sino, const RampFilter& filter) {
  return Sinogram{sino.geometry, apply_ramp(sino.values, scan_layout(sino.geometry), filter)};
}

ImageVec fbp_reconstruct(const Sinogram& sino, const VoxelGrid& grid) {
  const ScanLayout lay = scan_layout(sino.geometry);
  if (lay.num_views < 2) throw std::invalid_argument("FBP needs at least 2 views");
  if (lay.ndim != grid.ndim) throw std::invalid_argument("FBP: geometry/grid dimension mismatch");
  if (sino.values.size() != lay.num_rays())
    throw std::invalid_argument("FBP: sinogram size mismatch");

  // Rescale the detector to the isocenter plane.
  const double r = lay.source_to_iso;
  const double mag = lay.source_to_detector / r;
  const double du = lay.det_spacing / mag;
  const double dv = lay.row_spacing / mag;
  const int nu = lay.num_det, nv = lay.num_rows;
  const double u0 = -0.5 * (nu - 1) * du;
  const double v0 = -0.5 * (nv - 1) * dv;

  std::vector<double> weighted(sino.values.size());
  for (int view = 0; view < lay.num_views; ++view) {
    for (int j = 0; j < nv; ++j) {
      const double v = grid.ndim == 3 ? v0 + j * dv : 0.0;
      for (int k = 0; k < nu; ++k) {
        const double u = u0 + k * du;
        const std::size_t idx = (static_cast<std::size_t>(view) * nv + j) * nu + k;
        weighted[idx] = sino.values[idx] * r / std::sqrt(r * r + u * u + v * v);
      }
    }
  }
  const std::vector<double> q = apply_ramp(weighted, lay, make_ramp_filter(nu, du));

  const std::vector<double>& angles = lay.angles;
  const double dbeta = (angles.back() - angles.front()) / (lay.num_views - 1);
  const int nz = grid.ndim == 3 ? grid.dims[2] : 1;
  std::vector<double> image(grid.size(), 0.0);

  for (int view = 0; view < lay.num_views; ++view) {
    const double c = std::cos(angles[view]), s = std::sin(angles[view]);
    const double* qv = q.data() + static_cast<std::size_t>(view) * nv * nu;
    std::size_t idx = 0;
    for (int iz = 0; iz < nz; ++iz) {
      const double z = grid.ndim == 3 ? grid.center(2, iz) : 0.0;
      for (int iy = 0; iy < grid.dims[1]; ++iy) {
        const double y = grid.center(1, iy);
        for (int ix = 0; ix < grid.dims[0]; ++ix, ++idx) {
          const double x = grid.center(0, ix);
          const double dist = r - (x * c + y * s);
          const double ku = (r * (-x * s + y * c) / dist - u0) / du;
          if (ku < 0.0 || ku > nu - 1) continue;
          const int k0 = std::min(static_cast<int>(ku), nu - 2 < 0 ? 0 : nu - 2);
          const double fu = ku - k0;
          double val;
          if (grid.ndim == 3) {
            const double kv = (r * z / dist - v0) / dv;
            if (kv < 0.0 || kv > nv - 1) continue;
            const int j0 = std::min(static_cast<int>(kv), nv - 2 < 0 ? 0 : nv - 2);
            const double fv = kv - j0;
            auto at = [&](int j, int k) {
              if (j >= nv || k >= nu) return 0.0;
              return qv[static_cast<std::size_t>(j) * nu + k];
            };
            val = (1 - fv) * ((1 - fu) * at(j0, k0) + fu * at(j0, k0 + 1)) +
                  fv * ((1 - fu) * at(j0 + 1, k0) + fu * at(j0 + 1, k0 + 1));
          } else {
            val = (1 - fu) * qv[k0] + (k0 + 1 < nu ? fu * qv[k0 + 1] : 0.0);
          }
          image[idx] += (r * r) / (dist * dist) * val;
        }
      }
    }
  }
  for (double& x : image) x *= 0.5 * dbeta;
  return ImageVec{grid, std::move(image)};
}

}  // namespace inrct
