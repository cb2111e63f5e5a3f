#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "inrct/gradient.hpp"
#include "inrct/optim.hpp"
#include "inrct/phantom.hpp"
#include "inrct/projector.hpp"
#include "inrct/raw_io.hpp"
#include "inrct/train.hpp"

namespace py = pybind11;
using namespace inrct;

namespace {

using InArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vec(const InArray& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  if (!v.empty()) std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
  return out;
}

// Images come back shaped (z,) y, x; sinograms (views, [rows,] detectors).
py::array_t<double> image_array(const ImageVec& img) {
  py::array_t<double> a = to_array(img.values);
  if (img.grid.ndim == 2) return a.reshape({img.grid.dims[1], img.grid.dims[0]});
  return a.reshape({img.grid.dims[2], img.grid.dims[1], img.grid.dims[0]});
}

py::array_t<double> sino_array(const std::vector<double>& values, const Geometry& g) {
  const ScanLayout L = scan_layout(g);
  py::array_t<double> a = to_array(values);
  if (L.ndim == 2) return a.reshape({L.num_views, L.num_det});
  return a.reshape({L.num_views, L.num_rows, L.num_det});
}

}  // namespace

PYBIND11_MODULE(_inrct, m) {
  m.doc() = "INR-based CT reconstruction with subsampled gradient estimation";

  py::class_<VoxelGrid>(m, "VoxelGrid")
      .def_static("make2d", py::overload_cast<int, double>(&VoxelGrid::make2d), py::arg("n"),
                  py::arg("spacing"))
      .def_static("make3d", py::overload_cast<int, double>(&VoxelGrid::make3d), py::arg("n"),
                  py::arg("spacing"))
      .def_readonly("ndim", &VoxelGrid::ndim)
      .def_property_readonly("dims", [](const VoxelGrid& g) {
        return std::vector<int>(g.dims.begin(), g.dims.begin() + g.ndim);
      })
      .def_property_readonly("spacing", [](const VoxelGrid& g) {
        return std::vector<double>(g.spacing.begin(), g.spacing.begin() + g.ndim);
      })
      .def("size", &VoxelGrid::size);

  py::enum_<MaskShape>(m, "MaskShape")
      .value("Inscribed", MaskShape::Inscribed)
      .value("Full", MaskShape::Full);

  py::class_<FovMask>(m, "FovMask")
      .def_property_readonly("n", &FovMask::n)
      .def_property_readonly("grid", &FovMask::grid)
      .def("coordinates", [](const FovMask& mk) {
        const std::vector<double> c = mask_coordinates(mk);
        return to_array(c).reshape({static_cast<py::ssize_t>(mk.n()),
                                    static_cast<py::ssize_t>(mk.grid().ndim)});
      });
  m.def("make_fov_mask", &make_fov_mask, py::arg("grid"),
        py::arg("shape") = MaskShape::Inscribed);

  m.def("equispaced_angles", &equispaced_angles, py::arg("num_views"),
        py::arg("arc") = 2 * 3.14159265358979323846);

  py::class_<FanBeamGeometry>(m, "FanBeamGeometry")
      .def(py::init([](std::vector<double> angles, double r, double d, int nd, double du) {
             return FanBeamGeometry{std::move(angles), r, d, nd, du};
           }),
           py::arg("angles"), py::arg("source_to_iso"), py::arg("source_to_detector"),
           py::arg("num_det"), py::arg("det_spacing"))
      .def_readonly("angles", &FanBeamGeometry::angles)
      .def_readonly("num_det", &FanBeamGeometry::num_det);

  py::class_<ConeBeamGeometry>(m, "ConeBeamGeometry")
      .def(py::init([](std::vector<double> angles, double r, double d, int nd, double du, int nr,
                       double dv) {
             return ConeBeamGeometry{std::move(angles), r, d, nd, du, nr, dv};
           }),
           py::arg("angles"), py::arg("source_to_iso"), py::arg("source_to_detector"),
           py::arg("num_det"), py::arg("det_spacing"), py::arg("num_det_rows"),
           py::arg("det_row_spacing"))
      .def_readonly("angles", &ConeBeamGeometry::angles);

  py::class_<Projector>(m, "Projector")
      .def(py::init<Geometry, VoxelGrid>(), py::arg("geometry"), py::arg("grid"))
      .def_property_readonly("num_rays", &Projector::num_rays)
      .def_property_readonly("num_voxels", &Projector::num_voxels)
      .def("forward", [](const Projector& p, const InArray& x) {
        return to_array(p.forward(to_vec(x)));
      })
      .def("back", [](const Projector& p, const InArray& y) {
        return to_array(p.back(to_vec(y)));
      });

  m.def("fbp", [](const Geometry& g, const InArray& y, const VoxelGrid& grid) {
    return image_array(fbp_reconstruct(Sinogram{g, to_vec(y)}, grid));
  }, py::arg("geometry"), py::arg("sinogram"), py::arg("grid"));

  m.def("cgls", [](const Geometry& g, const VoxelGrid& grid, const InArray& y, int iters) {
    const CglsResult r = cgls(g, grid, to_vec(y), iters);
    return py::make_tuple(image_array(r.image), to_array(r.residual_norms));
  }, py::arg("geometry"), py::arg("grid"), py::arg("sinogram"), py::arg("iterations"));

  py::class_<EllipsePhantom>(m, "EllipsePhantom").def_readonly("ndim", &EllipsePhantom::ndim);
  m.def("shepp_logan_2d", &shepp_logan_2d, py::arg("scale_mm") = 1.0);
  m.def("ellipsoid_phantom_3d", &ellipsoid_phantom_3d, py::arg("scale_mm") = 1.0);
  m.def("parse_phantom", &parse_phantom, py::arg("text"));
  m.def("rasterize", [](const EllipsePhantom& p, const VoxelGrid& g, int ss) {
    return image_array(rasterize(p, g, ss));
  }, py::arg("phantom"), py::arg("grid"), py::arg("supersample") = 1);
  m.def("simulate_measurements",
        [](const EllipsePhantom& p, const Geometry& g, const VoxelGrid& fine,
           const VoxelGrid& recon, double sigma, std::uint64_t seed, int ss) {
          Rng rng(seed);
          const Sinogram s = simulate_measurements(p, g, fine, recon, sigma, rng, ss);
          return sino_array(s.values, g);
        },
        py::arg("phantom"), py::arg("geometry"), py::arg("sim_grid"), py::arg("recon_grid"),
        py::arg("noise_sigma") = 0.0, py::arg("seed") = 0, py::arg("supersample") = 1);

  py::enum_<Arch>(m, "Arch")
      .value("FFN", Arch::FFN)
      .value("SIREN", Arch::SIREN)
      .value("HashEnc", Arch::HashEnc);

  py::class_<InrConfig>(m, "InrConfig")
      .def(py::init<>())
      .def_static("default", &default_config, py::arg("arch"))
      .def_readwrite("arch", &InrConfig::arch)
      .def_readwrite("hidden_width", &InrConfig::hidden_width)
      .def_readwrite("hidden_layers", &InrConfig::hidden_layers)
      .def_readwrite("fourier_features", &InrConfig::fourier_features)
      .def_readwrite("fourier_scale", &InrConfig::fourier_scale)
      .def_readwrite("first_omega", &InrConfig::first_omega)
      .def_readwrite("hidden_omega", &InrConfig::hidden_omega)
      .def_readwrite("hash_levels", &InrConfig::hash_levels)
      .def_readwrite("hash_log2_table", &InrConfig::hash_log2_table)
      .def_readwrite("hash_features", &InrConfig::hash_features)
      .def_readwrite("hash_base_resolution", &InrConfig::hash_base_resolution)
      .def_readwrite("hash_max_resolution", &InrConfig::hash_max_resolution);

  py::class_<InrModel>(m, "InrModel")
      .def_property_readonly("num_params", &InrModel::num_params)
      .def_property_readonly("input_dim", &InrModel::input_dim)
      .def_property_readonly("tracked_values_per_eval", &InrModel::tracked_values_per_eval)
      .def("params", [](const InrModel& md) { return to_array(flatten_params(md)); })
      .def("with_params", [](const InrModel& md, const InArray& t) {
        return unflatten_params(md, to_vec(t));
      });
  m.def("init_model", [](const InrConfig& c, int d, std::uint64_t seed) {
    Rng rng(seed);
    return init_model(c, d, rng);
  }, py::arg("config"), py::arg("d"), py::arg("seed") = 0);
  m.def("eval", [](const InrModel& md, const InArray& x) {
    return to_array(eval(md, to_vec(x)));
  }, py::arg("model"), py::arg("coords"), "coords: (B, d) array");
  m.def("weighted_param_grad", [](const InrModel& md, const InArray& x, const InArray& w) {
    return to_array(weighted_param_grad(md, to_vec(x), to_vec(w)));
  }, py::arg("model"), py::arg("coords"), py::arg("weights"));
  m.def("save_checkpoint", [](const std::string& p, const InrModel& md) { save_checkpoint(p, md); });
  m.def("load_checkpoint", &load_checkpoint);

  py::enum_<LossKind::Tag>(m, "Loss").value("LS", LossKind::Tag::LS).value("FLS", LossKind::Tag::FLS);

  py::class_<ReconProblem>(m, "ReconProblem")
      .def(py::init([](const FovMask& mask, const Geometry& g, const InArray& y, LossKind::Tag tag,
                       double scale) {
             const LossKind k = tag == LossKind::Tag::LS ? LossKind::ls() : LossKind::fls(g);
             return ReconProblem(mask, g, to_vec(y), k, scale);
           }),
           py::arg("mask"), py::arg("geometry"), py::arg("measurements"),
           py::arg("loss") = LossKind::Tag::FLS, py::arg("value_scale") = 1.0)
      .def("loss", [](const ReconProblem& p, const InrModel& md) {
        return residual_pass(md, p).loss;
      });

  m.def("exact_gradient", [](const InrModel& md, const ReconProblem& p) {
    return to_array(exact_gradient(md, p));
  });
  m.def("stochastic_gradient",
        [](const InrModel& md, const ReconProblem& p, std::size_t batch, std::uint64_t seed) {
          Rng rng(seed);
          const GradEstimate e = stochastic_gradient(md, p, batch, rng);
          return py::make_tuple(to_array(e.grad), e.scale, e.loss);
        },
        py::arg("model"), py::arg("problem"), py::arg("batch_size"), py::arg("seed") = 0,
        "returns (grad, scale, loss)");
  m.def("memory_ratio", [](const InrModel& md, const FovMask& mask, std::size_t batch) {
    return memory_proxy(md, mask, batch).ratio;
  });

  py::enum_<Estimator>(m, "Estimator")
      .value("Stochastic", Estimator::Stochastic)
      .value("Exact", Estimator::Exact);

  py::class_<ReconConfig>(m, "ReconConfig")
      .def(py::init<>())
      .def_readwrite("dim", &ReconConfig::dim)
      .def_readwrite("grid", &ReconConfig::grid)
      .def_readwrite("spacing", &ReconConfig::spacing)
      .def_readwrite("inscribed_mask", &ReconConfig::inscribed_mask)
      .def_readwrite("views", &ReconConfig::views)
      .def_readwrite("arc_deg", &ReconConfig::arc_deg)
      .def_readwrite("detectors", &ReconConfig::detectors)
      .def_readwrite("det_spacing", &ReconConfig::det_spacing)
      .def_readwrite("det_rows", &ReconConfig::det_rows)
      .def_readwrite("det_row_spacing", &ReconConfig::det_row_spacing)
      .def_readwrite("source_to_iso", &ReconConfig::source_to_iso)
      .def_readwrite("source_to_detector", &ReconConfig::source_to_detector)
      .def_readwrite("phantom", &ReconConfig::phantom)
      .def_readwrite("phantom_scale", &ReconConfig::phantom_scale)
      .def_readwrite("sim_factor", &ReconConfig::sim_factor)
      .def_readwrite("noise_sigma", &ReconConfig::noise_sigma)
      .def_readwrite("model", &ReconConfig::model)
      .def_readwrite("loss", &ReconConfig::loss)
      .def_readwrite("estimator", &ReconConfig::estimator)
      .def_readwrite("batch_fraction", &ReconConfig::batch_fraction)
      .def_readwrite("view_subsets", &ReconConfig::view_subsets)
      .def_readwrite("iterations", &ReconConfig::iterations)
      .def_readwrite("value_scale", &ReconConfig::value_scale)
      .def_readwrite("lr", &ReconConfig::lr)
      .def_readwrite("seed", &ReconConfig::seed)
      .def_readwrite("output_dir", &ReconConfig::output_dir)
      .def_readwrite("log_every", &ReconConfig::log_every);

  m.def("train_inr", [](const ReconConfig& c) {
    TrainResult r;
    {
      py::gil_scoped_release release;
      r = train_inr(c);
    }
    py::dict out;
    py::list rows;
    for (const MetricsRow& row : r.log.rows)
      rows.append(py::make_tuple(row.iteration, row.loss, row.image_mse, row.wall_time_s,
                                 row.memory_ratio));
    out["metrics"] = rows;
    out["image"] = image_array(r.image);
    out["final_mse"] = r.final_mse;
    out["batch_size"] = r.batch_size;
    out["model"] = r.model;
    return out;
  }, py::arg("config"),
  "Runs training; returns a dict with metrics rows "
  "(iteration, loss, image_mse, wall_time_s, memory_ratio), image, final_mse, batch_size, model.");
}
