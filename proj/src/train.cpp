#include "inrct/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "inrct/gradient.hpp"
#include "inrct/optim.hpp"
#include "inrct/raw_io.hpp"

namespace inrct {

std::string to_string(Estimator e) { return e == Estimator::Exact ? "exact" : "stochastic"; }

Estimator parse_estimator(const std::string& name) {
  if (name == "exact") return Estimator::Exact;
  if (name == "stochastic") return Estimator::Stochastic;
  throw std::invalid_argument("unknown estimator '" + name + "'");
}

void validate(const ReconConfig& cfg) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (cfg.dim != 2 && cfg.dim != 3) fail("dim must be 2 or 3");
  for (int a = 0; a < cfg.dim; ++a)
    if (cfg.grid[a] < 1) fail("grid sizes must be >= 1");
  if (!(cfg.spacing > 0.0)) fail("spacing must be > 0");
  if (cfg.views < 1) fail("views must be >= 1");
  if (cfg.detectors < 1) fail("detectors must be >= 1");
  if (cfg.dim == 3 && cfg.det_rows < 1) fail("det_rows must be >= 1");
  if (!(cfg.batch_fraction > 0.0 && cfg.batch_fraction <= 1.0))
    fail("batch_fraction must lie in (0, 1]");
  if (cfg.iterations < 1) fail("iterations must be >= 1");
  if (cfg.log_every < 1) fail("log_every must be >= 1");
  if (cfg.view_subsets < 1 || cfg.view_subsets > cfg.views)
    fail("view_subsets must lie in [1, views]");
  if (cfg.sim_factor < 2 && cfg.measurements.empty())
    fail("sim_factor must be >= 2 to avoid simulating with the reconstruction model");
  if (cfg.lr < 0.0) fail("lr must be >= 0");
  if (cfg.value_scale < 0.0) fail("value_scale must be >= 0");
  if (cfg.noise_sigma < 0.0) fail("noise_sigma must be >= 0");
}

double effective_lr(const ReconConfig& cfg) {
  if (cfg.lr > 0.0) return cfg.lr;
  return cfg.model.arch == Arch::SIREN ? 1e-4 : 1e-3;
}

double data_value_scale(const Sinogram& measurements, const VoxelGrid& grid) {
  double peak = 0.0;
  for (double v : measurements.values) peak = std::max(peak, std::abs(v));
  const double diameter = 2.0 * std::min(grid.half_extent(0), grid.half_extent(1));
  const double s = peak / diameter;
  return s > 0.0 && std::isfinite(s) ? s : 1.0;
}

double effective_value_scale(const ReconConfig& cfg, const ExperimentData& data) {
  return cfg.value_scale > 0.0 ? cfg.value_scale
                               : data_value_scale(data.measurements, data.grid);
}

VoxelGrid make_grid(const ReconConfig& cfg) {
  if (cfg.dim == 2) return VoxelGrid::make2d(cfg.grid[0], cfg.grid[1], cfg.spacing, cfg.spacing);
  return VoxelGrid::make3d(cfg.grid[0], cfg.grid[1], cfg.grid[2], cfg.spacing, cfg.spacing,
                           cfg.spacing);
}

VoxelGrid make_sim_grid(const ReconConfig& cfg) {
  ReconConfig fine = cfg;
  for (int a = 0; a < cfg.dim; ++a) fine.grid[a] = cfg.grid[a] * cfg.sim_factor;
  fine.spacing = cfg.spacing / cfg.sim_factor;
  return make_grid(fine);
}

Geometry make_geometry(const ReconConfig& cfg) {
  std::vector<double> angles = equispaced_angles(cfg.views, cfg.arc_deg * std::numbers::pi / 180);
  if (cfg.dim == 2)
    return FanBeamGeometry{std::move(angles), cfg.source_to_iso, cfg.source_to_detector,
                           cfg.detectors, cfg.det_spacing};
  return ConeBeamGeometry{std::move(angles), cfg.source_to_iso, cfg.source_to_detector,
                          cfg.detectors,     cfg.det_spacing,   cfg.det_rows,
                          cfg.det_row_spacing};
}

EllipsePhantom make_phantom(const ReconConfig& cfg) {
  const VoxelGrid g = make_grid(cfg);
  const double fov_radius = std::min(g.half_extent(0), g.half_extent(1));
  const double scale = cfg.phantom_scale > 0.0 ? cfg.phantom_scale : 0.9 * fov_radius;
  if (cfg.phantom == "shepp_logan") return shepp_logan_2d(scale);
  if (cfg.phantom == "ellipsoid") return ellipsoid_phantom_3d(scale);
  return load_phantom(cfg.phantom);
}

ExperimentData prepare_experiment(const ReconConfig& cfg) {
  validate(cfg);
  const VoxelGrid grid = make_grid(cfg);
  FovMask mask = make_fov_mask(grid, cfg.inscribed_mask ? MaskShape::Inscribed : MaskShape::Full);
  if (!cfg.measurements.empty()) {
    Sinogram y = read_sinogram(cfg.measurements);
    std::optional<ImageVec> truth;
    if (!cfg.ground_truth.empty()) {
      truth = read_image(cfg.ground_truth);
      if (!(truth->grid == grid)) throw std::invalid_argument("ground truth grid mismatch");
    }
    Geometry geom = y.geometry;
    return ExperimentData{grid, std::move(geom), std::move(mask), std::move(y), std::move(truth)};
  }
  const Geometry geom = make_geometry(cfg);
  const EllipsePhantom phantom = make_phantom(cfg);
  if (phantom.ndim != cfg.dim) throw std::invalid_argument("phantom dimension does not match dim");
  const VoxelGrid fine = make_sim_grid(cfg);
  Rng noise_rng(cfg.seed ^ 0x6e6f697365ULL);
  Sinogram y = simulate_measurements(phantom, geom, fine, grid, cfg.noise_sigma, noise_rng,
                                     cfg.sim_supersample);
  ImageVec truth =
      downsample_average(rasterize(phantom, fine, cfg.sim_supersample), cfg.sim_factor);
  return ExperimentData{grid, geom, std::move(mask), std::move(y), std::move(truth)};
}

double image_mse(const ImageVec& recon, const ImageVec& truth, const FovMask& mask) {
  if (!(recon.grid == truth.grid) || !(recon.grid == mask.grid()))
    throw std::invalid_argument("image_mse: grid mismatch");
  if (recon.values.size() != recon.grid.size() || truth.values.size() != truth.grid.size())
    throw std::invalid_argument("image_mse: value count mismatch");
  if (mask.n() == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t v : mask.voxels()) {
    const double d = recon.values[v] - truth.values[v];
    acc += d * d;
  }
  return acc / static_cast<double>(mask.n());
}

std::string MetricsLog::to_csv() const {
  std::ostringstream out;
  out << "iteration,loss,image_mse,wall_time_s,memory_ratio\n";
  out.precision(10);
  for (const MetricsRow& r : rows)
    out << r.iteration << ',' << r.loss << ',' << r.image_mse << ',' << r.wall_time_s << ','
        << r.memory_ratio << '\n';
  return out.str();
}

std::string describe(const ReconConfig& c) {
  std::ostringstream o;
  o.precision(17);
  o << "dim = " << c.dim << '\n'
    << "grid = " << c.grid[0] << ' ' << c.grid[1] << ' ' << c.grid[2] << '\n'
    << "spacing = " << c.spacing << '\n'
    << "inscribed_mask = " << (c.inscribed_mask ? "true" : "false") << '\n'
    << "views = " << c.views << '\n'
    << "arc_deg = " << c.arc_deg << '\n'
    << "detectors = " << c.detectors << '\n'
    << "det_spacing = " << c.det_spacing << '\n'
    << "det_rows = " << c.det_rows << '\n'
    << "det_row_spacing = " << c.det_row_spacing << '\n'
    << "source_to_iso = " << c.source_to_iso << '\n'
    << "source_to_detector = " << c.source_to_detector << '\n'
    << "phantom = " << c.phantom << '\n'
    << "phantom_scale = " << c.phantom_scale << '\n'
    << "sim_factor = " << c.sim_factor << '\n'
    << "sim_supersample = " << c.sim_supersample << '\n'
    << "noise_sigma = " << c.noise_sigma << '\n'
    << "measurements = " << c.measurements << '\n'
    << "ground_truth = " << c.ground_truth << '\n'
    << "arch = " << to_string(c.model.arch) << '\n'
    << "hidden_width = " << c.model.hidden_width << '\n'
    << "hidden_layers = " << c.model.hidden_layers << '\n'
    << "fourier_features = " << c.model.fourier_features << '\n'
    << "fourier_scale = " << c.model.fourier_scale << '\n'
    << "first_omega = " << c.model.first_omega << '\n'
    << "hidden_omega = " << c.model.hidden_omega << '\n'
    << "hash_levels = " << c.model.hash_levels << '\n'
    << "hash_log2_table = " << c.model.hash_log2_table << '\n'
    << "hash_features = " << c.model.hash_features << '\n'
    << "hash_base_resolution = " << c.model.hash_base_resolution << '\n'
    << "hash_max_resolution = " << c.model.hash_max_resolution << '\n'
    << "loss = " << to_string(c.loss) << '\n'
    << "estimator = " << to_string(c.estimator) << '\n'
    << "batch_fraction = " << c.batch_fraction << '\n'
    << "view_subsets = " << c.view_subsets << '\n'
    << "iterations = " << c.iterations << '\n'
    << "value_scale = " << c.value_scale << '\n'
    << "lr = " << effective_lr(c) << '\n'
    << "beta1 = " << c.beta1 << '\n'
    << "beta2 = " << c.beta2 << '\n'
    << "adam_eps = " << c.adam_eps << '\n'
    << "seed = " << c.seed << '\n'
    << "log_every = " << c.log_every << '\n';
  return o.str();
}

TrainResult train_inr(const ReconConfig& cfg) { return train_inr(cfg, prepare_experiment(cfg)); }

namespace {

// Upper bound on memory spent caching the frozen FFN encodings.
constexpr std::size_t kEncodingCacheBytes = std::size_t{1} << 30;

}  // namespace

TrainResult train_inr(const ReconConfig& cfg, const ExperimentData& data) {
  validate(cfg);
  using clock = std::chrono::steady_clock;

  InrConfig mcfg = cfg.model;
  if (mcfg.arch == Arch::HashEnc && mcfg.hash_max_resolution <= 0) {
    int largest = 0;
    for (int a = 0; a < data.grid.ndim; ++a) largest = std::max(largest, data.grid.dims[a]);
    mcfg.hash_max_resolution = largest;
  }
  Rng init_rng(cfg.seed);
  Rng batch_rng(cfg.seed + 1);
  InrModel model = init_model(mcfg, data.grid.ndim, init_rng);

  LossKind loss = cfg.loss == LossKind::Tag::LS ? LossKind::ls() : LossKind::fls(data.geometry);
  const double scale = effective_value_scale(cfg, data);
  ReconProblem problem(data.mask, data.geometry, data.measurements.values, loss, scale);
  if (model.arch() == Arch::FFN &&
      std::size_t(model.encoded_dim()) * data.mask.n() * sizeof(double) <= kEncodingCacheBytes)
    problem.enable_encoding_cache(model);
  auto to_image = [&](const std::vector<double>& values) {
    ImageVec img{data.grid, problem.mask.scatter(values)};
    for (double& v : img.values) v *= scale;
    return img;
  };
  const std::size_t n = problem.mask.n();
  if (n == 0) throw std::invalid_argument("FOV mask is empty");
  const bool exact = cfg.estimator == Estimator::Exact;
  std::size_t batch = n;
  if (!exact) {
    const double want = std::round(cfg.batch_fraction * static_cast<double>(n));
    batch = std::clamp<std::size_t>(static_cast<std::size_t>(want), 1, n);
  }
  const double memory_ratio = memory_proxy(model, problem.mask, batch).ratio;

  // View subset k holds views k, k + S, k + 2S, ...
  std::vector<std::vector<int>> subsets(cfg.view_subsets);
  for (int v = 0; v < problem.layout.num_views; ++v) subsets[v % cfg.view_subsets].push_back(v);

  AdamState adam =
      make_adam(model.num_params(), effective_lr(cfg), cfg.beta1, cfg.beta2, cfg.adam_eps);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  TrainResult result;
  result.batch_size = batch;
  const auto start = clock::now();
  for (int it = 1; it <= cfg.iterations; ++it) {
    std::span<const int> views;
    if (cfg.view_subsets > 1) views = subsets[(it - 1) % cfg.view_subsets];
    const ResidualPass pass = residual_pass(model, problem, views);
    if (!std::isfinite(pass.loss))
      throw std::runtime_error("non-finite loss at iteration " + std::to_string(it) +
                               "; lower the learning rate or check the data scaling");

    if (it == 1 || it % cfg.log_every == 0 || it == cfg.iterations) {
      MetricsRow row;
      row.iteration = it;
      row.loss = pass.loss;
      row.image_mse = data.truth ? image_mse(to_image(pass.values), *data.truth, problem.mask)
                                 : nan;
      row.wall_time_s = std::chrono::duration<double>(clock::now() - start).count();
      row.memory_ratio = memory_ratio;
      result.log.rows.push_back(row);
    }

    std::vector<double> grad;
    if (exact)
      grad = exact_gradient_from_pass(model, problem, pass);
    else
      grad = estimate_from_pass(model, problem, pass, batch, batch_rng).grad;
    adam_step(adam, model.params(), grad);
  }

  result.image = to_image(eval(model, problem.coords));
  result.value_scale = scale;
  result.final_mse = data.truth ? image_mse(result.image, *data.truth, problem.mask) : nan;
  result.model = std::move(model);

  if (!cfg.output_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    std::ofstream(dir / "metrics.csv") << result.log.to_csv();
    std::ofstream(dir / "config_used.txt") << describe(cfg);
    auto num = [](double v) {
      std::ostringstream o;
      o.precision(17);
      o << v;
      return o.str();
    };
    Header run{{"lr", num(adam.lr)},
               {"beta1", num(adam.beta1)},
               {"beta2", num(adam.beta2)},
               {"adam_eps", num(adam.eps)},
               {"estimator", to_string(cfg.estimator)},
               {"batch_size", std::to_string(batch)},
               {"iterations", std::to_string(cfg.iterations)},
               {"seed", std::to_string(cfg.seed)},
               {"value_scale", num(scale)}};
    write_image((dir / "recon.raw").string(), result.image, run);
    save_checkpoint((dir / "model.theta").string(), result.model, {{"value_scale", num(scale)}});
    if (data.truth) write_image((dir / "truth.raw").string(), *data.truth);
  }
  return result;
}

}  // namespace inrct
