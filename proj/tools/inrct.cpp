// inrct: command-line front end for simulation, analytic and iterative
// baselines, INR training and gradient diagnostics.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "inrct/optim.hpp"
#include "inrct/projector.hpp"
#include "inrct/raw_io.hpp"
#include "inrct/train.hpp"

using namespace inrct;

namespace {

// Turns `key = value` lines into `--key value...` tokens. Values are split on
// whitespace so list options such as `grid = 128 128` work; empty values are
// skipped.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::vector<std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::istringstream key(line.substr(0, eq)), value(line.substr(eq + 1));
    std::string k, tok;
    key >> k;
    std::vector<std::string> vals;
    while (value >> tok) vals.push_back(tok);
    if (vals.empty()) continue;
    out.push_back("--" + k);
    out.insert(out.end(), vals.begin(), vals.end());
  }
  return out;
}

// Splices config-file tokens in front of the subcommand's own arguments so
// that explicit flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    std::size_t erase = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      erase = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      erase = 1;
    } else {
      continue;
    }
    args.erase(args.begin() + i, args.begin() + i + erase);
    const std::vector<std::string> toks = config_tokens(path);
    // Insert right after the subcommand name.
    std::size_t at = 1;
    while (at < args.size() && args[at].rfind("-", 0) == 0) ++at;
    at = std::min(at + 1, args.size());
    args.insert(args.begin() + at, toks.begin(), toks.end());
    break;
  }
  return args;
}

struct ModelFlags {
  std::string arch = "ffn";
  CLI::Option* width = nullptr;
  CLI::Option* layers = nullptr;
  CLI::Option* hash_max = nullptr;
  InrConfig given;
};

struct Options {
  ReconConfig cfg;
  std::vector<int> grid{128, 128};
  bool inscribed = true;
  std::string loss = "fls";
  std::string estimator = "stochastic";
  ModelFlags model;
};

void add_scan_options(CLI::App* app, Options& o) {
  ReconConfig& c = o.cfg;
  app->add_option("--config", "key = value file; explicit flags override it");
  app->add_option("--dim", c.dim, "2 (fan beam) or 3 (cone beam)")->capture_default_str();
  app->add_option("--grid", o.grid, "grid size per axis (one value = cubic)")
      ->expected(1, 3)
      ->delimiter(',');
  app->add_option("--spacing", c.spacing, "voxel spacing in mm")->capture_default_str();
  app->add_option("--inscribed_mask", o.inscribed, "restrict to the inscribed circle/cylinder")
      ->capture_default_str();
  app->add_option("--views", c.views)->capture_default_str();
  app->add_option("--arc_deg", c.arc_deg, "angular range of the scan")->capture_default_str();
  app->add_option("--detectors", c.detectors)->capture_default_str();
  app->add_option("--det_spacing", c.det_spacing, "mm at the detector")->capture_default_str();
  app->add_option("--det_rows", c.det_rows)->capture_default_str();
  app->add_option("--det_row_spacing", c.det_row_spacing)->capture_default_str();
  app->add_option("--source_to_iso", c.source_to_iso)->capture_default_str();
  app->add_option("--source_to_detector", c.source_to_detector)->capture_default_str();
  app->add_option("--phantom", c.phantom, "shepp_logan, ellipsoid or a phantom file")
      ->capture_default_str();
  app->add_option("--phantom_scale", c.phantom_scale, "mm; 0 = 90% of the FOV radius");
  app->add_option("--sim_factor", c.sim_factor, "simulation grid refinement")
      ->capture_default_str();
  app->add_option("--sim_supersample", c.sim_supersample)->capture_default_str();
  app->add_option("--noise_sigma", c.noise_sigma)->capture_default_str();
  app->add_option("--measurements", c.measurements, "raw sinogram to use instead of simulating");
  app->add_option("--ground_truth", c.ground_truth, "raw reference image for MSE");
  app->add_option("--seed", c.seed)->capture_default_str();
}

void add_train_options(CLI::App* app, Options& o) {
  ReconConfig& c = o.cfg;
  InrConfig& m = o.model.given;
  m = default_config(Arch::FFN);
  app->add_option("--arch", o.model.arch, "ffn, siren or hash")->capture_default_str();
  o.model.width = app->add_option("--hidden_width", m.hidden_width);
  o.model.layers = app->add_option("--hidden_layers", m.hidden_layers);
  app->add_option("--fourier_features", m.fourier_features)->capture_default_str();
  app->add_option("--fourier_scale", m.fourier_scale)->capture_default_str();
  app->add_option("--first_omega", m.first_omega)->capture_default_str();
  app->add_option("--hidden_omega", m.hidden_omega)->capture_default_str();
  app->add_option("--hash_levels", m.hash_levels)->capture_default_str();
  app->add_option("--hash_log2_table", m.hash_log2_table)->capture_default_str();
  app->add_option("--hash_features", m.hash_features)->capture_default_str();
  app->add_option("--hash_base_resolution", m.hash_base_resolution)->capture_default_str();
  o.model.hash_max = app->add_option("--hash_max_resolution", m.hash_max_resolution,
                                     "default: largest grid dimension");
  app->add_option("--loss", o.loss, "ls or fls")->capture_default_str();
  app->add_option("--estimator", o.estimator, "stochastic or exact")->capture_default_str();
  app->add_option("--batch_fraction", c.batch_fraction)->capture_default_str();
  app->add_option("--view_subsets", c.view_subsets, "> 1 cycles through view subsets")
      ->capture_default_str();
  app->add_option("--iterations", c.iterations)->capture_default_str();
  app->add_option("--value_scale", c.value_scale, "mm^-1 per unit network output; 0 = from data");
  app->add_option("--lr", c.lr, "0 = 1e-3 (FFN, hash) or 1e-4 (SIREN)");
  app->add_option("--beta1", c.beta1)->capture_default_str();
  app->add_option("--beta2", c.beta2)->capture_default_str();
  app->add_option("--adam_eps", c.adam_eps)->capture_default_str();
  app->add_option("--log_every", c.log_every)->capture_default_str();
}

void finalize(Options& o) {
  ReconConfig& c = o.cfg;
  const int n = static_cast<int>(o.grid.size());
  for (int a = 0; a < 3; ++a) c.grid[a] = o.grid[std::min(a, n - 1)];
  c.inscribed_mask = o.inscribed;
  c.loss = parse_loss(o.loss);
  c.estimator = parse_estimator(o.estimator);

  const Arch arch = parse_arch(o.model.arch);
  InrConfig m = o.model.given;
  const InrConfig defaults = default_config(arch);
  m.arch = arch;
  if (o.model.width && o.model.width->count() == 0) m.hidden_width = defaults.hidden_width;
  if (o.model.layers && o.model.layers->count() == 0) m.hidden_layers = defaults.hidden_layers;
  if (o.model.hash_max && o.model.hash_max->count() == 0) m.hash_max_resolution = 0;
  c.model = m;
  validate(c);
}

void print_mse(const char* label, const ImageVec& img, const ExperimentData& data) {
  if (!data.truth) return;
  std::printf("%s image MSE: %.6e\n", label, image_mse(img, *data.truth, data.mask));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Implicit neural representation CT reconstruction"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Options opt;
  std::string out;
  int supersample = 4;
  int cgls_iterations = 50;

  auto* phantom = app.add_subcommand("phantom", "rasterize a phantom onto the grid");
  add_scan_options(phantom, opt);
  phantom->add_option("--supersample", supersample, "samples per voxel axis")
      ->capture_default_str();
  phantom->add_option("-o,--out", out, "output raw image")->required();

  std::string truth_out;
  auto* simulate = app.add_subcommand("simulate", "simulate a sinogram on a fine grid");
  add_scan_options(simulate, opt);
  simulate->add_option("-o,--out", out, "output raw sinogram")->required();
  simulate->add_option("--truth_out", truth_out, "also write the reference image");

  auto* fbp = app.add_subcommand("fbp", "fan-beam FBP / FDK reconstruction");
  add_scan_options(fbp, opt);
  fbp->add_option("-o,--out", out, "output raw image")->required();

  auto* cg = app.add_subcommand("cgls", "CGLS least-squares reconstruction");
  add_scan_options(cg, opt);
  cg->add_option("--cgls_iterations", cgls_iterations)->capture_default_str();
  cg->add_option("-o,--out", out, "output raw image")->required();

  auto* recon = app.add_subcommand("recon", "train an INR on the measurements");
  add_scan_options(recon, opt);
  add_train_options(recon, opt);
  recon->add_option("--output_dir", opt.cfg.output_dir, "run directory")->required();

  GradcheckOptions gc;
  auto* grad = app.add_subcommand("gradcheck", "run projector and gradient self-checks");
  grad->add_option("--seed", gc.seed)->capture_default_str();
  grad->add_option("--draws", gc.draws, "Monte Carlo draws for the unbiasedness check")
      ->capture_default_str();

  const std::vector<std::string> args = expand_config(argc, argv);
  std::vector<const char*> cargs;
  for (const std::string& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), const_cast<char**>(cargs.data()));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (grad->parsed()) return run_gradcheck(gc) ? 0 : 1;
    finalize(opt);
    const ReconConfig& c = opt.cfg;

    if (phantom->parsed()) {
      const ImageVec img = rasterize(make_phantom(c), make_grid(c), supersample);
      write_image(out, img);
      std::printf("wrote %s\n", out.c_str());
      return 0;
    }

    const ExperimentData data = prepare_experiment(c);
    if (simulate->parsed()) {
      write_sinogram(out, data.measurements);
      if (!truth_out.empty() && data.truth) write_image(truth_out, *data.truth);
      std::printf("wrote %s (%zu rays)\n", out.c_str(), data.measurements.values.size());
      return 0;
    }
    if (fbp->parsed()) {
      ImageVec img = fbp_reconstruct(data.measurements, data.grid);
      write_image(out, img);
      print_mse("FBP", img, data);
      return 0;
    }
    if (cg->parsed()) {
      const CglsResult r =
          cgls(data.geometry, data.grid, data.measurements.values, cgls_iterations);
      write_image(out, r.image);
      std::printf("residual %.6e -> %.6e after %zu iterations\n", r.residual_norms.front(),
                  r.residual_norms.back(), r.residual_norms.size() - 1);
      print_mse("CGLS", r.image, data);
      return 0;
    }
    if (recon->parsed()) {
      std::printf("%s", describe(c).c_str());
      const TrainResult r = train_inr(c, data);
      const MetricsRow& last = r.log.rows.back();
      std::printf("batch %zu of %zu coordinates, memory ratio %.4g\n", r.batch_size,
                  data.mask.n(), last.memory_ratio);
      std::printf("final loss %.6e, image MSE %.6e, %.1f s\n", last.loss, r.final_mse,
                  last.wall_time_s);
      if (data.truth) {
        const ImageVec f = fbp_reconstruct(data.measurements, data.grid);
        print_mse("FBP baseline", f, data);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
