#include "inrct/raw_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace inrct {

namespace {

static_assert(sizeof(float) == 4 && sizeof(double) == 8);

template <class U>
U to_little(U bits) {
  if constexpr (std::endian::native == std::endian::big) {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out = (out << 8) | (bits & 0xff);
      bits >>= 8;
    }
    return out;
  }
  return bits;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::string join(std::span<const double> v, std::string (*fmt)(double)) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += fmt(v[i]);
  }
  return out;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw std::runtime_error("bad number '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

const std::string& need(const Header& h, const std::string& key) {
  auto it = h.find(key);
  if (it == h.end()) throw std::runtime_error("header is missing key '" + key + "'");
  return it->second;
}

int need_int(const Header& h, const std::string& key) { return std::stoi(need(h, key)); }
double need_double(const Header& h, const std::string& key) { return std::stod(need(h, key)); }

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  return f;
}

void check_size(std::ifstream& f, const std::string& path, std::size_t bytes) {
  f.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(f.tellg());
  f.seekg(0);
  if (size != bytes)
    throw std::runtime_error(path + ": expected " + std::to_string(bytes) + " bytes, found " +
                             std::to_string(size));
}

}  // namespace

std::string header_path(const std::string& raw_path) { return raw_path + ".hdr"; }

Header read_header(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open header " + path);
  Header h;
  std::string line;
  while (std::getline(f, line)) {
    if (auto c = line.find('#'); c != std::string::npos) line.resize(c);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    h[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return h;
}

void write_header(const std::string& path, const Header& header) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write header " + path);
  for (const auto& [k, v] : header) f << k << " = " << v << '\n';
}

void write_raw_f32(const std::string& path, std::span<const double> values) {
  std::ofstream f = open_out(path);
  for (double v : values) {
    const auto bits = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    f.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
}

std::vector<double> read_raw_f32(const std::string& path, std::size_t count) {
  std::ifstream f = open_in(path);
  check_size(f, path, count * 4);
  std::vector<double> out(count);
  for (double& v : out) {
    std::uint32_t bits = 0;
    f.read(reinterpret_cast<char*>(&bits), sizeof bits);
    v = std::bit_cast<float>(to_little(bits));
  }
  return out;
}

void write_raw_f64(const std::string& path, std::span<const double> values) {
  std::ofstream f = open_out(path);
  for (double v : values) {
    const auto bits = to_little(std::bit_cast<std::uint64_t>(v));
    f.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
}

std::vector<double> read_raw_f64(const std::string& path, std::size_t count) {
  std::ifstream f = open_in(path);
  check_size(f, path, count * 8);
  std::vector<double> out(count);
  for (double& v : out) {
    std::uint64_t bits = 0;
    f.read(reinterpret_cast<char*>(&bits), sizeof bits);
    v = std::bit_cast<double>(to_little(bits));
  }
  return out;
}

void write_image(const std::string& path, const ImageVec& image, const Header& extra) {
  if (image.values.size() != image.grid.size())
    throw std::invalid_argument("image values do not match grid size");
  Header h = extra;
  h["kind"] = "image";
  h["dtype"] = "float32";
  h["byte_order"] = "little";
  h["ndim"] = std::to_string(image.grid.ndim);
  std::string dims, spacing;
  for (int a = 0; a < image.grid.ndim; ++a) {
    dims += (a ? " " : "") + std::to_string(image.grid.dims[a]);
    spacing += (a ? " " : "") + fmt_double(image.grid.spacing[a]);
  }
  h["dims"] = dims;
  h["spacing"] = spacing;
  write_raw_f32(path, image.values);
  write_header(header_path(path), h);
}

ImageVec read_image(const std::string& path) {
  const Header h = read_header(header_path(path));
  if (need(h, "kind") != "image") throw std::runtime_error(path + " is not an image");
  const int ndim = need_int(h, "ndim");
  const std::vector<double> dims = split_doubles(need(h, "dims"));
  const std::vector<double> spacing = split_doubles(need(h, "spacing"));
  if ((ndim != 2 && ndim != 3) || dims.size() != std::size_t(ndim) ||
      spacing.size() != std::size_t(ndim))
    throw std::runtime_error(path + ": inconsistent image header");
  const VoxelGrid g =
      ndim == 2 ? VoxelGrid::make2d(int(dims[0]), int(dims[1]), spacing[0], spacing[1])
                : VoxelGrid::make3d(int(dims[0]), int(dims[1]), int(dims[2]), spacing[0],
                                    spacing[1], spacing[2]);
  return ImageVec{g, read_raw_f32(path, g.size())};
}

Header geometry_header(const Geometry& geometry) {
  const ScanLayout lay = scan_layout(geometry);
  Header h;
  h["geometry"] = lay.ndim == 2 ? "fan" : "cone";
  h["num_views"] = std::to_string(lay.num_views);
  h["num_det"] = std::to_string(lay.num_det);
  h["det_spacing"] = fmt_double(lay.det_spacing);
  h["source_to_iso"] = fmt_double(lay.source_to_iso);
  h["source_to_detector"] = fmt_double(lay.source_to_detector);
  h["angles"] = join(lay.angles, fmt_double);
  if (lay.ndim == 3) {
    h["num_det_rows"] = std::to_string(lay.num_rows);
    h["det_row_spacing"] = fmt_double(lay.row_spacing);
  }
  return h;
}

Geometry geometry_from_header(const Header& h) {
  const std::string kind = need(h, "geometry");
  std::vector<double> angles = split_doubles(need(h, "angles"));
  if (angles.size() != std::size_t(need_int(h, "num_views")))
    throw std::runtime_error("header angle count does not match num_views");
  if (kind == "fan") {
    return FanBeamGeometry{std::move(angles), need_double(h, "source_to_iso"),
                           need_double(h, "source_to_detector"), need_int(h, "num_det"),
                           need_double(h, "det_spacing")};
  }
  if (kind == "cone") {
    return ConeBeamGeometry{std::move(angles),
                            need_double(h, "source_to_iso"),
                            need_double(h, "source_to_detector"),
                            need_int(h, "num_det"),
                            need_double(h, "det_spacing"),
                            need_int(h, "num_det_rows"),
                            need_double(h, "det_row_spacing")};
  }
  throw std::runtime_error("unknown geometry '" + kind + "'");
}

void write_sinogram(const std::string& path, const Sinogram& sino) {
  const ScanLayout lay = scan_layout(sino.geometry);
  if (sino.values.size() != lay.num_rays())
    throw std::invalid_argument("sinogram values do not match geometry");
  Header h = geometry_header(sino.geometry);
  h["kind"] = "sinogram";
  h["dtype"] = "float32";
  h["byte_order"] = "little";
  h["dims"] = lay.ndim == 2 ? std::to_string(lay.num_det) + " " + std::to_string(lay.num_views)
                            : std::to_string(lay.num_det) + " " + std::to_string(lay.num_rows) +
                                  " " + std::to_string(lay.num_views);
  write_raw_f32(path, sino.values);
  write_header(header_path(path), h);
}

Sinogram read_sinogram(const std::string& path) {
  const Header h = read_header(header_path(path));
  if (need(h, "kind") != "sinogram") throw std::runtime_error(path + " is not a sinogram");
  Geometry g = geometry_from_header(h);
  const std::size_t m = num_rays(g);
  return Sinogram{std::move(g), read_raw_f32(path, m)};
}

void save_checkpoint(const std::string& path, const InrModel& model, const Header& extra) {
  const InrConfig& c = model.config();
  Header h = extra;
  h["kind"] = "inr_checkpoint";
  h["dtype"] = "float64";
  h["byte_order"] = "little";
  h["num_params"] = std::to_string(model.num_params());
  h["arch"] = to_string(c.arch);
  h["input_dim"] = std::to_string(model.input_dim());
  h["hidden_width"] = std::to_string(c.hidden_width);
  h["hidden_layers"] = std::to_string(c.hidden_layers);
  h["fourier_features"] = std::to_string(c.fourier_features);
  h["fourier_scale"] = hex_double(c.fourier_scale);
  h["first_omega"] = hex_double(c.first_omega);
  h["hidden_omega"] = hex_double(c.hidden_omega);
  h["hash_levels"] = std::to_string(c.hash_levels);
  h["hash_log2_table"] = std::to_string(c.hash_log2_table);
  h["hash_features"] = std::to_string(c.hash_features);
  h["hash_base_resolution"] = std::to_string(c.hash_base_resolution);
  h["hash_max_resolution"] = std::to_string(c.hash_max_resolution);
  h["fourier_matrix"] = join(model.fourier_matrix(), hex_double);
  std::string layout;
  for (const ParamBlock& b : model.layout())
    layout += (layout.empty() ? "" : " ") + b.name + ":" + std::to_string(b.offset) + ":" +
              std::to_string(b.size);
  h["layout"] = layout;
  write_raw_f64(path, model.params());
  write_header(header_path(path), h);
}

InrModel load_checkpoint(const std::string& path) {
  const Header h = read_header(header_path(path));
  if (need(h, "kind") != "inr_checkpoint") throw std::runtime_error(path + " is not a checkpoint");
  InrConfig c;
  c.arch = parse_arch(need(h, "arch"));
  c.hidden_width = need_int(h, "hidden_width");
  c.hidden_layers = need_int(h, "hidden_layers");
  c.fourier_features = need_int(h, "fourier_features");
  c.fourier_scale = std::strtod(need(h, "fourier_scale").c_str(), nullptr);
  c.first_omega = std::strtod(need(h, "first_omega").c_str(), nullptr);
  c.hidden_omega = std::strtod(need(h, "hidden_omega").c_str(), nullptr);
  c.hash_levels = need_int(h, "hash_levels");
  c.hash_log2_table = need_int(h, "hash_log2_table");
  c.hash_features = need_int(h, "hash_features");
  c.hash_base_resolution = need_int(h, "hash_base_resolution");
  c.hash_max_resolution = need_int(h, "hash_max_resolution");
  const int d = need_int(h, "input_dim");
  const std::size_t p = std::stoull(need(h, "num_params"));
  auto it = h.find("fourier_matrix");
  std::vector<double> fourier = it == h.end() ? std::vector<double>{} : split_doubles(it->second);
  return assemble_model(c, d, read_raw_f64(path, p), std::move(fourier));
}

}  // namespace inrct
