#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "inrct/geometry.hpp"
#include "inrct/inr.hpp"

namespace inrct {

// On-disk layout: `<path>` holds raw little-endian floats, `<path>.hdr` is a
// `key = value` text sidecar. Images and sinograms are float32, row-major
// with x (images) or the detector column (sinograms) fastest. Checkpoints
// store float64 so parameters round-trip bit-exactly.

using Header = std::map<std::string, std::string>;

std::string header_path(const std::string& raw_path);
Header read_header(const std::string& path);
void write_header(const std::string& path, const Header& header);

void write_raw_f32(const std::string& path, std::span<const double> values);
std::vector<double> read_raw_f32(const std::string& path, std::size_t count);
void write_raw_f64(const std::string& path, std::span<const double> values);
std::vector<double> read_raw_f64(const std::string& path, std::size_t count);

/// `extra` entries are appended to the sidecar (e.g. run settings).
void write_image(const std::string& path, const ImageVec& image, const Header& extra = {});
ImageVec read_image(const std::string& path);

void write_sinogram(const std::string& path, const Sinogram& sino);
Sinogram read_sinogram(const std::string& path);

Header geometry_header(const Geometry& geometry);
Geometry geometry_from_header(const Header& header);

void save_checkpoint(const std::string& path, const InrModel& model, const Header& extra = {});
InrModel load_checkpoint(const std::string& path);

}  // namespace inrct
