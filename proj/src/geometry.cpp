#include "inrct/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace inrct {

std::vector<double> equispaced_angles(int num_views, double arc) {
  if (num_views < 1) throw std::invalid_argument("num_views must be >= 1");
  std::vector<double> angles(num_views);
  for (int i = 0; i < num_views; ++i) angles[i] = arc * i / num_views;
  return angles;
}

namespace {

void check_common(const std::vector<double>& angles, double r, double d, int num_det,
                  double du) {
  if (angles.empty()) throw std::invalid_argument("geometry has no views");
  if (!(r > 0.0) || !(d > r))
    throw std::invalid_argument("need source_to_detector > source_to_iso > 0");
  if (num_det < 1) throw std::invalid_argument("num_det must be >= 1");
  if (!(du > 0.0)) throw std::invalid_argument("det_spacing must be > 0");
  for (std::size_t i = 1; i < angles.size(); ++i)
    if (!(angles[i] > angles[i - 1])) throw std::invalid_argument("angles must ascend");
}

}  // namespace

ScanLayout scan_layout(const Geometry& geom) {
  ScanLayout s;
  if (const auto* fan = std::get_if<FanBeamGeometry>(&geom)) {
    check_common(fan->angles, fan->source_to_iso, fan->source_to_detector, fan->num_det,
                 fan->det_spacing);
    s.ndim = 2;
    s.num_views = static_cast<int>(fan->angles.size());
    s.num_rows = 1;
    s.num_det = fan->num_det;
    s.source_to_iso = fan->source_to_iso;
    s.source_to_detector = fan->source_to_detector;
    s.det_spacing = fan->det_spacing;
    s.row_spacing = 1.0;
    s.angles = fan->angles;
  } else {
    const auto& cone = std::get<ConeBeamGeometry>(geom);
    check_common(cone.angles, cone.source_to_iso, cone.source_to_detector, cone.num_det,
                 cone.det_spacing);
    if (cone.num_det_rows < 1) throw std::invalid_argument("num_det_rows must be >= 1");
    if (!(cone.det_row_spacing > 0.0)) throw std::invalid_argument("det_row_spacing must be > 0");
    s.ndim = 3;
    s.num_views = static_cast<int>(cone.angles.size());
    s.num_rows = cone.num_det_rows;
    s.num_det = cone.num_det;
    s.source_to_iso = cone.source_to_iso;
    s.source_to_detector = cone.source_to_detector;
    s.det_spacing = cone.det_spacing;
    s.row_spacing = cone.det_row_spacing;
    s.angles = cone.angles;
  }
  return s;
}

std::size_t num_rays(const Geometry& geom) { return scan_layout(geom).num_rays(); }

bool same_geometry(const Geometry& a, const Geometry& b) {
  if (a.index() != b.index()) return false;
  if (const auto* fa = std::get_if<FanBeamGeometry>(&a)) {
    const auto& fb = std::get<FanBeamGeometry>(b);
    return fa->angles == fb.angles && fa->source_to_iso == fb.source_to_iso &&
           fa->source_to_detector == fb.source_to_detector && fa->num_det == fb.num_det &&
           fa->det_spacing == fb.det_spacing;
  }
  const auto& ca = std::get<ConeBeamGeometry>(a);
  const auto& cb = std::get<ConeBeamGeometry>(b);
  return ca.angles == cb.angles && ca.source_to_iso == cb.source_to_iso &&
         ca.source_to_detector == cb.source_to_detector && ca.num_det == cb.num_det &&
         ca.det_spacing == cb.det_spacing && ca.num_det_rows == cb.num_det_rows &&
         ca.det_row_spacing == cb.det_row_spacing;
}

}  // namespace inrct
