#pragma once

#include <vector>

#include "sxt/grid.hpp"

namespace sxt {

// Distance from point p to the segment [a, b].
double point_segment_distance(Vec3 p, Vec3 a, Vec3 b);

// Binary volume: voxel = 1 iff its center lies within line.radius of the polyline.
ScalarVolume rasterize_polyline(const Polyline3& line, int nx, int ny, int nz);

// Union of several polylines into one binary volume.
ScalarVolume rasterize_polylines(const std::vector<Polyline3>& lines, int nx, int ny, int nz);

}  // namespace sxt
