#pragma once

#include <string>
#include <vector>

#include "reghec/geom.hpp"

namespace reghec::pose_io {

// CSV, one pose per line: the 3x4 matrix [R | t] flattened row-major into
// 12 comma-separated fields (r11,r12,r13,tx, r21,...,ty, r31,...,tz),
// translation in meters, written with 12 decimals. Blank lines and lines
// starting with '#' are skipped on load. Parse failures carry the path and
// 1-based line number; rotation blocks must be orthonormal within 1e-9.
std::vector<geom::RigidTransform> load_poses(const std::string& path);

void save_poses(const std::vector<geom::RigidTransform>& poses,
                const std::string& path);

}  // namespace reghec::pose_io
