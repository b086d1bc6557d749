#include "reghec/pose_io.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "reghec/errors.hpp"

namespace reghec::pose_io {

namespace {

// 12 comma-separated doubles; rejects trailing garbage and short lines.
std::array<double, 12> parse_fields(const std::string& line,
                                    const std::string& path, int line_no) {
  std::array<double, 12> out{};
  const char* cursor = line.c_str();
  for (int i = 0; i < 12; ++i) {
    while (*cursor == ' ' || *cursor == '\t') ++cursor;
    char* end = nullptr;
    out[i] = std::strtod(cursor, &end);
    if (end == cursor)
      throw ParseError(path, line_no,
                       "expected 12 numeric fields, failed at field " +
                           std::to_string(i + 1));
    cursor = end;
    while (*cursor == ' ' || *cursor == '\t') ++cursor;
    if (i < 11) {
      if (*cursor != ',')
        throw ParseError(path, line_no,
                         "expected ',' after field " + std::to_string(i + 1));
      ++cursor;
    }
  }
  if (*cursor != '\0' && *cursor != '\r')
    throw ParseError(path, line_no, "trailing characters after 12 fields");
  return out;
}

}  // namespace

std::vector<geom::RigidTransform> load_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::vector<geom::RigidTransform> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto f = parse_fields(line, path, line_no);
    Eigen::Matrix3d m;
    m << f[0], f[1], f[2], f[4], f[5], f[6], f[8], f[9], f[10];
    geom::RigidTransform pose;
    try {
      pose.r = geom::RotationMatrix(m);
    } catch (const std::invalid_argument& e) {
      throw ParseError(path, line_no, e.what());
    }
    pose.t = Eigen::Vector3d(f[3], f[7], f[11]);
    poses.push_back(pose);
  }
  return poses;
}

void save_poses(const std::vector<geom::RigidTransform>& poses,
                const std::string& path) {
  std::ostringstream out;
  char buf[32];
  for (const auto& pose : poses) {
    const Eigen::Matrix3d& r = pose.r.matrix();
    const double f[12] = {r(0, 0), r(0, 1), r(0, 2), pose.t(0),
                          r(1, 0), r(1, 1), r(1, 2), pose.t(1),
                          r(2, 0), r(2, 1), r(2, 2), pose.t(2)};
    for (int i = 0; i < 12; ++i) {
      std::snprintf(buf, sizeof buf, "%.12f", f[i]);
      out << buf << (i < 11 ? "," : "\n");
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("save_poses: cannot open " + path);
  file << out.str();
  if (!file) throw std::runtime_error("save_poses: write failed for " + path);
}

}  // namespace reghec::pose_io
