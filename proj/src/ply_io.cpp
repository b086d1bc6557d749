#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "reghec/cloud.hpp"
#include "reghec/errors.hpp"

namespace reghec::cloud {

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

bool is_real_type(const std::string& t) {
  return t == "float" || t == "double" || t == "float32" || t == "float64";
}

double parse_real(const std::string& tok, const std::string& path, long line) {
  const char* c = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(c, &end);
  if (end != c + tok.size())
    throw ParseError(path, line, "expected a number, got '" + tok + "'");
  if (!std::isfinite(v))
    throw ParseError(path, line, "non-finite coordinate '" + tok + "'");
  return v;
}

struct Element {
  std::string name;
  long count = 0;
  std::vector<std::string> prop_names;
  std::vector<std::string> prop_types;  // "list" for list properties
};

}  // namespace

PointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");

  long line_no = 0;
  std::string line;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || line != "ply") throw ParseError(path, line_no ? line_no : 1, "not an ascii PLY file (missing 'ply')");
  if (!next_line() || line != "format ascii 1.0")
    throw ParseError(path, line_no ? line_no : 2, "unsupported format, expected 'format ascii 1.0'");

  std::vector<Element> elements;
  bool header_done = false;
  while (!header_done) {
    if (!next_line()) throw ParseError(path, line_no + 1, "unexpected end of file in header");
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") {
      header_done = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError(path, line_no, "malformed element line");
      char* end = nullptr;
      const long n = std::strtol(tok[2].c_str(), &end, 10);
      if (end != tok[2].c_str() + tok[2].size() || n < 0)
        throw ParseError(path, line_no, "bad element count '" + tok[2] + "'");
      elements.push_back({tok[1], n, {}, {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError(path, line_no, "property before any element");
      if (tok.size() >= 2 && tok[1] == "list") {
        if (tok.size() != 5) throw ParseError(path, line_no, "malformed list property");
        elements.back().prop_names.push_back(tok[4]);
        elements.back().prop_types.push_back("list");
      } else {
        if (tok.size() != 3) throw ParseError(path, line_no, "malformed property line");
        elements.back().prop_names.push_back(tok[2]);
        elements.back().prop_types.push_back(tok[1]);
        if ((tok[2] == "x" || tok[2] == "y" || tok[2] == "z") &&
            elements.back().name == "vertex" && !is_real_type(tok[1]))
          throw ParseError(path, line_no,
                           "coordinate property '" + tok[2] + "' must be float or double");
      }
    } else {
      throw ParseError(path, line_no, "unrecognized header line '" + tok[0] + "'");
    }
  }

  const Element* vertex = nullptr;
  for (const auto& e : elements)
    if (e.name == "vertex") vertex = &e;
  if (!vertex) throw ParseError(path, line_no, "no vertex element declared");

  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < vertex->prop_names.size(); ++i) {
    if (vertex->prop_names[i] == "x") ix = static_cast<int>(i);
    if (vertex->prop_names[i] == "y") iy = static_cast<int>(i);
    if (vertex->prop_names[i] == "z") iz = static_cast<int>(i);
    if (vertex->prop_types[i] == "list")
      throw ParseError(path, line_no, "list property in vertex element is not supported");
  }
  if (ix < 0 || iy < 0 || iz < 0)
    throw ParseError(path, line_no, "vertex element lacks x, y, z properties");

  PointCloud out;
  for (const auto& elem : elements) {
    if (&elem == vertex) {
      out.points.reserve(static_cast<std::size_t>(elem.count));
      for (long i = 0; i < elem.count; ++i) {
        if (!next_line()) throw ParseError(path, line_no + 1, "unexpected end of file in vertex data");
        const auto tok = split_ws(line);
        if (tok.size() != elem.prop_names.size())
          throw ParseError(path, line_no,
                           "expected " + std::to_string(elem.prop_names.size()) +
                               " values, got " + std::to_string(tok.size()));
        out.points.emplace_back(parse_real(tok[ix], path, line_no),
                                parse_real(tok[iy], path, line_no),
                                parse_real(tok[iz], path, line_no));
      }
    } else {
      for (long i = 0; i < elem.count; ++i)
        if (!next_line())
          throw ParseError(path, line_no + 1, "unexpected end of file in element data");
    }
  }
  return out;
}

void save_cloud(const PointCloud& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_cloud: cannot open '" + path + "' for writing");
  out << "ply\nformat ascii 1.0\nelement vertex " << c.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  char buf[128];
  for (const auto& p : c.points) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  out.flush();
  if (!out) throw std::runtime_error("save_cloud: write to '" + path + "' failed");
}

}  // namespace reghec::cloud
