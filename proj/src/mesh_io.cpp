#include "dex/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "dex/error.hpp"

namespace dex {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open mesh file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Welder {
  std::map<std::array<double, 3>, int> index;
  std::vector<Vec3> vertices;

  int add(const Vec3& p) {
    const std::array<double, 3> key{p.x(), p.y(), p.z()};
    auto [it, inserted] = index.emplace(key, static_cast<int>(vertices.size()));
    if (inserted) vertices.push_back(p);
    return it->second;
  }
};

TriMesh parse_obj(const std::string& text, double scale, const std::string& name) {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) {
        throw Error(ErrorCode::FormatError, name + ":" + std::to_string(line_no) + ": malformed vertex");
      }
      vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string token;
      while (ls >> token) {
        // v, v/vt, v//vn, v/vt/vn
        const int idx = std::stoi(token.substr(0, token.find('/')));
        poly.push_back(idx < 0 ? static_cast<int>(vertices.size()) + idx : idx - 1);
      }
      if (poly.size() < 3) {
        throw Error(ErrorCode::FormatError, name + ":" + std::to_string(line_no) + ": face with fewer than 3 vertices");
      }
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) triangles.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  return TriMesh(std::move(vertices), std::move(triangles), scale);
}

bool looks_binary_stl(const std::string& data) {
  if (data.size() < 84) return false;
  std::uint32_t count = 0;
  std::memcpy(&count, data.data() + 80, 4);
  return data.size() == 84 + static_cast<std::size_t>(count) * 50;
}

TriMesh parse_binary_stl(const std::string& data, double scale) {
  std::uint32_t count = 0;
  std::memcpy(&count, data.data() + 80, 4);
  Welder weld;
  std::vector<Triangle> triangles;
  triangles.reserve(count);
  const char* p = data.data() + 84;
  for (std::uint32_t i = 0; i < count; ++i, p += 50) {
    Triangle t{};
    for (int k = 0; k < 3; ++k) {
      float xyz[3];
      std::memcpy(xyz, p + 12 + 12 * k, 12);
      t[k] = weld.add(Vec3(xyz[0], xyz[1], xyz[2]));
    }
    triangles.push_back(t);
  }
  return TriMesh(std::move(weld.vertices), std::move(triangles), scale);
}

TriMesh parse_ascii_stl(const std::string& text, double scale, const std::string& name) {
  Welder weld;
  std::vector<Triangle> triangles;
  std::istringstream in(text);
  std::string tok;
  Triangle current{};
  int corner = 0;
  while (in >> tok) {
    if (tok != "vertex") continue;
    Vec3 p;
    if (!(in >> p.x() >> p.y() >> p.z())) throw Error(ErrorCode::FormatError, name + ": malformed STL vertex");
    current[corner++] = weld.add(p);
    if (corner == 3) {
      triangles.push_back(current);
      corner = 0;
    }
  }
  if (corner != 0) throw Error(ErrorCode::FormatError, name + ": STL facet with fewer than 3 vertices");
  return TriMesh(std::move(weld.vertices), std::move(triangles), scale);
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

TriMesh load_mesh(const std::filesystem::path& path, double scale) {
  const std::string data = read_file(path);
  const std::string ext = lower_extension(path);
  TriMesh mesh = [&] {
    if (ext == ".obj") return parse_obj(data, scale, path.string());
    if (ext == ".stl") {
      return looks_binary_stl(data) ? parse_binary_stl(data, scale) : parse_ascii_stl(data, scale, path.string());
    }
    throw Error(ErrorCode::FormatError, "unsupported mesh extension '" + ext + "' for " + path.string());
  }();
  if (mesh.triangle_count() == 0) throw Error(ErrorCode::EmptyMesh, "mesh file has no faces: " + path.string());
  if (!mesh.is_watertight()) {
    std::cerr << "warning: mesh " << path.string() << " is not watertight; inside/outside sign is heuristic\n";
  }
  return mesh;
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices()) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles()) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

}  // namespace dex
