#include "hintmvs/ply_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "hintmvs/errors.hpp"

namespace hintmvs {

void write_ply(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path);

  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property float confidence\n";
  out << "element face " << mesh.triangles.size() << "\n";
  out << "property list uchar uint vertex_indices\n";
  out << "end_header\n";

  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    float rec[4] = {mesh.vertices[i].x(), mesh.vertices[i].y(),
                    mesh.vertices[i].z(),
                    i < mesh.vertex_confidence.size() ? mesh.vertex_confidence[i]
                                                      : 1.0f};
    out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
  }
  for (const auto& tri : mesh.triangles) {
    const std::uint8_t n = 3;
    out.write(reinterpret_cast<const char*>(&n), 1);
    std::uint32_t idx[3] = {tri[0], tri[1], tri[2]};
    out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
  }
  if (!out) throw IoError(path + ": short write");
}

namespace {

struct PlyProperty {
  std::string type;
  std::string name;
  bool is_list = false;
  std::string count_type;
};

std::size_t scalar_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  throw IoError("ply: unsupported property type " + t);
}

double read_scalar(std::istream& in, const std::string& t, bool ascii) {
  if (ascii) {
    double v;
    in >> v;
    return v;
  }
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), scalar_size(t));
  if (t == "float" || t == "float32") {
    float v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  if (t == "double" || t == "float64") {
    double v;
    std::memcpy(&v, buf, 8);
    return v;
  }
  if (t == "uchar" || t == "uint8") return buf[0];
  if (t == "char" || t == "int8") return static_cast<signed char>(buf[0]);
  if (t == "ushort" || t == "uint16") {
    std::uint16_t v;
    std::memcpy(&v, buf, 2);
    return v;
  }
  if (t == "short" || t == "int16") {
    std::int16_t v;
    std::memcpy(&v, buf, 2);
    return v;
  }
  if (t == "uint" || t == "uint32") {
    std::uint32_t v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  std::int32_t v;
  std::memcpy(&v, buf, 4);
  return v;
}

}  // namespace

TriangleMesh read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);

  std::string line;
  std::getline(in, line);
  if (line != "ply" && line != "ply\r") throw IoError(path + ": not a PLY file");

  bool ascii = false;
  std::size_t n_vertices = 0, n_faces = 0;
  std::vector<PlyProperty> vertex_props, face_props;
  std::vector<PlyProperty>* current = nullptr;

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "comment") continue;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "ascii")
        ascii = true;
      else if (fmt != "binary_little_endian")
        throw IoError(path + ": unsupported PLY format " + fmt);
    } else if (word == "element") {
      std::string name;
      std::size_t count;
      ss >> name >> count;
      if (name == "vertex") {
        n_vertices = count;
        current = &vertex_props;
      } else if (name == "face") {
        n_faces = count;
        current = &face_props;
      } else {
        throw IoError(path + ": unsupported PLY element " + name);
      }
    } else if (word == "property") {
      if (!current) throw IoError(path + ": property before element");
      PlyProperty p;
      ss >> p.type;
      if (p.type == "list") {
        p.is_list = true;
        ss >> p.count_type >> p.type >> p.name;
      } else {
        ss >> p.name;
      }
      current->push_back(p);
    } else if (word == "end_header") {
      break;
    }
  }

  TriangleMesh mesh;
  mesh.vertices.resize(n_vertices);
  mesh.vertex_confidence.assign(n_vertices, 1.0f);

  for (std::size_t i = 0; i < n_vertices; ++i) {
    for (const auto& p : vertex_props) {
      const double v = read_scalar(in, p.type, ascii);
      if (p.name == "x")
        mesh.vertices[i].x() = static_cast<float>(v);
      else if (p.name == "y")
        mesh.vertices[i].y() = static_cast<float>(v);
      else if (p.name == "z")
        mesh.vertices[i].z() = static_cast<float>(v);
      else if (p.name == "confidence")
        mesh.vertex_confidence[i] = static_cast<float>(v);
    }
  }

  mesh.triangles.reserve(n_faces);
  for (std::size_t i = 0; i < n_faces; ++i) {
    for (const auto& p : face_props) {
      if (!p.is_list) {
        read_scalar(in, p.type, ascii);
        continue;
      }
      const auto count = static_cast<std::size_t>(read_scalar(in, p.count_type, ascii));
      std::vector<std::uint32_t> poly(count);
      for (std::size_t j = 0; j < count; ++j)
        poly[j] = static_cast<std::uint32_t>(read_scalar(in, p.type, ascii));
      // Fan-triangulate anything beyond triangles.
      for (std::size_t j = 2; j < count; ++j)
        mesh.triangles.push_back({poly[0], poly[j - 1], poly[j]});
    }
  }
  if (!in) throw IoError(path + ": truncated PLY payload");
  return mesh;
}

}  // namespace hintmvs
