// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT
//
// File formats:
//   XYZ   one point per line, 3 or 6 decimal reals (x y z [nx ny nz]),
//         whitespace- or comma-separated.
//   PLY   ascii / binary_little_endian, vertex element with float or double
//         x,y,z and optional nx,ny,nz; unknown scalar properties are skipped.
//   FMAT  magic "FMAT", u32 rows, u32 cols (little-endian), row-major
//         float64 little-endian payload.

#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hybridseg/point_cloud.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary readers/writers assume a little-endian host");

namespace hybridseg {

/// Parse failure carrying file position context.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what) {}
};

enum class CloudFormat { Xyz, PlyAscii, PlyBinary };

namespace detail {

inline void renormalize_normals(Matrix3Xr& normals, const std::string& path) {
  for (Eigen::Index i = 0; i < normals.rows(); ++i) {
    const double norm = normals.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw ParseError(path, static_cast<std::size_t>(i + 1),
                       "zero-length or non-finite normal");
    // leave already-unit normals untouched so binary round trips stay exact
    if (std::abs(norm - 1.0) > 1e-9) normals.row(i) /= norm;
  }
}

inline bool split_reals(const std::string& line, std::vector<double>& out) {
  out.clear();
  const char* s = line.c_str();
  char* end = nullptr;
  while (*s) {
    while (*s == ' ' || *s == '\t' || *s == ',' || *s == '\r') ++s;
    if (!*s) break;
    const double v = std::strtod(s, &end);
    if (end == s) return false;
    out.push_back(v);
    s = end;
  }
  return true;
}

}  // namespace detail

inline PointCloud load_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> row;
  std::vector<Eigen::Matrix<double, 6, 1>> rows;
  bool with_normals = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!detail::split_reals(line, row) || (row.size() != 3 && row.size() != 6))
      throw ParseError(path, line_no, "expected 3 or 6 reals");
    for (double v : row)
      if (!std::isfinite(v)) throw ParseError(path, line_no, "non-finite value");
    if (rows.empty())
      with_normals = row.size() == 6;
    else if (with_normals != (row.size() == 6))
      throw ParseError(path, line_no, "inconsistent column count");
    Eigen::Matrix<double, 6, 1> r = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t c = 0; c < row.size(); ++c) r[static_cast<int>(c)] = row[c];
    rows.push_back(r);
  }
  if (rows.empty()) throw ParseError(path, line_no, "zero points");

  PointCloud cloud;
  cloud.positions.resize(static_cast<Eigen::Index>(rows.size()), 3);
  if (with_normals) cloud.normals.emplace(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    cloud.positions.row(static_cast<Eigen::Index>(i)) = rows[i].head<3>().transpose();
    if (with_normals)
      cloud.normals->row(static_cast<Eigen::Index>(i)) = rows[i].tail<3>().transpose();
  }
  if (with_normals) detail::renormalize_normals(*cloud.normals, path);
  return cloud;
}

namespace detail {

struct PlyProperty {
  std::string name;
  int byte_size = 0;
  bool is_double = false;
  bool is_float = false;
};

inline int ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

}  // namespace detail

inline PointCloud load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw ParseError(path, line_no, "truncated header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };

  next_line();
  if (line != "ply") throw ParseError(path, line_no, "missing ply magic");

  bool binary = false;
  long vertex_count = -1;
  std::vector<detail::PlyProperty> props;
  bool in_vertex_element = false;
  bool saw_format = false;
  while (true) {
    next_line();
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    if (token == "comment" || token == "obj_info" || token.empty()) continue;
    if (token == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii")
        binary = false;
      else if (fmt == "binary_little_endian")
        binary = true;
      else
        throw ParseError(path, line_no, "unsupported format " + fmt);
      saw_format = true;
    } else if (token == "element") {
      std::string name;
      long count = 0;
      ls >> name >> count;
      if (name == "vertex") {
        vertex_count = count;
        in_vertex_element = true;
      } else {
        if (vertex_count < 0)
          throw ParseError(path, line_no, "vertex element must come first");
        in_vertex_element = false;
      }
    } else if (token == "property") {
      std::string type;
      ls >> type;
      if (!in_vertex_element) continue;
      if (type == "list")
        throw ParseError(path, line_no, "list property in vertex element");
      detail::PlyProperty p;
      ls >> p.name;
      p.byte_size = detail::ply_type_size(type);
      p.is_float = type == "float" || type == "float32";
      p.is_double = type == "double" || type == "float64";
      if (p.byte_size == 0)
        throw ParseError(path, line_no, "unknown property type " + type);
      props.push_back(p);
    } else if (token == "end_header") {
      break;
    } else {
      throw ParseError(path, line_no, "unexpected header token " + token);
    }
  }
  if (!saw_format) throw ParseError(path, line_no, "missing format line");
  if (vertex_count < 0) throw ParseError(path, line_no, "missing vertex element");
  if (vertex_count == 0) throw ParseError(path, line_no, "zero points");

  int col[6] = {-1, -1, -1, -1, -1, -1};
  static const char* names[6] = {"x", "y", "z", "nx", "ny", "nz"};
  for (std::size_t p = 0; p < props.size(); ++p)
    for (int c = 0; c < 6; ++c)
      if (props[p].name == names[c]) col[c] = static_cast<int>(p);
  if (col[0] < 0 || col[1] < 0 || col[2] < 0)
    throw ParseError(path, line_no, "vertex element lacks x/y/z");
  const bool with_normals = col[3] >= 0 && col[4] >= 0 && col[5] >= 0;

  PointCloud cloud;
  cloud.positions.resize(vertex_count, 3);
  if (with_normals) cloud.normals.emplace(vertex_count, 3);

  if (!binary) {
    std::vector<double> row;
    for (long i = 0; i < vertex_count; ++i) {
      next_line();
      if (!detail::split_reals(line, row) || row.size() < props.size())
        throw ParseError(path, line_no, "bad vertex row");
      for (int c = 0; c < 3; ++c) cloud.positions(i, c) = row[col[c]];
      if (with_normals)
        for (int c = 0; c < 3; ++c) (*cloud.normals)(i, c) = row[col[3 + c]];
    }
  } else {
    std::size_t stride = 0;
    for (const auto& p : props) stride += static_cast<std::size_t>(p.byte_size);
    std::vector<char> buf(stride);
    for (long i = 0; i < vertex_count; ++i) {
      if (!in.read(buf.data(), static_cast<std::streamsize>(stride)))
        throw ParseError(path, line_no, "truncated vertex data");
      std::size_t offset = 0;
      for (std::size_t p = 0; p < props.size(); ++p) {
        double value = 0.0;
        if (props[p].is_float) {
          float f;
          std::memcpy(&f, buf.data() + offset, 4);
          value = f;
        } else if (props[p].is_double) {
          std::memcpy(&value, buf.data() + offset, 8);
        }
        offset += static_cast<std::size_t>(props[p].byte_size);
        for (int c = 0; c < 6; ++c)
          if (col[c] == static_cast<int>(p)) {
            if (c < 3)
              cloud.positions(i, c) = value;
            else if (with_normals)
              (*cloud.normals)(i, c - 3) = value;
          }
      }
    }
  }
  if (!cloud.positions.allFinite())
    throw ParseError(path, line_no, "non-finite coordinate");
  if (with_normals) detail::renormalize_normals(*cloud.normals, path);
  return cloud;
}

inline PointCloud load_cloud(const std::string& path, CloudFormat format) {
  switch (format) {
    case CloudFormat::Xyz:
      return load_xyz(path);
    default:
      return load_ply(path);  // the PLY header states ascii vs binary
  }
}

/// Guesses the format from the file extension (.ply vs anything else = xyz).
inline PointCloud load_cloud(const std::string& path) {
  const auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));
  return ext == "ply" ? load_ply(path) : load_xyz(path);
}

inline void save_xyz(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    out << cloud.positions(i, 0) << ' ' << cloud.positions(i, 1) << ' '
        << cloud.positions(i, 2);
    if (cloud.normals)
      out << ' ' << (*cloud.normals)(i, 0) << ' ' << (*cloud.normals)(i, 1) << ' '
          << (*cloud.normals)(i, 2);
    out << '\n';
  }
}

/// Writes a PLY file; `extra` holds optional per-point scalar channels that
/// become additional double properties (e.g. surface variation).
inline void save_ply(const PointCloud& cloud, const std::string& path,
                     bool binary = true,
                     const std::vector<std::pair<std::string, Eigen::VectorXd>>&
                         extra = {}) {
  for (const auto& [name, values] : extra)
    if (values.size() != cloud.size())
      throw std::invalid_argument("extra property " + name + " has wrong length");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii")
      << " 1.0\nelement vertex " << cloud.size() << "\n";
  for (const char* c : {"x", "y", "z"}) out << "property double " << c << "\n";
  if (cloud.normals)
    for (const char* c : {"nx", "ny", "nz"}) out << "property double " << c << "\n";
  for (const auto& [name, values] : extra) out << "property double " << name << "\n";
  out << "end_header\n";

  out.precision(17);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    std::vector<double> row;
    row.reserve(6 + extra.size());
    for (int c = 0; c < 3; ++c) row.push_back(cloud.positions(i, c));
    if (cloud.normals)
      for (int c = 0; c < 3; ++c) row.push_back((*cloud.normals)(i, c));
    for (const auto& [name, values] : extra) row.push_back(values[i]);
    if (binary) {
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(double)));
    } else {
      for (std::size_t c = 0; c < row.size(); ++c)
        out << row[c] << (c + 1 == row.size() ? '\n' : ' ');
    }
  }
}

inline void save_cloud(const PointCloud& cloud, const std::string& path,
                       CloudFormat format) {
  switch (format) {
    case CloudFormat::Xyz:
      save_xyz(cloud, path);
      break;
    case CloudFormat::PlyAscii:
      save_ply(cloud, path, /*binary=*/false);
      break;
    case CloudFormat::PlyBinary:
      save_ply(cloud, path, /*binary=*/true);
      break;
  }
}

// ---------------------------------------------------------------------------
// FMAT matrix interchange
// ---------------------------------------------------------------------------

inline void save_fmat(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write("FMAT", 4);
  const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
}

inline Eigen::MatrixXd load_fmat(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "FMAT", 4) != 0)
    throw std::runtime_error(path + ": not an FMAT file");
  std::uint32_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in) throw std::runtime_error(path + ": truncated FMAT header");
  Eigen::MatrixXd m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) {
      double v;
      if (!in.read(reinterpret_cast<char*>(&v), 8))
        throw std::runtime_error(path + ": truncated FMAT payload");
      m(i, j) = v;
    }
  return m;
}

// ---------------------------------------------------------------------------
// Label files: one integer per line
// ---------------------------------------------------------------------------

inline std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    try {
      labels.push_back(std::stoi(line));
    } catch (const std::exception&) {
      throw ParseError(path, line_no, "expected an integer label");
    }
  }
  if (labels.empty()) throw ParseError(path, line_no, "no labels");
  return labels;
}

inline void save_labels(const std::vector<int>& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (int l : labels) out << l << '\n';
}

}  // namespace hybridseg
