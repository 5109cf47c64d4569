#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mlr/ct/siddon.hpp"
#include "mlr/error.hpp"
#include "mlr/image.hpp"
#include "mlr/linalg/sparse.hpp"

namespace mlr {

// Fan-beam scanner around an N x N unit-pitch image centered at the origin.
// View v places the source at angle 2 pi v / views on a circle of radius
// source_radius. Detectors sit on an arc centered at the source, at distance
// source_radius + detector_radius from it, equiangular over
// [-half_fan, half_fan] about the central ray.
struct FanBeamGeometry {
  std::size_t n = 64;
  double source_radius = 128.0;
  double detector_radius = 128.0;
  std::size_t detectors = 128;
  std::size_t views = 30;
  double half_fan = 0.0;

  // Defaults: both radii 2N, 2N detectors, and a fan that covers the image
  // circumcircle with a 10% angular margin.
  static FanBeamGeometry standard(std::size_t n, std::size_t views, std::size_t detectors = 0) {
    FanBeamGeometry g;
    g.n = n;
    g.views = views;
    g.source_radius = 2.0 * static_cast<double>(n);
    g.detector_radius = 2.0 * static_cast<double>(n);
    g.detectors = detectors ? detectors : 2 * n;
    g.half_fan = default_half_fan(n, g.source_radius);
    return g;
  }

  static double default_half_fan(std::size_t n, double source_radius) {
    return 1.1 * std::asin(static_cast<double>(n) * std::numbers::sqrt2 / 2.0 / source_radius);
  }

  void validate() const {
    if (n == 0) throw InvalidArgument("fan beam: image side must be positive");
    if (!(source_radius > static_cast<double>(n) * std::numbers::sqrt2 / 2.0))
      throw InvalidArgument("fan beam: the source must lie outside the image");
    if (!(detector_radius > 0.0)) throw InvalidArgument("fan beam: detector radius must be positive");
    if (detectors == 0 || views == 0) throw InvalidArgument("fan beam: need at least one view and one detector");
    if (!(half_fan > 0.0) || !(half_fan < std::numbers::pi / 2))
      throw InvalidArgument("fan beam: half fan angle must lie in (0, pi/2)");
  }

  std::size_t measurements() const noexcept { return views * detectors; }

  double view_angle(std::size_t v) const {
    return 2.0 * std::numbers::pi * static_cast<double>(v) / static_cast<double>(views);
  }

  Ray ray(std::size_t v, std::size_t d) const {
    const double theta = view_angle(v);
    const Point2 s{source_radius * std::cos(theta), source_radius * std::sin(theta)};
    const double gamma =
        -half_fan + (static_cast<double>(d) + 0.5) * 2.0 * half_fan / static_cast<double>(detectors);
    const double dir = theta + std::numbers::pi + gamma;
    const double reach = source_radius + detector_radius;
    return {s, {s.x + reach * std::cos(dir), s.y + reach * std::sin(dir)}};
  }
};

// Row v * detectors + d holds the Siddon weights of ray (v, d).
inline SparseOperator build_system_matrix(const FanBeamGeometry& geo) {
  geo.validate();
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(geo.measurements());
  for (std::size_t v = 0; v < geo.views; ++v)
    for (std::size_t d = 0; d < geo.detectors; ++d) {
      auto& row = rows[v * geo.detectors + d];
      for (const RayHit& h : siddon_trace(geo.ray(v, d), geo.n)) row.emplace_back(h.pixel, h.length);
      std::sort(row.begin(), row.end());
    }
  return SparseOperator::from_rows(geo.n * geo.n, std::move(rows));
}

inline std::vector<double> forward_project(const SparseOperator& a, const ImageGrid& f) {
  if (a.cols() != f.size()) throw InvalidArgument("forward_project: image size does not match the system matrix");
  return spmv(a, f.pixels());
}

// Sinogram: views x detectors, row-major by view.
struct Sinogram {
  std::size_t views = 0;
  std::size_t detectors = 0;
  std::vector<double> values;
};

inline void write_sinogram_csv(const Sinogram& s, std::ostream& os) {
  os << std::setprecision(17);
  for (std::size_t v = 0; v < s.views; ++v) {
    for (std::size_t d = 0; d < s.detectors; ++d) os << (d ? "," : "") << s.values[v * s.detectors + d];
    os << '\n';
  }
}

inline Sinogram read_sinogram_csv(std::istream& is) {
  Sinogram s;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(is, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = std::min(line.find(',', pos), line.size());
      const std::string cell = line.substr(pos, comma - pos);
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw FormatError("sinogram csv: bad number '" + cell + "'", line_start + pos);
      }
      if (used != cell.size() && cell.find_first_not_of(" \t", used) != std::string::npos)
        throw FormatError("sinogram csv: bad number '" + cell + "'", line_start + pos);
      row.push_back(v);
      pos = comma + 1;
    }
    if (s.views == 0) s.detectors = row.size();
    if (row.size() != s.detectors) throw FormatError("sinogram csv: ragged row", line_start);
    s.values.insert(s.values.end(), row.begin(), row.end());
    ++s.views;
  }
  if (s.views == 0) throw FormatError("sinogram csv: no data", 0);
  return s;
}

// Raw format: text line "views detectors\n" followed by views * detectors
// little-endian IEEE doubles.
inline void write_sinogram_raw(const Sinogram& s, std::ostream& os) {
  os << s.views << ' ' << s.detectors << '\n';
  for (double v : s.values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
    os.write(b, 8);
  }
}

inline Sinogram read_sinogram_raw(std::istream& is) {
  Sinogram s;
  std::string header;
  if (!std::getline(is, header)) throw FormatError("sinogram raw: missing header", 0);
  std::istringstream hs(header);
  if (!(hs >> s.views >> s.detectors) || s.views == 0 || s.detectors == 0)
    throw FormatError("sinogram raw: header must be 'views detectors'", 0);
  const std::size_t base = header.size() + 1;
  s.values.resize(s.views * s.detectors);
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw FormatError("sinogram raw: truncated data", base + 8 * i);
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    std::memcpy(&s.values[i], &bits, sizeof bits);
  }
  return s;
}

// ".csv" selects CSV, anything else the raw format.
inline bool is_csv_path(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}

inline void write_sinogram(const Sinogram& s, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  if (is_csv_path(path))
    write_sinogram_csv(s, os);
  else
    write_sinogram_raw(s, os);
  if (!os) throw InvalidArgument("failed writing " + path);
}

inline Sinogram read_sinogram(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path);
  return is_csv_path(path) ? read_sinogram_csv(is) : read_sinogram_raw(is);
}

}  // namespace mlr
