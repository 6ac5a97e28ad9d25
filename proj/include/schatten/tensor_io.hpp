#pragma once

#include "schatten/tensor.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace schatten {

/// Raised on malformed tensor files and filesystem failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes the text form: a "dims:" header line followed by one value per
/// line in storage order, round-trippable at full double precision.
inline void write_tensor(std::ostream& os, const DenseTensor& t) {
  os << "dims:";
  for (int d : t.dims()) os << ' ' << d;
  os << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", t[i]);
    os << buf << '\n';
  }
  if (!os) throw IoError("tensor write failed");
}

inline void write_tensor_file(const std::string& path, const DenseTensor& t) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  write_tensor(os, t);
}

inline DenseTensor read_tensor(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw IoError("tensor read: empty input");
  std::istringstream hs(header);
  std::string tag;
  hs >> tag;
  if (tag != "dims:") throw IoError("tensor read: expected 'dims:' header");
  std::vector<int> dims;
  for (int d; hs >> d;) dims.push_back(d);
  if (!hs.eof()) throw IoError("tensor read: malformed dims header");
  if (dims.empty()) throw IoError("tensor read: no dimensions");
  for (int d : dims)
    if (d < 1) throw IoError("tensor read: dims must be positive");
  Eigen::Index n = 1;
  for (int d : dims) n *= d;
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(n));
  double v;
  while (is >> v) data.push_back(v);
  if (!is.eof()) throw IoError("tensor read: malformed value");
  if (static_cast<Eigen::Index>(data.size()) != n)
    throw IoError("tensor read: expected " + std::to_string(n) + " values, got " +
                  std::to_string(data.size()));
  for (double x : data)
    if (!std::isfinite(x)) throw IoError("tensor read: non-finite value");
  return {std::move(dims), std::move(data)};
}

inline DenseTensor read_tensor_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open for reading: " + path);
  return read_tensor(is);
}

}  // namespace schatten
