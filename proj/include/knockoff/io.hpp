#ifndef KNOCKOFF_IO_HPP
#define KNOCKOFF_IO_HPP

#include "knockoff/common.hpp"

#include <charconv>
#include <ostream>
#include <string>
#include <vector>

namespace knockoff {

// shortest decimal representation that round-trips the double exactly
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline void write_csv(std::ostream& os, const std::vector<std::string>& header,
                      const Mat& rows) {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) os << ',';
    os << header[j];
  }
  os << '\n';
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      if (j) os << ',';
      os << format_double(rows(i, j));
    }
    os << '\n';
  }
}

}  // namespace knockoff

#endif  // KNOCKOFF_IO_HPP
