#ifndef KNOCKOFF_COMMON_HPP
#define KNOCKOFF_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace knockoff {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Engine = std::mt19937_64;

// Error taxonomy. Each maps to one failure category named in the module
// contracts; tests assert on the concrete type.
struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ResourceLimitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidDensityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BoundaryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64 step; used to derive independent substream seeds so that
// parallel or chunked estimators stay reproducible.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x100ULL));
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  return Engine(derive_seed(seed, stream));
}

}  // namespace knockoff

#endif  // KNOCKOFF_COMMON_HPP
