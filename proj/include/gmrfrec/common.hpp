#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iostream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace gmrfrec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMat = Eigen::SparseMatrix<double>;

// Error taxonomy mirrored by the CLI exit codes:
// config_error -> 2, data_error -> 3, numerical_error -> 4.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void warn(const std::string& msg) { std::cerr << "warning: " << msg << std::endl; }

// mt19937_64 output is pinned by the standard; std::shuffle and the
// distribution classes are not. Seeded runs must produce identical splits on
// every platform, so the few random primitives used are spelled out here.
using Rng = std::mt19937_64;

inline std::uint64_t rand_below(Rng& rng, std::uint64_t n) {
  return rng() % n;  // modulo bias is negligible for n << 2^64
}

inline double rand_unit(Rng& rng) {
  return std::ldexp(static_cast<double>(rng()), -64);  // [0, 1)
}

template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rand_below(rng, i)]);
  }
}

// round(r * n) with halves away from zero; both operands are nonnegative here
inline std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::llround(x));
}

}  // namespace gmrfrec
