#pragma once

#include "csmri/core.hpp"

#include <cstdint>
#include <random>

namespace csmri::test {

// Hand-rolled generators for property tests.
inline ComplexVolume random_volume(Grid3 const &g, std::uint64_t seed, double scale = 1.0)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  ComplexVolume v(g);
  for (auto &c : v.data()) { c = cx(n(rng), n(rng)); }
  return v;
}

inline CxVec random_vec(std::size_t len, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  CxVec v(len);
  for (auto &c : v) { c = cx(n(rng), n(rng)); }
  return v;
}

inline double rel_diff(std::span<cx const> a, std::span<cx const> b)
{
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

} // namespace csmri::test
