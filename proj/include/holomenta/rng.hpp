#pragma once

#include <cstdint>
#include <random>

#include "holomenta/types.hpp"

namespace holomenta {

/// Seeded uniform sampler with an explicit 53-bit mapping, so identical
/// seeds give identical draws on every platform and build.
class SampleRng {
 public:
  explicit SampleRng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    const double u =
        static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // [0, 1)
    return lo + u * (hi - lo);
  }

  Vec uniform_vec(const Vec& lo, const Vec& hi) {
    Vec out(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      out[i] = uniform(lo[i], hi[i]);
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace holomenta
