#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sketchlab {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Seeded random stream. Same (seed, stream) gives the same sample sequence
// on every platform: the engine is std::mt19937_64 (sequence fixed by the
// standard), uniforms are (x >> 11 + 1) * 2^-53 in (0,1], and normals come
// from Box-Muller with the cos variate drawn first. This convention is part
// of the reproducibility contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed),
        stream_(stream),
        engine_(detail::splitmix64(detail::splitmix64(seed) ^ stream)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Independent sub-stream; used to split work across parallel trials.
  Rng split(std::uint64_t id) const {
    return Rng(seed_, detail::splitmix64(stream_ ^ detail::splitmix64(id)));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in (0,1].
  double next_uniform() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  std::vector<double> gaussian_vector(std::size_t n) {
    std::vector<double> out(n);
    for (auto& x : out) x = next_gaussian();
    return out;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sketchlab
