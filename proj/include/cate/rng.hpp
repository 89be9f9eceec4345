#ifndef CATE_RNG_HPP
#define CATE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace cate {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

double normal_quantile(double p);

// Seedable stream of random draws. Streams are derived from a
// (seed, stream_id) pair so independent consumers (dataset generation,
// bootstrap replicate b, Monte Carlo run r) never share a sequence:
// the mt19937_64 state is seeded from splitmix64 applied to the pair.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (stream_id + 1));
    std::seed_seq seq{detail::splitmix64(s), detail::splitmix64(s),
                      detail::splitmix64(s), detail::splitmix64(s)};
    gen_.seed(seq);
  }

  std::uint64_t next_u64() { return gen_(); }

  // uniform on [0, 1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // strictly inside (0, 1)
  double uniform_open() {
    double u = uniform();
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double exponential() { return -std::log1p(-uniform()); }

  double normal() { return normal_quantile(uniform_open()); }

  bool bernoulli(double p) { return uniform() < p; }

  // integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // rejection to avoid modulo bias
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

private:
  std::mt19937_64 gen_;
};

}  // namespace cate

#endif
