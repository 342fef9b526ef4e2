#pragma once
// Counter-based RNG utilities. Everything here is a pure function of its
// inputs: the environment field needs hash-style lookups keyed by tree
// address, and Monte Carlo replicas need streams that do not depend on how
// work is split across threads.

#include <cstdint>
#include <cmath>
#include <string_view>
#include <vector>
#include <stdexcept>

namespace hiercan {

using u64 = std::uint64_t;

// splitmix64 finalizer; good avalanche, cheap.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  // asymmetric so hash_combine(a,b) != hash_combine(b,a)
  return mix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2) + b));
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1), 53 random bits
  double next_unit() { return (next_u64() >> 11) * 0x1.0p-53; }

  // uniform in {0,...,n-1}, rejection-free enough for our n
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("below(0)");
    // multiply-shift; bias < 2^-64 * n, irrelevant for n << 2^32
    unsigned __int128 m = (unsigned __int128)next_u64() * n;
    return (std::uint64_t)(m >> 64);
  }

  double exponential(double rate) {
    // -log(1-u), u in [0,1); avoids log(0)
    double u = next_unit();
    return -std::log1p(-u) / rate;
  }

  bool bernoulli(double p) { return next_unit() < p; }

  // index i with probability w[i]/total
  std::size_t categorical(const std::vector<double>& w, double total) {
    double x = next_unit() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      acc += w[i];
      if (x < acc) return i;
    }
    return w.empty() ? 0 : w.size() - 1;
  }

 private:
  std::uint64_t state_;
};

// Independent stream for a given replica/purpose. Streams derived from the
// same master with distinct ids are independent for all practical purposes,
// and the mapping does not depend on scheduling.
inline u64 derive_seed(u64 master, u64 stream_id) { return hash_combine(master, stream_id); }

inline Rng derive_stream(u64 master, u64 stream_id) { return Rng(derive_seed(master, stream_id)); }

}  // namespace hiercan
