#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace bsem {

// Deterministic named substream. Two streams built from the same (seed, name)
// pair produce identical draw sequences on every platform: the engine is the
// fully-specified std::mt19937_64 and all real-valued transforms are
// hand-rolled here (std distributions are not portable across stdlibs).
//
// Conventional stream names: "init", "masking", "batching", "synthgen",
// "selection". Substreams of substreams are derived by appending "/..."
// segments to the name.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view name);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform01();
  double uniform(double lo, double hi);

  // Box-Muller; the spare value is cached, so draw order matters for
  // reproducibility (it always does here).
  double normal(double mean, double stddev);

  // Uniform integer in [0, n); rejection sampling, exact.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace bsem
