#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace causalfm {

// Philox4x32-10 block function (Salmon et al., Random123). Pure function of
// (counter, key); used as the only entropy source in the library.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Counter-based generator. A generator is addressed by (seed, stream,
// substream); distinct addresses give independent sequences, so rows and
// datasets can be generated in any order or in parallel.
//
// Counter layout: word 0 = block index, word 1 = substream, words 2..3 =
// stream. Key = seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint32_t substream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [lo, hi] (inclusive).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  double normal();
  double laplace();
  double logistic();
  bool bernoulli(double p);

  template <class T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int available_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// Derive a child seed from a parent seed and a tag. Used to give every
// sub-task (SCM structure, context rows, query rows, ...) its own key.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

}  // namespace causalfm
