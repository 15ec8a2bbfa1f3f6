#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace nbw {

// Philox4x32-10 block function (Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream.
///
/// The 64-bit seed is the Philox key; the 128-bit counter holds the stream
/// index in its upper half and a running block index in its lower half.
/// Streams with different (seed, stream) pairs never share a block, so
/// independent sub-streams are obtained by bumping the stream index rather
/// than by reseeding. All samplers below are fixed algorithms built on
/// `next_u64`, which makes every draw platform-stable.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1).
  double uniform_open();
  // Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Box-Muller; the second variate of each pair is cached.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  // Marsaglia-Tsang; shape > 0, unit scale.
  double gamma(double shape);
  double chi_squared(double df) { return 2.0 * gamma(0.5 * df); }
  // Knuth multiplication for small means, recursive halving above 30.
  std::uint64_t poisson(double mean);
  // chi^2(df + 2K) with K ~ Poisson(noncentrality / 2).
  double noncentral_chi_squared(double df, double noncentrality);

  // Fisher-Yates permutation of {0..n-1}.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // 32-bit words left in buffer_
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace nbw

namespace nbw {

// SplitMix64 finaliser of seed ^ tag; used to give unrelated purposes
// (data draws, shuffles, initialisation) unrelated keys.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace nbw
