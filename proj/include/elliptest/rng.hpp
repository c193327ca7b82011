#pragma once

#include <cmath>
#include <cstdint>

#include "elliptest/error.hpp"

namespace elliptest {

/// Identifies one independent random stream. Streams with the same master
/// seed but different ids never overlap, so parallel replicates can each own
/// stream_id = replicate index and the output stays schedule independent.
struct seed_spec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  seed_spec with_stream(std::uint64_t id) const { return {master_seed, id}; }
};

/// Philox4x32-10 counter-based generator. The key is the master seed, the
/// upper counter half is the stream id and the lower half the block position,
/// so jumping to any point of any stream is O(1).
class philox_stream {
 public:
  explicit philox_stream(seed_spec seed)
      : key0_(static_cast<std::uint32_t>(seed.master_seed)),
        key1_(static_cast<std::uint32_t>(seed.master_seed >> 32)),
        stream_lo_(static_cast<std::uint32_t>(seed.stream_id)),
        stream_hi_(static_cast<std::uint32_t>(seed.stream_id >> 32)) {}

  std::uint64_t next_u64() {
    if (buffer_pos_ >= 2) refill();
    return buffer_[buffer_pos_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on the open interval (0, 1); safe to pass to log().
  double next_open_double() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via the trigonometric Box-Muller transform. The polar
  /// variant consumes a data-dependent number of uniforms, which would break
  /// the fixed counter layout.
  double next_gaussian() {
    if (have_cached_gaussian_) {
      have_cached_gaussian_ = false;
      return cached_gaussian_;
    }
    const double u1 = next_open_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_gaussian_ = r * std::sin(a);
    have_cached_gaussian_ = true;
    return r * std::cos(a);
  }

  /// Gamma(shape, 1) by Marsaglia-Tsang squeeze; shapes below one are lifted
  /// with the usual U^(1/shape) boost.
  double next_gamma(double shape) {
    if (!(shape > 0.0))
      throw non_positive_argument_error("next_gamma: shape must be positive");
    if (shape < 1.0) {
      const double boost = std::pow(next_open_double(), 1.0 / shape);
      return next_gamma(shape + 1.0) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = next_gaussian();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = next_open_double();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double next_chisq(double dof) {
    if (!(dof > 0.0))
      throw non_positive_argument_error("next_chisq: dof must be positive");
    return 2.0 * next_gamma(0.5 * dof);
  }

 private:
  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
  }

  void refill() {
    std::uint32_t c0 = static_cast<std::uint32_t>(position_);
    std::uint32_t c1 = static_cast<std::uint32_t>(position_ >> 32);
    std::uint32_t c2 = stream_lo_;
    std::uint32_t c3 = stream_hi_;
    std::uint32_t k0 = key0_;
    std::uint32_t k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, c0, hi0, lo0);
      mulhilo(0xCD9E8D57u, c2, hi1, lo1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      if (round < 9) {
        k0 += 0x9E3779B9u;
        k1 += 0xBB67AE85u;
      }
    }
    buffer_[0] = (static_cast<std::uint64_t>(c1) << 32) | c0;
    buffer_[1] = (static_cast<std::uint64_t>(c3) << 32) | c2;
    buffer_pos_ = 0;
    ++position_;
  }

  std::uint32_t key0_;
  std::uint32_t key1_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint64_t position_ = 0;
  std::uint64_t buffer_[2] = {0, 0};
  int buffer_pos_ = 2;
  double cached_gaussian_ = 0.0;
  bool have_cached_gaussian_ = false;
};

}  // namespace elliptest
