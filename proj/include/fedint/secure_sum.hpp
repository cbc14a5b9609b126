#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedint/runtime.hpp"

namespace fedint::fed {

inline constexpr double kFixedPointScale = 16777216.0;  // 2^24

/// round(x * 2^24) in two's complement modulo 2^64.
std::uint64_t encode_fixed(double x);
double decode_fixed(std::uint64_t v);

/// Pairwise additive masking for one aggregation. Participant i submits
/// enc(v_i) + sum_{j>i} PRG(s_ij) - sum_{j<i} PRG(s_ji) (mod 2^64); the masks
/// cancel in the sum, so the combiner only ever learns sum_i v_i. The pair
/// seeds s_ij are derived by the Driver from its seed.
class SecureSumSession {
 public:
  /// Throws ConfigError for fewer than two or duplicate participants.
  SecureSumSession(std::vector<std::string> participants, std::uint64_t driver_seed,
                   std::size_t length);

  const std::vector<std::string>& participants() const { return participants_; }
  std::size_t length() const { return length_; }
  std::uint64_t pair_seed(std::size_t i, std::size_t j) const;

  /// Learner side. Throws OverflowRisk if |v| * 2^24 * N >= 2^63 for any element.
  std::vector<std::uint64_t> mask(std::size_t index, std::span<const double> values) const;

  /// Controller side.
  void submit(std::size_t index, std::vector<std::uint64_t> masked);
  /// Decoded sum; throws MissingSubmission naming the first absent learner.
  std::vector<double> combine() const;

 private:
  std::vector<std::string> participants_;
  std::uint64_t driver_seed_;
  std::size_t length_;
  std::vector<std::optional<std::vector<std::uint64_t>>> submissions_;
};

/// Masked sum_k p_k x_k / P over the entries, with per-learner masking done
/// as the learners would.
ModelParams secure_aggregate(std::span<const ModelStoreEntry> entries, std::uint64_t driver_seed);

}  // namespace fedint::fed
