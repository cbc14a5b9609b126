#include "fedint/secure_sum.hpp"

#include <cmath>
#include <set>

#include "fedint/error.hpp"
#include "fedint/kernels.hpp"
#include "fedint/rng.hpp"

namespace fedint::fed {

std::uint64_t encode_fixed(double x) {
  return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::llround(x * kFixedPointScale)));
}

double decode_fixed(std::uint64_t v) {
  return static_cast<double>(static_cast<std::int64_t>(v)) / kFixedPointScale;
}

SecureSumSession::SecureSumSession(std::vector<std::string> participants,
                                   std::uint64_t driver_seed, std::size_t length)
    : participants_(std::move(participants)),
      driver_seed_(driver_seed),
      length_(length),
      submissions_(participants_.size()) {
  if (participants_.size() < 2)
    throw Error(ErrorCode::ConfigError, "secure summation needs at least two participants");
  std::set<std::string> seen(participants_.begin(), participants_.end());
  if (seen.size() != participants_.size())
    throw Error(ErrorCode::ConfigError, "duplicate participant in secure summation");
}

std::uint64_t SecureSumSession::pair_seed(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  return derive_seed(driver_seed_, "mask/" + participants_[i] + "/" + participants_[j]);
}

std::vector<std::uint64_t> SecureSumSession::mask(std::size_t index,
                                                  std::span<const double> values) const {
  if (index >= participants_.size())
    throw Error(ErrorCode::ConfigError, "participant index out of range");
  if (values.size() != length_)
    throw Error(ErrorCode::IncompatibleShapes, "masked vector length mismatch");
  const double limit = 0x1.0p63 / (kFixedPointScale * static_cast<double>(participants_.size()));
  std::vector<std::uint64_t> out(length_);
  for (std::size_t e = 0; e < length_; ++e) {
    if (!(std::abs(values[e]) < limit))
      throw Error(ErrorCode::OverflowRisk, participants_[index] + " element " + std::to_string(e));
    out[e] = encode_fixed(values[e]);
  }
  std::vector<std::uint64_t> stream(length_);
  for (std::size_t j = 0; j < participants_.size(); ++j) {
    if (j == index) continue;
    Rng prg(pair_seed(index, j));
    for (auto& s : stream) s = prg.next();
    if (j > index)
      kernels::add_u64(stream, out);
    else
      kernels::sub_u64(stream, out);
  }
  return out;
}

void SecureSumSession::submit(std::size_t index, std::vector<std::uint64_t> masked) {
  if (index >= participants_.size())
    throw Error(ErrorCode::ConfigError, "participant index out of range");
  if (masked.size() != length_)
    throw Error(ErrorCode::IncompatibleShapes, "masked vector length mismatch");
  submissions_[index] = std::move(masked);
}

std::vector<double> SecureSumSession::combine() const {
  std::vector<std::uint64_t> sum(length_, 0);
  for (std::size_t i = 0; i < participants_.size(); ++i) {
    if (!submissions_[i]) throw Error(ErrorCode::MissingSubmission, participants_[i]);
    kernels::add_u64(*submissions_[i], sum);
  }
  std::vector<double> out(length_);
  for (std::size_t e = 0; e < length_; ++e) out[e] = decode_fixed(sum[e]);
  return out;
}

ModelParams secure_aggregate(std::span<const ModelStoreEntry> entries, std::uint64_t driver_seed) {
  if (entries.empty()) throw Error(ErrorCode::EmptyEntrySet, "nothing to aggregate");
  std::vector<double> p;
  std::vector<std::string> ids;
  for (const auto& e : entries) {
    if (!e.params.compatible(entries.front().params))
      throw Error(ErrorCode::IncompatibleShapes,
                  "learner " + e.learner_id + " does not match " + entries.front().learner_id);
    p.push_back(e.contribution);
    ids.push_back(e.learner_id);
  }
  aggregation_weights(p);  // validates contributions
  double total = 0.0;
  for (double v : p) total += v;

  SecureSumSession session(ids, driver_seed, entries.front().params.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto flat = entries[k].params.flatten();
    kernels::scale(p[k], flat);
    session.submit(k, session.mask(k, flat));
  }
  auto sum = session.combine();
  for (auto& v : sum) v /= total;
  ModelParams out = entries.front().params;
  out.assign_flat(sum);
  return out;
}

}  // namespace fedint::fed
