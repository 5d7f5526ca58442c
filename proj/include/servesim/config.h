#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "servesim/types.h"

namespace servesim {

inline constexpr Tokens kDefaultMaxModelLen = 8192;

// Strictly increasing list of admissible prefill pad lengths.
class BucketLadder {
 public:
  // Default ladder {128, 512, 1024, 2048, 4096, 8192}.
  BucketLadder();
  // Throws ConfigError unless the list is non-empty, positive and strictly
  // increasing.
  explicit BucketLadder(std::vector<Tokens> buckets);
  BucketLadder(std::initializer_list<Tokens> buckets)
      : BucketLadder(std::vector<Tokens>(buckets)) {}

  // The pad-to-max baseline: a single bucket at max_model_len.
  static BucketLadder degenerate(Tokens max_model_len);
  // Parses "128,512,1024"; throws ConfigError.
  static BucketLadder parse(const std::string& text);

  std::span<const Tokens> buckets() const { return buckets_; }
  Tokens max_bucket() const { return buckets_.back(); }
  std::string to_string() const;

  bool operator==(const BucketLadder&) const = default;

 private:
  std::vector<Tokens> buckets_;
};

// Deterministic step-cost parameters, all in cu.
struct CostModel {
  Cu c_prefill_per_token = 1;
  Cu c_decode_fixed = 50;
  Cu c_decode_per_seq = 1;
  Cu c_decode_per_ctx = 0;

  bool operator==(const CostModel&) const = default;
};

// Continuous admits newcomers at every step; Static admits only when the
// running batch is empty and holds finished members' blocks until the whole
// batch completes.
enum class BatchingMode { kContinuous, kStatic };

std::string_view to_string(BatchingMode mode);
BatchingMode parse_batching_mode(const std::string& text);

struct EngineConfig {
  BucketLadder bucket_ladder;
  Tokens block_size = 16;
  std::size_t total_blocks = 4096;
  std::size_t max_decode_batch = 256;
  Tokens prefill_token_budget = kDefaultMaxModelLen;
  CostModel cost_model;
  Tokens max_model_len = kDefaultMaxModelLen;
  BatchingMode batching = BatchingMode::kContinuous;

  bool operator==(const EngineConfig&) const = default;
};

Verdict validate_config(const EngineConfig& cfg);

// Accepted iff the prompt fits a bucket and the full context fits
// max_model_len. Assumes cfg is valid.
Verdict validate_request(const Request& r, const EngineConfig& cfg);

}  // namespace servesim
