#include "servesim/config.h"

#include <charconv>
#include <sstream>

#include "servesim/errors.h"

namespace servesim {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kWaiting: return "waiting";
    case Phase::kRunning: return "running";
    case Phase::kPreempted: return "preempted";
    case Phase::kFinished: return "finished";
    case Phase::kRejected: return "rejected";
  }
  return "?";
}

BucketLadder::BucketLadder() : buckets_{128, 512, 1024, 2048, 4096, 8192} {}

BucketLadder::BucketLadder(std::vector<Tokens> buckets) : buckets_(std::move(buckets)) {
  if (buckets_.empty()) throw ConfigError("bucket ladder is empty");
  if (buckets_.front() < 1) throw ConfigError("bucket sizes must be >= 1");
  for (std::size_t i = 1; i < buckets_.size(); ++i) {
    if (buckets_[i] <= buckets_[i - 1]) {
      throw ConfigError("bucket ladder must be strictly increasing");
    }
  }
}

BucketLadder BucketLadder::degenerate(Tokens max_model_len) {
  return BucketLadder(std::vector<Tokens>{max_model_len});
}

BucketLadder BucketLadder::parse(const std::string& text) {
  std::vector<Tokens> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("empty bucket in ladder '" + text + "'");
    const std::string_view tok(item.data() + b, e - b + 1);
    Tokens v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw ConfigError("bad bucket '" + std::string(tok) + "'");
    }
    out.push_back(v);
  }
  return BucketLadder(std::move(out));
}

std::string BucketLadder::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < buckets_.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(buckets_[i]);
  }
  return s;
}

std::string_view to_string(BatchingMode mode) {
  return mode == BatchingMode::kContinuous ? "continuous" : "static";
}

BatchingMode parse_batching_mode(const std::string& text) {
  if (text == "continuous") return BatchingMode::kContinuous;
  if (text == "static") return BatchingMode::kStatic;
  throw ConfigError("batching mode must be 'continuous' or 'static', got '" + text + "'");
}

Verdict validate_config(const EngineConfig& cfg) {
  if (cfg.max_model_len < 1) return Verdict::reject("max_model_len must be >= 1");
  if (cfg.bucket_ladder.max_bucket() != cfg.max_model_len) {
    return Verdict::reject("ladder/max mismatch: largest bucket " +
                           std::to_string(cfg.bucket_ladder.max_bucket()) +
                           " != max_model_len " + std::to_string(cfg.max_model_len));
  }
  if (cfg.block_size < 1) return Verdict::reject("block_size must be >= 1");
  if (cfg.total_blocks < 1) return Verdict::reject("total_blocks must be >= 1");
  if (cfg.total_blocks > (std::size_t{1} << 31)) {
    return Verdict::reject("total_blocks too large");
  }
  if (cfg.max_decode_batch < 1) return Verdict::reject("max_decode_batch must be >= 1");
  if (cfg.prefill_token_budget < cfg.bucket_ladder.max_bucket()) {
    return Verdict::reject("prefill_token_budget must be >= the largest bucket");
  }
  const CostModel& cm = cfg.cost_model;
  if (cm.c_prefill_per_token < 0 || cm.c_decode_fixed < 0 || cm.c_decode_per_seq < 0 ||
      cm.c_decode_per_ctx < 0) {
    return Verdict::reject("cost coefficients must be >= 0");
  }
  if (cm.c_decode_fixed == 0 && cm.c_decode_per_seq == 0 && cm.c_decode_per_ctx == 0) {
    return Verdict::reject("at least one decode cost coefficient must be > 0");
  }
  return Verdict::accept();
}

Verdict validate_request(const Request& r, const EngineConfig& cfg) {
  if (r.prompt_len < 1) return Verdict::reject("prompt_len must be >= 1");
  if (r.target_output_len < 1) return Verdict::reject("target_output_len must be >= 1");
  if (r.arrival_time < 0) return Verdict::reject("arrival_time must be >= 0");
  if (r.prompt_len > cfg.bucket_ladder.max_bucket()) {
    return Verdict::reject("prompt exceeds max bucket");
  }
  if (r.prompt_len + r.target_output_len > cfg.max_model_len) {
    return Verdict::reject("context overflow");
  }
  return Verdict::accept();
}

}  // namespace servesim
