#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace servesim {

using RequestId = std::uint64_t;
using BlockId = std::uint32_t;
// Token counts.
using Tokens = std::int64_t;
// Simulated time in cost units; 1 cu is one simulated microsecond.
using Cu = std::int64_t;

// An inference job. The simulated model emits exactly target_output_len
// tokens, the first of them during prefill.
struct Request {
  RequestId id = 0;
  Cu arrival_time = 0;
  Tokens prompt_len = 1;
  Tokens target_output_len = 1;

  bool operator==(const Request&) const = default;
};

enum class Phase { kWaiting, kRunning, kPreempted, kFinished, kRejected };

std::string_view to_string(Phase phase);

// Ordered list of KV-cache blocks owned by one sequence. num_tokens counts
// token slots whose KV is resident; the last block holds used_slots() of them.
struct BlockTable {
  RequestId request_id = 0;
  std::vector<BlockId> blocks;
  Tokens num_tokens = 0;

  Tokens capacity(Tokens block_size) const {
    return static_cast<Tokens>(blocks.size()) * block_size;
  }
  Tokens used_slots(Tokens block_size) const {
    return blocks.empty() ? 0 : num_tokens - (capacity(block_size) - block_size);
  }

  bool operator==(const BlockTable&) const = default;
};

struct SequenceState {
  Request request;
  Phase phase = Phase::kWaiting;
  Tokens generated_count = 0;
  BlockTable block_table;
  std::optional<Cu> ttft;         // absolute time of the first token
  std::optional<Cu> finish_time;  // absolute time of the last token
  int preemptions = 0;

  RequestId id() const { return request.id; }
  Tokens context_len() const { return request.prompt_len + generated_count; }
};

// Pass/fail with a human-readable reason on failure.
struct Verdict {
  bool ok = true;
  std::string reason;

  static Verdict accept() { return {}; }
  static Verdict reject(std::string why) { return {false, std::move(why)}; }
  explicit operator bool() const { return ok; }
};

}  // namespace servesim
