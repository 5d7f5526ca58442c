#pragma once

#include <deque>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "servesim/block_manager.h"
#include "servesim/config.h"
#include "servesim/metrics.h"
#include "servesim/sim_backend.h"
#include "servesim/types.h"

namespace servesim {

enum class EventKind { kReject, kPrefill, kDecode, kFinish, kPreempt };

std::string_view to_string(EventKind kind);

// One line of the engine trace. Step events are stamped with the step's
// finish time; preemptions with the clock at which they were decided.
struct Event {
  Cu time = 0;
  EventKind kind = EventKind::kPrefill;
  std::vector<RequestId> members;
  std::string detail;

  bool operator==(const Event&) const = default;
};

// "time_cu kind member_ids detail", member_ids comma-separated.
std::string format_event(const Event& e);
std::string format_event_log(std::span<const Event> events);

// The continuous-batching engine over the simulated backend. Single threaded
// and deterministic: identical (config, requests) give identical event logs
// and reports.
//
// Block tables track tokens whose KV is resident. A prefill writes the
// prompt and emits the first token; each decode step writes the KV of the
// previous token and emits the next one. So for a running sequence the table
// holds context_len - 1 tokens at every step boundary.
class Engine {
 public:
  // Throws ConfigError if cfg is invalid.
  explicit Engine(EngineConfig cfg);

  // Validates and enqueues requests; rejects are recorded and logged.
  // Requests must be sorted by arrival_time and have unique ids.
  void submit(std::span<const Request> requests);

  // Moves waiting requests into the running set, FIFO, stopping at the first
  // one that does not fit. Admitted sequences get block tables sized for
  // their prompt.
  std::vector<RequestId> admit();

  // Next step to execute, or nullopt when every accepted request has
  // finished. Advances the clock over idle gaps. Decode plans reserve a KV
  // slot per member, preempting the newest sequence when the pool runs dry.
  // Throws Deadlock when no sequence can ever progress.
  std::optional<StepPlan> plan_step();

  void apply_outcome(const StepPlan& plan, const StepOutcome& outcome);

  // Evicts the most recently arrived running sequence (ties: larger id) and
  // requeues it at the front of waiting for full recompute. That is the
  // trigger itself only when nothing newer is running. Throws Deadlock if
  // trigger is the only running sequence.
  RequestId preempt(RequestId trigger);

  MetricsReport run_to_completion(std::span<const Request> requests);

  bool done() const;
  Cu clock() const { return clock_; }
  const EngineConfig& config() const { return cfg_; }
  const BlockPool& pool() const { return pool_; }
  const std::vector<Event>& event_log() const { return events_; }
  const std::deque<RequestId>& waiting() const { return waiting_; }
  // Running sequences in admission order.
  const std::vector<RequestId>& running() const { return running_; }
  const SequenceState& sequence(RequestId id) const;
  const EngineSamples& samples() const { return samples_; }

  // Checks every sequence and pool invariant; throws std::logic_error with a
  // description of the first violation.
  void check_invariants() const;

  MetricsReport report() const;

 private:
  SequenceState& seq(RequestId id);
  bool arrived(RequestId id) const;
  std::optional<StepPlan> plan_decode();
  void finish(SequenceState& s, Cu now);
  void release_static_batch();
  void sample_pool();
  void log(Cu time, EventKind kind, std::vector<RequestId> members,
           std::string detail);

  EngineConfig cfg_;
  BlockPool pool_;
  Cu clock_ = 0;
  std::unordered_map<RequestId, SequenceState> seqs_;
  std::deque<RequestId> waiting_;
  std::vector<RequestId> running_;
  std::vector<RequestId> finished_;
  std::vector<RequestId> rejected_;
  // Static mode: finished batch members whose blocks are still held.
  std::vector<BlockTable> held_;
  std::vector<Event> events_;
  EngineSamples samples_;
};

struct RunResult {
  MetricsReport report;
  std::vector<Event> events;
};

// Runs one engine over requests (sorted by arrival) to completion.
RunResult simulate(const EngineConfig& cfg, std::span<const Request> requests);

}  // namespace servesim
