#include "servesim/scheduler.h"

#include <algorithm>
#include <stdexcept>
#include <tuple>
#include <unordered_set>

#include "servesim/bucketing.h"
#include "servesim/errors.h"

namespace servesim {

namespace {

const EngineConfig& checked(const EngineConfig& cfg) {
  if (Verdict v = validate_config(cfg); !v) throw ConfigError(v.reason);
  return cfg;
}

std::string underscored(std::string s) {
  std::replace(s.begin(), s.end(), ' ', '_');
  return s;
}

auto age_key(const SequenceState& s) {
  return std::make_tuple(s.request.arrival_time, s.request.id);
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kReject: return "reject";
    case EventKind::kPrefill: return "prefill";
    case EventKind::kDecode: return "decode";
    case EventKind::kFinish: return "finish";
    case EventKind::kPreempt: return "preempt";
  }
  return "?";
}

std::string format_event(const Event& e) {
  std::string line = std::to_string(e.time);
  line += ' ';
  line += to_string(e.kind);
  line += ' ';
  for (std::size_t i = 0; i < e.members.size(); ++i) {
    if (i) line += ',';
    line += std::to_string(e.members[i]);
  }
  if (!e.detail.empty()) {
    line += ' ';
    line += e.detail;
  }
  return line;
}

std::string format_event_log(std::span<const Event> events) {
  std::string out;
  for (const Event& e : events) {
    out += format_event(e);
    out += '\n';
  }
  return out;
}

Engine::Engine(EngineConfig cfg)
    : cfg_(checked(cfg)), pool_(cfg_.total_blocks, cfg_.block_size) {}

SequenceState& Engine::seq(RequestId id) { return seqs_.at(id); }

const SequenceState& Engine::sequence(RequestId id) const { return seqs_.at(id); }

bool Engine::arrived(RequestId id) const {
  return seqs_.at(id).request.arrival_time <= clock_;
}

bool Engine::done() const { return waiting_.empty() && running_.empty(); }

void Engine::log(Cu time, EventKind kind, std::vector<RequestId> members,
                 std::string detail) {
  events_.push_back(Event{time, kind, std::move(members), std::move(detail)});
}

void Engine::submit(std::span<const Request> requests) {
  std::vector<Request> batch(requests.begin(), requests.end());
  std::stable_sort(batch.begin(), batch.end(), [](const Request& a, const Request& b) {
    return std::tie(a.arrival_time, a.id) < std::tie(b.arrival_time, b.id);
  });
  if (!batch.empty() && !waiting_.empty()) {
    const Request& tail = seqs_.at(waiting_.back()).request;
    if (std::tie(batch.front().arrival_time, batch.front().id) <
        std::tie(tail.arrival_time, tail.id)) {
      throw std::invalid_argument("submitted requests arrive before queued ones");
    }
  }
  for (const Request& r : batch) {
    if (seqs_.contains(r.id)) {
      throw std::invalid_argument("duplicate request id " + std::to_string(r.id));
    }
    SequenceState s;
    s.request = r;
    if (Verdict v = validate_request(r, cfg_); !v) {
      s.phase = Phase::kRejected;
      rejected_.push_back(r.id);
      log(clock_, EventKind::kReject, {r.id}, "reason=" + underscored(v.reason));
    } else {
      waiting_.push_back(r.id);
    }
    seqs_.emplace(r.id, std::move(s));
  }
  samples_.rejected_count = rejected_.size();
}

std::vector<RequestId> Engine::admit() {
  std::vector<RequestId> admitted;
  if (cfg_.batching == BatchingMode::kStatic && (!running_.empty() || !held_.empty())) {
    return admitted;
  }
  Tokens padded = 0;
  while (!waiting_.empty()) {
    const RequestId id = waiting_.front();
    SequenceState& s = seq(id);
    if (!arrived(id)) break;
    if (running_.size() >= cfg_.max_decode_batch) break;
    const Tokens bucket = select_bucket(s.request.prompt_len, cfg_.bucket_ladder);
    if (padded + bucket > cfg_.prefill_token_budget) break;
    if (!pool_.can_allocate(s.request.prompt_len)) break;

    s.block_table = pool_.allocate_sequence(id, s.request.prompt_len);
    s.phase = Phase::kRunning;
    s.generated_count = 0;
    waiting_.pop_front();
    running_.push_back(id);
    admitted.push_back(id);
    padded += bucket;
  }
  return admitted;
}

std::optional<StepPlan> Engine::plan_step() {
  while (!done()) {
    std::vector<RequestId> admitted = admit();
    if (!admitted.empty()) {
      std::vector<Tokens> prompts;
      prompts.reserve(admitted.size());
      for (RequestId id : admitted) prompts.push_back(seq(id).request.prompt_len);
      const Tokens padded = padded_prefill_tokens(prompts, cfg_.bucket_ladder);
      return StepPlan::prefill(std::move(admitted), padded);
    }
    if (!running_.empty()) return plan_decode();

    const SequenceState& head = seq(waiting_.front());
    if (head.request.arrival_time > clock_) {
      clock_ = head.request.arrival_time;
      continue;
    }
    throw Deadlock("request " + std::to_string(head.id()) + " needs " +
                   std::to_string(blocks_needed(head.request.prompt_len, cfg_.block_size)) +
                   " blocks but the pool only has " + std::to_string(cfg_.total_blocks));
  }
  return std::nullopt;
}

std::optional<StepPlan> Engine::plan_decode() {
  std::vector<RequestId> order = running_;
  std::sort(order.begin(), order.end(), [this](RequestId a, RequestId b) {
    return age_key(seq(a)) < age_key(seq(b));
  });

  std::vector<RequestId> members;
  members.reserve(order.size());
  for (RequestId id : order) {
    SequenceState& s = seq(id);
    if (s.phase != Phase::kRunning) continue;  // preempted earlier in this loop
    bool evicted = false;
    while (pool_.needs_block(s.block_table) && pool_.free_blocks() == 0) {
      const RequestId victim = preempt(id);
      if (victim == id) {
        evicted = true;
        break;
      }
      std::erase(members, victim);
    }
    if (evicted) continue;
    pool_.append_token(s.block_table);
    members.push_back(id);
  }

  Tokens total_context = 0;
  for (RequestId id : members) total_context += seq(id).context_len();
  return StepPlan::decode(std::move(members), total_context);
}

RequestId Engine::preempt(RequestId trigger) {
  if (running_.size() == 1 && running_.front() == trigger) {
    std::size_t held = 0;
    for (const BlockTable& t : held_) held += t.blocks.size();
    throw Deadlock("request " + std::to_string(trigger) + " cannot grow: pool of " +
                   std::to_string(cfg_.total_blocks) + " blocks exhausted with no other running "
                   "sequence to preempt (" + std::to_string(held) +
                   " held by finished batch members)");
  }
  // The newest running sequence, which is the trigger itself when nothing
  // newer runs. The oldest sequence is therefore never evicted.
  const SequenceState* victim = nullptr;
  for (RequestId id : running_) {
    const SequenceState& s = seq(id);
    if (!victim || age_key(s) > age_key(*victim)) victim = &s;
  }
  SequenceState& v = seq(victim->id());
  const std::size_t freed = v.block_table.blocks.size();
  pool_.free_sequence(v.block_table);
  v.phase = Phase::kPreempted;
  v.generated_count = 0;
  ++v.preemptions;
  std::erase(running_, v.id());
  waiting_.push_front(v.id());
  log(clock_, EventKind::kPreempt, {v.id()},
      "trigger=" + std::to_string(trigger) + " freed=" + std::to_string(freed));
  return v.id();
}

void Engine::finish(SequenceState& s, Cu now) {
  s.phase = Phase::kFinished;
  s.finish_time = now;
  std::erase(running_, s.id());
  finished_.push_back(s.id());
  if (cfg_.batching == BatchingMode::kContinuous) {
    pool_.free_sequence(s.block_table);
  } else {
    held_.push_back(std::move(s.block_table));
    s.block_table = BlockTable{s.id(), {}, 0};
  }
  log(now, EventKind::kFinish, {s.id()},
      "ttft=" + std::to_string(*s.ttft - s.request.arrival_time) +
          " e2e=" + std::to_string(now - s.request.arrival_time));
}

void Engine::release_static_batch() {
  for (BlockTable& t : held_) pool_.free_sequence(t);
  held_.clear();
}

void Engine::apply_outcome(const StepPlan& plan, const StepOutcome& outcome) {
  if (outcome.finish_time < clock_) throw std::logic_error("step finishes before the clock");
  const Cu cost = outcome.finish_time - clock_;
  clock_ = outcome.finish_time;

  if (plan.kind == StepKind::kPrefill) {
    log(clock_, EventKind::kPrefill, plan.members,
        "padded=" + std::to_string(plan.padded_tokens) + " cost=" + std::to_string(cost));
  } else {
    log(clock_, EventKind::kDecode, plan.members,
        "active=" + std::to_string(plan.active_count) +
            " ctx=" + std::to_string(plan.total_context) + " cost=" + std::to_string(cost));
  }

  for (RequestId id : outcome.emitted) {
    SequenceState& s = seq(id);
    ++s.generated_count;
    if (!s.ttft) s.ttft = clock_;
    if (s.generated_count == s.request.target_output_len) finish(s, clock_);
  }
  if (cfg_.batching == BatchingMode::kStatic && running_.empty()) release_static_batch();
  sample_pool();
}

void Engine::sample_pool() {
  const PoolStats stats = pool_stats(
      pool_, running_ | std::views::transform([this](RequestId id) -> const BlockTable& {
               return seqs_.at(id).block_table;
             }));
  samples_.peak_block_utilization = std::max(samples_.peak_block_utilization, stats.utilization);
  samples_.internal_frag_sum += stats.internal_frag_tokens;
  ++samples_.sample_count;
}

void Engine::check_invariants() const {
  auto fail = [](const std::string& what) { throw std::logic_error(what); };
  const Tokens bs = cfg_.block_size;

  if (pool_.free_blocks() + pool_.allocated_blocks() != pool_.total_blocks()) {
    fail("block conservation violated");
  }
  std::unordered_set<BlockId> free_set(pool_.free_list().begin(), pool_.free_list().end());
  if (free_set.size() != pool_.free_blocks()) fail("free list holds a block twice");

  std::unordered_set<BlockId> seen;
  auto claim = [&](const BlockTable& t) {
    for (BlockId b : t.blocks) {
      if (!seen.insert(b).second) fail("block " + std::to_string(b) + " in two tables");
      if (free_set.contains(b)) fail("block " + std::to_string(b) + " both free and owned");
      if (pool_.owner(b) != t.request_id) fail("block owner mismatch");
    }
  };

  std::unordered_map<RequestId, int> membership;
  for (RequestId id : waiting_) ++membership[id];
  for (RequestId id : running_) ++membership[id];
  for (RequestId id : finished_) ++membership[id];
  for (RequestId id : rejected_) ++membership[id];
  if (membership.size() != seqs_.size()) fail("request lost from every queue");

  for (const auto& [id, s] : seqs_) {
    if (membership[id] != 1) fail("request " + std::to_string(id) + " in several queues");
    if (s.generated_count > s.request.target_output_len) fail("overgeneration");
    if ((s.phase == Phase::kFinished) != (s.generated_count == s.request.target_output_len)) {
      fail("finished phase disagrees with generated count");
    }
    if (s.phase == Phase::kRunning) {
      const BlockTable& t = s.block_table;
      if (t.num_tokens != s.context_len() - 1) fail("running table out of sync with context");
      if (t.blocks.size() != blocks_needed(t.num_tokens, bs)) fail("running table mis-sized");
      const Tokens slack = t.capacity(bs) - t.num_tokens;
      if (slack < 0 || slack >= bs) fail("internal fragmentation bound violated");
      claim(t);
    } else if (!s.block_table.blocks.empty()) {
      fail("non-running request " + std::to_string(id) + " holds blocks");
    }
  }
  for (const BlockTable& t : held_) claim(t);
  if (seen.size() != pool_.allocated_blocks()) fail("allocated block with no table");

  for (std::size_t i = 1; i < events_.size(); ++i) {
    if (events_[i].time < events_[i - 1].time) fail("event log out of time order");
  }
}

MetricsReport Engine::report() const {
  std::vector<RequestRecord> records;
  records.reserve(finished_.size());
  for (RequestId id : finished_) {
    const SequenceState& s = seqs_.at(id);
    records.push_back(RequestRecord{id, s.request.arrival_time, s.request.prompt_len,
                                    s.request.target_output_len,
                                    *s.ttft - s.request.arrival_time,
                                    *s.finish_time - s.request.arrival_time, s.preemptions});
  }
  return summarize(std::move(records), samples_);
}

MetricsReport Engine::run_to_completion(std::span<const Request> requests) {
  submit(requests);
  while (auto plan = plan_step()) {
    const StepOutcome outcome = execute(*plan, cfg_.cost_model, clock_);
    apply_outcome(*plan, outcome);
  }
  return report();
}

RunResult simulate(const EngineConfig& cfg, std::span<const Request> requests) {
  Engine engine(cfg);
  MetricsReport report = engine.run_to_completion(requests);
  return RunResult{std::move(report), engine.event_log()};
}

}  // namespace servesim
