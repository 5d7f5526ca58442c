#pragma once

#include <vector>

#include "servesim/config.h"
#include "servesim/types.h"

namespace servesim {

enum class StepKind { kPrefill, kDecode };

std::string_view to_string(StepKind kind);

// One engine iteration. Prefill plans carry the padded token total; decode
// plans carry the active sequence count and their summed context.
struct StepPlan {
  StepKind kind = StepKind::kDecode;
  std::vector<RequestId> members;
  Tokens padded_tokens = 0;
  std::size_t active_count = 0;
  Tokens total_context = 0;

  static StepPlan prefill(std::vector<RequestId> members, Tokens padded_tokens);
  static StepPlan decode(std::vector<RequestId> members, Tokens total_context);

  bool operator==(const StepPlan&) const = default;
};

struct StepOutcome {
  Cu finish_time = 0;
  // One token credited to each member, in plan order.
  std::vector<RequestId> emitted;

  bool operator==(const StepOutcome&) const = default;
};

// Both throw WrongKind for a plan of the other kind or an empty plan.
Cu prefill_step_cost(const StepPlan& plan, const CostModel& cm);
Cu decode_step_cost(const StepPlan& plan, const CostModel& cm);

// finish_time = now + cost, clamped so the clock always advances by at
// least 1 cu.
StepOutcome execute(const StepPlan& plan, const CostModel& cm, Cu now);

}  // namespace servesim
