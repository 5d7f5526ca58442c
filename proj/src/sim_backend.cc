#include "servesim/sim_backend.h"

#include <algorithm>

#include "servesim/errors.h"

namespace servesim {

std::string_view to_string(StepKind kind) {
  return kind == StepKind::kPrefill ? "prefill" : "decode";
}

StepPlan StepPlan::prefill(std::vector<RequestId> members, Tokens padded_tokens) {
  StepPlan p;
  p.kind = StepKind::kPrefill;
  p.members = std::move(members);
  p.padded_tokens = padded_tokens;
  return p;
}

StepPlan StepPlan::decode(std::vector<RequestId> members, Tokens total_context) {
  StepPlan p;
  p.kind = StepKind::kDecode;
  p.active_count = members.size();
  p.members = std::move(members);
  p.total_context = total_context;
  return p;
}

Cu prefill_step_cost(const StepPlan& plan, const CostModel& cm) {
  if (plan.kind != StepKind::kPrefill) throw WrongKind("prefill cost asked of a decode plan");
  if (plan.members.empty() || plan.padded_tokens <= 0) throw WrongKind("empty prefill plan");
  return cm.c_prefill_per_token * plan.padded_tokens;
}

Cu decode_step_cost(const StepPlan& plan, const CostModel& cm) {
  if (plan.kind != StepKind::kDecode) throw WrongKind("decode cost asked of a prefill plan");
  if (plan.members.empty() || plan.active_count == 0) throw WrongKind("empty decode plan");
  return cm.c_decode_fixed + cm.c_decode_per_seq * static_cast<Cu>(plan.active_count) +
         cm.c_decode_per_ctx * plan.total_context;
}

StepOutcome execute(const StepPlan& plan, const CostModel& cm, Cu now) {
  const Cu cost = plan.kind == StepKind::kPrefill ? prefill_step_cost(plan, cm)
                                                  : decode_step_cost(plan, cm);
  return StepOutcome{now + std::max<Cu>(cost, 1), plan.members};
}

}  // namespace servesim
