#include "servesim/bucketing.h"

#include <algorithm>
#include <string>

#include "servesim/errors.h"

namespace servesim {

Tokens select_bucket(Tokens prompt_len, const BucketLadder& ladder) {
  const auto buckets = ladder.buckets();
  const auto it = std::lower_bound(buckets.begin(), buckets.end(), prompt_len);
  if (it == buckets.end()) {
    throw NoBucket("prompt of " + std::to_string(prompt_len) +
                   " tokens exceeds the largest bucket " +
                   std::to_string(ladder.max_bucket()));
  }
  return *it;
}

Tokens padded_prefill_tokens(std::span<const Tokens> prompt_lens,
                             const BucketLadder& ladder) {
  Tokens total = 0;
  for (Tokens len : prompt_lens) total += select_bucket(len, ladder);
  return total;
}

}  // namespace servesim
