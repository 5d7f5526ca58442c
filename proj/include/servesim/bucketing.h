#pragma once

#include <span>

#include "servesim/config.h"

namespace servesim {

// Smallest bucket >= prompt_len. A prompt exactly on a boundary uses that
// bucket. Throws NoBucket when prompt_len exceeds the largest bucket.
Tokens select_bucket(Tokens prompt_len, const BucketLadder& ladder);

// Sum of selected buckets; the compute a prefill step pays for.
Tokens padded_prefill_tokens(std::span<const Tokens> prompt_lens,
                             const BucketLadder& ladder);

}  // namespace servesim
