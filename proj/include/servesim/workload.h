#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "servesim/types.h"

namespace servesim {

// splitmix64 stream. Specified by algorithm so traces reproduce bit-exactly
// on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  // Uniform in [0, 1) with 53 bits of precision.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  // Uniform integer in [lo, hi].
  std::int64_t next_in(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next() % span);
  }

 private:
  std::uint64_t state_;
};

enum class ArrivalPattern { kPoisson, kBurst };

struct WorkloadSpec {
  std::uint64_t seed = 42;
  std::size_t n_requests = 100;
  ArrivalPattern arrival = ArrivalPattern::kPoisson;
  // Requests per 10^6 cu (Poisson only).
  double rate = 100.0;
  Tokens prompt_min = 50;
  Tokens prompt_max = 4000;
  Tokens output_min = 1;
  Tokens output_max = 200;
  Tokens max_model_len = 8192;

  bool operator==(const WorkloadSpec&) const = default;
};

Verdict validate_spec(const WorkloadSpec& spec);

// Requests with ids 0..n-1 in arrival order. Per request the stream yields,
// in order: the inter-arrival gap (Poisson only), the prompt length and the
// output length. Throws InvalidSpec.
std::vector<Request> generate(const WorkloadSpec& spec);

inline constexpr const char* kTraceHeader = "arrival_time_cu,prompt_tokens,output_tokens";

void save_trace(std::ostream& out, const std::vector<Request>& requests);
void save_trace(const std::filesystem::path& path, const std::vector<Request>& requests);

// Ids are assigned 0..n-1 in file order. Throws ParseError (with line number)
// on malformed or out-of-order lines and RangeError on token counts < 1.
std::vector<Request> load_trace(std::istream& in);
std::vector<Request> load_trace(const std::filesystem::path& path);

}  // namespace servesim
