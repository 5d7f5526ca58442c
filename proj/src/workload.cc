#include "servesim/workload.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <istream>
#include <string_view>

#include "servesim/errors.h"

namespace servesim {

Verdict validate_spec(const WorkloadSpec& spec) {
  auto range_ok = [&](Tokens lo, Tokens hi) {
    return lo >= 1 && lo <= hi && hi <= spec.max_model_len;
  };
  if (!range_ok(spec.prompt_min, spec.prompt_max)) {
    return Verdict::reject("prompt range must satisfy 1 <= lo <= hi <= " +
                           std::to_string(spec.max_model_len));
  }
  if (!range_ok(spec.output_min, spec.output_max)) {
    return Verdict::reject("output range must satisfy 1 <= lo <= hi <= " +
                           std::to_string(spec.max_model_len));
  }
  if (spec.arrival == ArrivalPattern::kPoisson && !(spec.rate > 0.0 && std::isfinite(spec.rate))) {
    return Verdict::reject("arrival rate must be > 0");
  }
  return Verdict::accept();
}

std::vector<Request> generate(const WorkloadSpec& spec) {
  if (Verdict v = validate_spec(spec); !v) throw InvalidSpec(v.reason);
  SplitMix64 rng(spec.seed);
  const double mean_gap = 1e6 / spec.rate;
  double t = 0.0;
  std::vector<Request> out;
  out.reserve(spec.n_requests);
  for (std::size_t i = 0; i < spec.n_requests; ++i) {
    Request r;
    r.id = i;
    if (spec.arrival == ArrivalPattern::kPoisson) {
      t += -std::log1p(-rng.next_unit()) * mean_gap;
      r.arrival_time = static_cast<Cu>(std::floor(t));
    }
    r.prompt_len = rng.next_in(spec.prompt_min, spec.prompt_max);
    r.target_output_len = rng.next_in(spec.output_min, spec.output_max);
    out.push_back(r);
  }
  return out;
}

void save_trace(std::ostream& out, const std::vector<Request>& requests) {
  out << kTraceHeader << '\n';
  for (const Request& r : requests) {
    out << r.arrival_time << ',' << r.prompt_len << ',' << r.target_output_len << '\n';
  }
}

void save_trace(const std::filesystem::path& path, const std::vector<Request>& requests) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  save_trace(out, requests);
  if (!out) throw Error("failed writing " + path.string());
}

namespace {

std::int64_t parse_field(std::string_view field, std::size_t line_no, const char* name) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(line_no, std::string("bad ") + name + " '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::vector<Request> load_trace(std::istream& in) {
  std::vector<Request> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      if (line != kTraceHeader) throw ParseError(line_no, "expected header '" + std::string(kTraceHeader) + "'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;

    std::string_view rest(line);
    std::string_view fields[3];
    for (int i = 0; i < 3; ++i) {
      const auto comma = rest.find(',');
      if ((i < 2) != (comma != std::string_view::npos)) {
        throw ParseError(line_no, "expected 3 comma-separated fields");
      }
      fields[i] = rest.substr(0, comma);
      rest = i < 2 ? rest.substr(comma + 1) : std::string_view{};
    }
    Request r;
    r.id = out.size();
    r.arrival_time = parse_field(fields[0], line_no, "arrival_time_cu");
    r.prompt_len = parse_field(fields[1], line_no, "prompt_tokens");
    r.target_output_len = parse_field(fields[2], line_no, "output_tokens");
    if (r.arrival_time < 0) throw ParseError(line_no, "negative arrival time");
    if (!out.empty() && r.arrival_time < out.back().arrival_time) {
      throw ParseError(line_no, "ordering: arrival times must be non-decreasing");
    }
    if (r.prompt_len < 1 || r.target_output_len < 1) {
      throw RangeError("line " + std::to_string(line_no) + ": token counts must be >= 1");
    }
    out.push_back(r);
  }
  if (!header_seen) throw ParseError(1, "missing header");
  return out;
}

std::vector<Request> load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open trace " + path.string());
  return load_trace(in);
}

}  // namespace servesim
