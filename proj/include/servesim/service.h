#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "servesim/gateway.h"

namespace servesim {

// Line-delimited JSON protocol of the gateway service.
//
//   client: {"id":7,"prompt_tokens":100,"output_tokens":20,"arrival_offset_cu":0}
//   client: {"cmd":"run"}
//   server: {"id":7,"variant":"A","ttft_cu":128,"e2e_cu":1097}   (one per request)
//   server: {"done":true,"count":1}
//
// Requests are buffered until "run"; the batch is then simulated through
// dispatch_workload and results stream back sorted by id. Rejected requests
// answer with "error" and null timings. Malformed lines answer {"error":...}
// and are otherwise ignored.
class GatewaySession {
 public:
  explicit GatewaySession(SplitConfig split);

  std::vector<std::string> handle_line(std::string_view line);

  std::size_t pending() const { return pending_.size(); }

 private:
  std::vector<std::string> run_batch();

  SplitConfig split_;
  std::vector<Request> pending_;
  std::set<RequestId> pending_ids_;
};

// Listens on 127.0.0.1:port (0 picks a free port) and serves connections one
// at a time, each with a fresh session. on_listening receives the bound port.
// Returns after max_connections connections (0 = forever). Throws Error on
// socket failures.
void serve_tcp(const SplitConfig& split, std::uint16_t port,
               const std::function<void(std::uint16_t)>& on_listening,
               std::size_t max_connections = 0);

}  // namespace servesim
