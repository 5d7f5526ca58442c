#include "servesim/service.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <map>
#include <tuple>

#include "json.hpp"
#include "servesim/errors.h"

namespace servesim {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string error_line(const std::string& message) {
  return ordered_json{{"error", message}}.dump();
}

}  // namespace

GatewaySession::GatewaySession(SplitConfig split) : split_(std::move(split)) {
  if (Verdict v = validate_split(split_); !v) throw ConfigError(v.reason);
}

std::vector<std::string> GatewaySession::handle_line(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
  if (line.empty()) return {};

  nlohmann::json msg;
  try {
    msg = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    return {error_line(std::string("invalid JSON: ") + e.what())};
  }
  if (!msg.is_object()) return {error_line("expected a JSON object")};

  if (msg.contains("cmd")) {
    if (msg["cmd"] == "run") return run_batch();
    return {error_line("unknown cmd")};
  }

  auto integer = [&](const char* key) -> std::optional<std::int64_t> {
    auto it = msg.find(key);
    if (it == msg.end() || !it->is_number_integer()) return std::nullopt;
    return it->get<std::int64_t>();
  };
  const auto id = msg.find("id");
  if (id == msg.end() || !id->is_number_unsigned()) {
    return {error_line("'id' must be a non-negative integer")};
  }
  const auto prompt = integer("prompt_tokens");
  const auto output = integer("output_tokens");
  if (!prompt || !output) return {error_line("'prompt_tokens' and 'output_tokens' must be integers")};
  std::int64_t offset = 0;
  if (msg.contains("arrival_offset_cu")) {
    const auto v = integer("arrival_offset_cu");
    if (!v || *v < 0) return {error_line("'arrival_offset_cu' must be a non-negative integer")};
    offset = *v;
  }
  Request r{id->get<RequestId>(), offset, *prompt, *output};
  if (!pending_ids_.insert(r.id).second) {
    return {error_line("duplicate id " + std::to_string(r.id))};
  }
  pending_.push_back(r);
  return {};
}

std::vector<std::string> GatewaySession::run_batch() {
  std::vector<Request> batch = std::move(pending_);
  pending_.clear();
  pending_ids_.clear();
  std::sort(batch.begin(), batch.end(), [](const Request& a, const Request& b) {
    return std::tie(a.arrival_time, a.id) < std::tie(b.arrival_time, b.id);
  });

  PairedRun run;
  try {
    run = dispatch_workload(batch, split_);
  } catch (const Error& e) {
    return {error_line(e.what()), ordered_json{{"done", true}, {"count", 0}}.dump()};
  }

  std::map<RequestId, const RequestRecord*> served_a;
  std::map<RequestId, const RequestRecord*> served_b;
  for (const auto& r : run.a.report.per_request) served_a[r.request_id] = &r;
  for (const auto& r : run.b.report.per_request) served_b[r.request_id] = &r;

  std::sort(batch.begin(), batch.end(),
            [](const Request& a, const Request& b) { return a.id < b.id; });
  std::vector<std::string> out;
  out.reserve(batch.size() + 1);
  for (const Request& r : batch) {
    const Variant v = split_.mode == SplitMode::kShadow ? Variant::kA : route(r.id, split_);
    const auto& served = v == Variant::kA ? served_a : served_b;
    ordered_json line{{"id", r.id}, {"variant", std::string(to_string(v))}};
    if (auto it = served.find(r.id); it != served.end()) {
      line["ttft_cu"] = it->second->ttft_cu;
      line["e2e_cu"] = it->second->e2e_cu;
    } else {
      const EngineConfig& cfg = v == Variant::kA ? split_.variant_a : split_.variant_b;
      line["ttft_cu"] = nullptr;
      line["e2e_cu"] = nullptr;
      line["error"] = "rejected: " + validate_request(r, cfg).reason;
    }
    out.push_back(line.dump());
  }
  out.push_back(ordered_json{{"done", true}, {"count", batch.size()}}.dump());
  return out;
}

namespace {

class Fd {
 public:
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  int get() const { return fd_; }

 private:
  int fd_;
};

[[noreturn]] void sys_fail(const char* what) {
  throw Error(std::string(what) + ": " + std::strerror(errno));
}

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

void serve_connection(int fd, const SplitConfig& split) {
  GatewaySession session(split);
  std::string buffer;
  char chunk[4096];
  auto reply = [&](std::string_view line) {
    for (const std::string& r : session.handle_line(line)) {
      if (!send_all(fd, r + "\n")) return false;
    }
    return true;
  };
  while (true) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (std::size_t nl; (nl = buffer.find('\n', start)) != std::string::npos; start = nl + 1) {
      if (!reply(std::string_view(buffer).substr(start, nl - start))) return;
    }
    buffer.erase(0, start);
  }
  reply(buffer);
}

}  // namespace

void serve_tcp(const SplitConfig& split, std::uint16_t port,
               const std::function<void(std::uint16_t)>& on_listening,
               std::size_t max_connections) {
  if (Verdict v = validate_split(split); !v) throw ConfigError(v.reason);
  Fd listener(::socket(AF_INET, SOCK_STREAM, 0));
  if (listener.get() < 0) sys_fail("socket");
  const int yes = 1;
  ::setsockopt(listener.get(), SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listener.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) sys_fail("bind");
  if (::listen(listener.get(), 8) < 0) sys_fail("listen");
  socklen_t len = sizeof addr;
  if (::getsockname(listener.get(), reinterpret_cast<sockaddr*>(&addr), &len) < 0) {
    sys_fail("getsockname");
  }
  if (on_listening) on_listening(ntohs(addr.sin_port));

  std::size_t served = 0;
  while (max_connections == 0 || served < max_connections) {
    const int client = ::accept(listener.get(), nullptr, nullptr);
    if (client < 0) {
      if (errno == EINTR) continue;
      sys_fail("accept");
    }
    ++served;
    Fd conn(client);
    serve_connection(conn.get(), split);
  }
}

}  // namespace servesim
