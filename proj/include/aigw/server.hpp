#pragma once

#include <memory>
#include <string>
#include <thread>

#include "aigw/gateway.hpp"

namespace aigw {

// HTTP front of the gateway.
//
//   POST /v1/generate        -> NDJSON event stream (chunked)
//   GET  /v1/health
//   POST/GET /v1/models, /v1/deployments, /v1/plans, /v1/pricing
//   GET  /v1/usage?tenant=&period=
//   POST /v1/invoices/build  {"tenant_id","period","pay"?}
//   GET  /v1/ledger/verify
//
// Stream framing: one JSON object per line; token events first, then exactly
// one terminal ("done" with the usage summary, or "error" with a reason
// code). Plan rejections map to 401/403 with the machine-readable reason.
class GatewayServer {
 public:
  GatewayServer(Gateway& gateway, std::string host, int port);
  ~GatewayServer();

  // Binds and serves on a background thread; throws BindFailure.
  void start();

  // Graceful shutdown: stop accepting, cancel in-flight sessions (partial
  // usage is metered), then join.
  void stop();

  int port() const { return port_; }
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Gateway& gateway_;
  std::string host_;
  int port_;
  std::thread serve_thread_;
};

}  // namespace aigw
