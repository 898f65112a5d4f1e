#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tog/backends.hpp"
#include "tog/maskops.hpp"

namespace tog {

// Wire form of a mask: {"width", "height", "bits": base64(packed row-major
// bits)} or {"width", "height", "polygons": [[x1,y1,...]], "holes": [...]}.
json mask_to_wire(const BinaryMask& m);
BinaryMask mask_from_wire(const json& j);

// Newline-delimited JSON client over a child process's stdin/stdout.
//
// Requests:  {"id": N, "op": "...", "args": {...}}
// Responses: {"id": N, "ok": true, "result": {...}}
//            {"id": N, "ok": false, "error": "..."}
//
// The handshake {"id":0,"op":"hello"} must answer with
// {"kinds": [...], "concurrent": bool}. Errors: Timeout (no newline within
// the deadline; the child is killed), ProcessExit (EOF / dead child),
// ProtocolError (unparseable frame or id mismatch), BackendFailure
// (ok=false response).
class ProcessBackend {
 public:
  ProcessBackend(std::vector<std::string> command, double timeout_s = 30.0);
  ~ProcessBackend();
  ProcessBackend(const ProcessBackend&) = delete;
  ProcessBackend& operator=(const ProcessBackend&) = delete;

  json call(const std::string& op, json args);

  const std::vector<std::string>& kinds() const { return kinds_; }
  bool concurrent() const { return concurrent_; }

 private:
  json roundtrip(int id, const std::string& op, json args);
  std::string read_line(double deadline_s);
  void shutdown(bool kill_child);

  int child_pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  double timeout_s_;
  int next_id_ = 1;
  std::string buffer_;
  std::vector<std::string> kinds_;
  bool concurrent_ = false;
  std::mutex mutex_;  // requests are serialized per process
};

// Adapters mapping the backend interfaces onto a shared ProcessBackend.
// In-memory crops are written to a scratch directory as PPM files and passed
// by path, per the wire contract that images travel as file paths.
struct ExternalBackendOptions {
  std::vector<std::string> command;
  double timeout_s = 30.0;
};

BackendSet make_external_backends(const ExternalBackendOptions& opts);

}  // namespace tog
