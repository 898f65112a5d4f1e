// Protocol test double. Speaks the newline-delimited JSON contract on
// stdio. Modes select a misbehavior after a correct handshake:
//   echo    answer every op with fixed or echoed payloads (default)
//   bad-id  answer with id+1 (client must raise ProtocolError)
//   hang    never answer the first post-handshake request (Timeout)
//   die     exit right after the handshake (ProcessExit)
#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include "tog/protocol.hpp"

using tog::json;

namespace {

void reply(const json& j) {
  std::cout << j.dump() << "\n";
  std::cout.flush();
}

json ok(const json& id, json result) {
  return {{"id", id}, {"ok", true}, {"result", std::move(result)}};
}

json handle(const std::string& op, const json& args) {
  if (op == "segment") {
    // Echo any masks supplied by the caller; a plain image request gets none.
    json masks = json::array();
    for (const auto& m : args.value("masks", json::array()))
      masks.push_back(tog::mask_to_wire(tog::mask_from_wire(m)));
    return {{"masks", masks}};
  }
  if (op == "embed_image" || op == "embed_text" || op == "embed_pair")
    return {{"vector", {1.0, 0.0, 0.0, 0.0}}};
  if (op == "classify") {
    if (args.value("query", "") == "labels")
      return {{"labels", {"thing", "other"}}};
    json logits = json::array();
    for (size_t i = 0; i < args.value("masks", json::array()).size(); ++i)
      logits.push_back({1.0, 0.0});
    return {{"logits", logits}};
  }
  if (op == "affordance_oneshot") {
    // The reference region comes straight back as the prediction.
    return {{"mask", args.at("ref_region")}};
  }
  if (op == "affordance_segment") return {{"predictions", json::array()}};
  if (op == "propose_grasps") return {{"grasps", json::array()}};
  return json();  // caller turns this into an error
}

}  // namespace

int main(int argc, char** argv) {
  std::string mode = argc > 1 ? argv[1] : "echo";
  bool after_hello = false;
  std::string line;
  while (std::getline(std::cin, line)) {
    json req = json::parse(line, nullptr, false);
    if (req.is_discarded()) {
      reply({{"id", -1}, {"ok", false}, {"error", "bad frame"}});
      continue;
    }
    json id = req.value("id", json(-1));
    std::string op = req.value("op", "");

    if (op == "hello") {
      reply(ok(id, {{"kinds",
                     {"segmenter", "image_embedder", "text_embedder",
                      "pair_embedder", "classifier", "affordance_oneshot",
                      "affordance_segmenter", "grasp_proposer"}},
                    {"concurrent", false}}));
      if (mode == "die") return 0;
      after_hello = true;
      continue;
    }
    if (after_hello && mode == "hang") {
      std::this_thread::sleep_for(std::chrono::hours(24));
      return 0;
    }
    if (after_hello && mode == "bad-id") {
      reply(ok(id.get<int>() + 1, json::object()));
      continue;
    }

    json result = handle(op, req.value("args", json::object()));
    if (result.is_null())
      reply({{"id", id}, {"ok", false}, {"error", "unsupported op: " + op}});
    else
      reply(ok(id, std::move(result)));
  }
  return 0;
}
