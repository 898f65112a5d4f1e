#include "tog/protocol.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "tog/base64.hpp"
#include "tog/dataset.hpp"
#include "tog/image.hpp"

namespace tog {

json mask_to_wire(const BinaryMask& m) {
  json j;
  j["width"] = m.width;
  j["height"] = m.height;
  j["bits"] = base64_encode(pack_bits(m.bits));
  return j;
}

BinaryMask mask_from_wire(const json& j) {
  if (!j.is_object() || !j.contains("width") || !j.contains("height"))
    fail(Errc::ProtocolError, "wire mask needs width and height");
  int w = j.at("width").get<int>();
  int h = j.at("height").get<int>();
  if (w <= 0 || h <= 0) fail(Errc::ProtocolError, "wire mask has bad size");
  if (j.contains("bits")) {
    BinaryMask m;
    m.width = w;
    m.height = h;
    m.bits = unpack_bits(base64_decode(j.at("bits").get<std::string>()),
                         static_cast<size_t>(w) * h);
    return m;
  }
  if (j.contains("polygons")) {
    // Reuse the manifest polygon codec, then rasterize at the wire size.
    json pj;
    pj["polygons"] = j.at("polygons");
    if (j.contains("holes")) pj["holes"] = j.at("holes");
    return mask_from_json(pj, w, h).mask;
  }
  fail(Errc::ProtocolError, "wire mask needs 'bits' or 'polygons'");
}

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

ProcessBackend::ProcessBackend(std::vector<std::string> command,
                               double timeout_s)
    : timeout_s_(timeout_s) {
  if (command.empty()) fail(Errc::ProtocolError, "empty backend command");
  // A write to a dead child must surface as EPIPE -> ProcessExit, not kill
  // the host process.
  static const bool sigpipe_ignored = [] {
    signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)sigpipe_ignored;
  int to_pipe[2], from_pipe[2];
  if (pipe(to_pipe) != 0 || pipe(from_pipe) != 0)
    fail(Errc::ProcessExit, "pipe() failed");
  pid_t pid = fork();
  if (pid < 0) fail(Errc::ProcessExit, "fork() failed");
  if (pid == 0) {
    dup2(to_pipe[0], STDIN_FILENO);
    dup2(from_pipe[1], STDOUT_FILENO);
    close(to_pipe[0]);
    close(to_pipe[1]);
    close(from_pipe[0]);
    close(from_pipe[1]);
    std::vector<char*> argv;
    for (auto& a : command) argv.push_back(a.data());
    argv.push_back(nullptr);
    execvp(argv[0], argv.data());
    _exit(127);
  }
  child_pid_ = pid;
  to_child_ = to_pipe[1];
  from_child_ = from_pipe[0];
  close(to_pipe[0]);
  close(from_pipe[1]);

  json hello = roundtrip(0, "hello", json::object());
  if (!hello.contains("kinds") || !hello.at("kinds").is_array())
    fail(Errc::ProtocolError, "hello response lacks 'kinds'");
  for (const auto& k : hello.at("kinds")) kinds_.push_back(k.get<std::string>());
  concurrent_ = hello.value("concurrent", false);
}

ProcessBackend::~ProcessBackend() { shutdown(true); }

void ProcessBackend::shutdown(bool kill_child) {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (child_pid_ > 0) {
    if (kill_child) kill(child_pid_, SIGKILL);
    waitpid(child_pid_, nullptr, 0);
    child_pid_ = -1;
  }
}

std::string ProcessBackend::read_line(double deadline_s) {
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    double remaining = deadline_s - now_s();
    if (remaining <= 0) {
      shutdown(true);
      fail(Errc::Timeout, "backend did not answer within the deadline");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    int rc = poll(&pfd, 1, static_cast<int>(remaining * 1000) + 1);
    if (rc < 0) {
      if (errno == EINTR) continue;
      shutdown(true);
      fail(Errc::ProcessExit, "poll() failed");
    }
    if (rc == 0) continue;  // deadline re-checked above
    char chunk[4096];
    ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      shutdown(true);
      fail(Errc::ProcessExit, "read from backend failed");
    }
    if (n == 0) {
      shutdown(false);
      fail(Errc::ProcessExit, "backend closed its stream");
    }
    buffer_.append(chunk, static_cast<size_t>(n));
  }
}

json ProcessBackend::roundtrip(int id, const std::string& op, json args) {
  json req;
  req["id"] = id;
  req["op"] = op;
  req["args"] = std::move(args);
  std::string line = req.dump();
  line.push_back('\n');
  size_t off = 0;
  while (off < line.size()) {
    ssize_t n = write(to_child_, line.data() + off, line.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      shutdown(true);
      fail(Errc::ProcessExit, "write to backend failed");
    }
    off += static_cast<size_t>(n);
  }

  std::string resp_line = read_line(now_s() + timeout_s_);
  json resp;
  try {
    resp = json::parse(resp_line);
  } catch (const json::parse_error&) {
    shutdown(true);
    fail(Errc::ProtocolError, "backend sent an unparseable frame");
  }
  if (!resp.is_object() || !resp.contains("id"))
    fail(Errc::ProtocolError, "backend frame lacks an id");
  if (resp.at("id").get<int>() != id)
    fail(Errc::ProtocolError,
         "backend answered id " + resp.at("id").dump() + " to request " +
             std::to_string(id));
  if (!resp.value("ok", false)) {
    std::string msg = resp.value("error", "backend reported failure");
    fail(Errc::BackendFailure, msg);
  }
  return resp.value("result", json::object());
}

json ProcessBackend::call(const std::string& op, json args) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (child_pid_ < 0) fail(Errc::ProcessExit, "backend process is gone");
  return roundtrip(next_id_++, op, std::move(args));
}

namespace {

// Scratch space for crops shipped by path.
class ScratchDir {
 public:
  ScratchDir() {
    dir_ = std::filesystem::temp_directory_path() /
           ("tog-backend-" + std::to_string(getpid()) + "-" +
            std::to_string(reinterpret_cast<uintptr_t>(this)));
    std::filesystem::create_directories(dir_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::string save(const ImageU8& img) {
    auto path = dir_ / ("crop-" + std::to_string(counter_++) + ".ppm");
    save_ppm(img, path);
    return path.string();
  }

 private:
  std::filesystem::path dir_;
  int counter_ = 0;
};

class ExternalBackends : public Segmenter,
                         public ImageEmbedder,
                         public TextEmbedder,
                         public PairEmbedder,
                         public Classifier,
                         public AffordanceOneShot,
                         public AffordanceSegmenter,
                         public GraspProposer {
 public:
  explicit ExternalBackends(const ExternalBackendOptions& opts)
      : proc_(opts.command, opts.timeout_s) {}

  bool concurrent() const { return proc_.concurrent(); }

  std::vector<BinaryMask> segment(const SceneContext& ctx,
                                  const ImageU8& scene) override {
    json args;
    args["scene_id"] = ctx.scene_id;
    args["image_path"] = scratch_.save(scene);
    json res = proc_.call("segment", args);
    std::vector<BinaryMask> out;
    for (const auto& m : res.value("masks", json::array()))
      out.push_back(mask_from_wire(m));
    return out;
  }

  std::vector<double> embed_image(const SceneContext& ctx,
                                  const BinaryMask& candidate,
                                  const ImageU8& crop) override {
    json args;
    args["scene_id"] = ctx.scene_id;
    args["mask"] = mask_to_wire(candidate);
    args["image_path"] = scratch_.save(crop);
    return vector_result(proc_.call("embed_image", args));
  }

  std::vector<double> embed_text(const std::string& description) override {
    json args;
    args["text"] = description;
    return vector_result(proc_.call("embed_text", args));
  }

  std::vector<double> embed_scene(const SceneContext& ctx,
                                  const BinaryMask& candidate,
                                  const ImageU8& crop) override {
    json args;
    args["scene_id"] = ctx.scene_id;
    args["mask"] = mask_to_wire(candidate);
    args["image_path"] = scratch_.save(crop);
    args["side"] = "scene";
    return vector_result(proc_.call("embed_pair", args));
  }

  std::vector<double> embed_reference(const std::string& subcategory,
                                      const ImageU8& crop) override {
    json args;
    args["subcategory"] = subcategory;
    args["image_path"] = scratch_.save(crop);
    args["side"] = "reference";
    return vector_result(proc_.call("embed_pair", args));
  }

  std::vector<std::string> labels() override {
    if (labels_.empty()) {
      json res = proc_.call("classify", {{"query", "labels"}});
      for (const auto& l : res.value("labels", json::array()))
        labels_.push_back(l.get<std::string>());
    }
    return labels_;
  }

  std::vector<std::vector<double>> classify(
      const SceneContext& ctx, const std::vector<const BinaryMask*>& candidates,
      const std::vector<ImageU8>& crops) override {
    json args;
    args["scene_id"] = ctx.scene_id;
    json masks = json::array();
    for (const auto* m : candidates) masks.push_back(mask_to_wire(*m));
    args["masks"] = masks;
    json paths = json::array();
    for (const auto& c : crops) paths.push_back(scratch_.save(c));
    args["image_paths"] = paths;
    json res = proc_.call("classify", args);
    std::vector<std::vector<double>> logits;
    for (const auto& row : res.value("logits", json::array()))
      logits.push_back(row.get<std::vector<double>>());
    return logits;
  }

  BinaryMask predict(const AffordanceOneShotQuery& q) override {
    json args;
    args["scene_id"] = q.scene.scene_id;
    args["mask"] = mask_to_wire(*q.candidate_mask);
    args["scene_crop_path"] = scratch_.save(*q.scene_crop);
    args["ref_crop_path"] = scratch_.save(*q.ref_crop);
    args["ref_region"] = mask_to_wire(*q.ref_region);
    args["polarity"] = polarity_name(q.polarity);
    args["affordance"] = q.affordance;
    json res = proc_.call("affordance_oneshot", args);
    if (!res.contains("mask"))
      fail(Errc::ProtocolError, "affordance_oneshot response lacks 'mask'");
    return mask_from_wire(res.at("mask"));
  }

  std::vector<AffordancePrediction> predict(const SceneContext& ctx,
                                            const BinaryMask& candidate,
                                            const CropTransform&,
                                            const ImageU8& crop) override {
    json args;
    args["scene_id"] = ctx.scene_id;
    args["mask"] = mask_to_wire(candidate);
    args["image_path"] = scratch_.save(crop);
    json res = proc_.call("affordance_segment", args);
    std::vector<AffordancePrediction> out;
    for (const auto& p : res.value("predictions", json::array())) {
      AffordancePrediction pred;
      pred.mask = mask_from_wire(p.at("mask"));
      pred.label = p.at("label").get<std::string>();
      pred.confidence = p.at("confidence").get<double>();
      out.push_back(std::move(pred));
    }
    return out;
  }

  std::vector<GraspRect> propose(const SceneContext& ctx,
                                 const ImageU8& scene) override {
    json args;
    args["scene_id"] = ctx.scene_id;
    args["image_path"] = scratch_.save(scene);
    json res = proc_.call("propose_grasps", args);
    std::vector<GraspRect> out;
    for (const auto& g : res.value("grasps", json::array()))
      out.push_back(grasp_from_json(g));
    return out;
  }

 private:
  static std::vector<double> vector_result(const json& res) {
    if (!res.contains("vector"))
      fail(Errc::ProtocolError, "embedding response lacks 'vector'");
    return res.at("vector").get<std::vector<double>>();
  }

  ProcessBackend proc_;
  ScratchDir scratch_;
  std::vector<std::string> labels_;
};

}  // namespace

BackendSet make_external_backends(const ExternalBackendOptions& opts) {
  auto ext = std::make_shared<ExternalBackends>(opts);
  BackendSet set;
  set.segmenter = ext;
  set.image_embedder = ext;
  set.text_embedder = ext;
  set.pair_embedder = ext;
  set.classifier = ext;
  set.affordance_oneshot = ext;
  set.affordance_segmenter = ext;
  set.grasp_proposer = ext;
  set.concurrent_safe = ext->concurrent();
  return set;
}

namespace {

void reject_unknown_keys(const json& j, const std::string& ctx,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) fail(Errc::SchemaError, ctx + ": unknown key '" + key + "'");
  }
}

double noise_field(const json& j, const char* key) {
  if (!j.contains(key)) return 0;
  if (!j.at(key).is_number())
    fail(Errc::SchemaError, std::string("noise.") + key + " must be a number");
  return j.at(key).get<double>();
}

}  // namespace

BackendSet make_backends_from_config(const json& config, const Dataset& ds) {
  if (!config.is_object() || !config.contains("transport"))
    fail(Errc::SchemaError, "backend config needs a 'transport'");
  std::string transport = config.at("transport").get<std::string>();

  if (transport == "oracle") {
    reject_unknown_keys(config, "backend config", {"transport", "seed", "noise"});
    uint64_t seed = config.contains("seed") ? config.at("seed").get<uint64_t>() : 0;
    NoiseConfig noise;
    if (config.contains("noise")) {
      const json& n = config.at("noise");
      reject_unknown_keys(n, "noise",
                          {"segment_dropout", "fragment_injection",
                           "background_blobs", "boundary_jitter_px",
                           "embedding_sigma", "grasp_jitter_px",
                           "grasp_jitter_deg", "confidence_sigma"});
      noise.segment_dropout = noise_field(n, "segment_dropout");
      noise.fragment_injection =
          static_cast<int>(noise_field(n, "fragment_injection"));
      noise.background_blobs = static_cast<int>(noise_field(n, "background_blobs"));
      noise.boundary_jitter_px = noise_field(n, "boundary_jitter_px");
      noise.embedding_sigma = noise_field(n, "embedding_sigma");
      noise.grasp_jitter_px = noise_field(n, "grasp_jitter_px");
      noise.grasp_jitter_deg = noise_field(n, "grasp_jitter_deg");
      noise.confidence_sigma = noise_field(n, "confidence_sigma");
    }
    if (noise.segment_dropout < 0 || noise.segment_dropout > 1)
      fail(Errc::SchemaError, "segment_dropout must lie in [0, 1]");
    return make_oracle_backends(ds, noise, seed);
  }

  if (transport == "process") {
    reject_unknown_keys(config, "backend config",
                        {"transport", "command", "timeout_s"});
    ExternalBackendOptions opts;
    if (!config.contains("command") || !config.at("command").is_array() ||
        config.at("command").empty())
      fail(Errc::SchemaError, "process transport needs a non-empty 'command'");
    for (const auto& a : config.at("command"))
      opts.command.push_back(a.get<std::string>());
    if (config.contains("timeout_s"))
      opts.timeout_s = config.at("timeout_s").get<double>();
    return make_external_backends(opts);
  }

  fail(Errc::SchemaError, "unknown backend transport: " + transport);
}

}  // namespace tog
