#pragma once

#include <stdexcept>
#include <string>

namespace tog {

// Every failure the library can raise, so callers can branch on the kind
// instead of parsing message text.
enum class Errc {
  // geometry
  DegenerateBox,
  NonSquareCrop,
  SideMismatch,
  // mask algebra
  ShapeMismatch,
  EmptyFirstOperand,
  MalformedPolygon,
  EmptyMask,
  // dataset
  SchemaError,
  DanglingReference,
  InvariantViolation,
  UnknownTask,
  EmptySceneMask,
  AlignmentFailure,
  // pipeline
  EmptyCandidates,
  UnknownCategory,
  UnknownObject,
  MissingAffordance,
  EmptyRegion,
  BackendFailure,
  NoGraspInRegion,
  UnmappableCrop,
  // external backend transport
  Timeout,
  ProtocolError,
  ProcessExit,
  // evaluation
  NoGroundTruth,
  EmptyTrials,
  EmptySplit,
  UnknownFormat,
  // io
  IoError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const { return code_; }

  // Pipeline stage the error escaped from ("segmentation", "recognition",
  // "region", "grasp"); empty outside run_tog.
  const std::string& stage() const { return stage_; }
  void set_stage(std::string s) { stage_ = std::move(s); }

 private:
  Errc code_;
  std::string stage_;
};

[[noreturn]] inline void fail(Errc c, const std::string& msg) {
  throw Error(c, msg);
}

}  // namespace tog
