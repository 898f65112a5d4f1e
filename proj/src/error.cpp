#include "tog/error.hpp"

namespace tog {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::DegenerateBox: return "DegenerateBox";
    case Errc::NonSquareCrop: return "NonSquareCrop";
    case Errc::SideMismatch: return "SideMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::EmptyFirstOperand: return "EmptyFirstOperand";
    case Errc::MalformedPolygon: return "MalformedPolygon";
    case Errc::EmptyMask: return "EmptyMask";
    case Errc::SchemaError: return "SchemaError";
    case Errc::DanglingReference: return "DanglingReference";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::UnknownTask: return "UnknownTask";
    case Errc::EmptySceneMask: return "EmptySceneMask";
    case Errc::AlignmentFailure: return "AlignmentFailure";
    case Errc::EmptyCandidates: return "EmptyCandidates";
    case Errc::UnknownCategory: return "UnknownCategory";
    case Errc::UnknownObject: return "UnknownObject";
    case Errc::MissingAffordance: return "MissingAffordance";
    case Errc::EmptyRegion: return "EmptyRegion";
    case Errc::BackendFailure: return "BackendFailure";
    case Errc::NoGraspInRegion: return "NoGraspInRegion";
    case Errc::UnmappableCrop: return "UnmappableCrop";
    case Errc::Timeout: return "Timeout";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::ProcessExit: return "ProcessExit";
    case Errc::NoGroundTruth: return "NoGroundTruth";
    case Errc::EmptyTrials: return "EmptyTrials";
    case Errc::EmptySplit: return "EmptySplit";
    case Errc::UnknownFormat: return "UnknownFormat";
    case Errc::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace tog
