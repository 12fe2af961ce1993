/* Copyright 2026 The SVF Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "svf/error.hpp"

namespace svf {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNonGravityAlignedPose: return "NonGravityAlignedPose";
    case ErrorCode::kFullyBehindCamera: return "FullyBehindCamera";
    case ErrorCode::kEmptyRegion: return "EmptyRegion";
    case ErrorCode::kEmptyCloud: return "EmptyCloud";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kIntrinsicsMismatch: return "IntrinsicsMismatch";
    case ErrorCode::kSpecInfeasible: return "SpecInfeasible";
    case ErrorCode::kTieSkipped: return "TieSkipped";
    case ErrorCode::kNoNegativeAvailable: return "NoNegativeAvailable";
    case ErrorCode::kOverlapRejected: return "OverlapRejected";
    case ErrorCode::kInsufficientDistractors: return "InsufficientDistractors";
    case ErrorCode::kEmptyDepthRegion: return "EmptyDepthRegion";
    case ErrorCode::kInconsistentCot: return "InconsistentCot";
    case ErrorCode::kAmbiguous: return "Ambiguous";
    case ErrorCode::kJudgeTimeout: return "JudgeTimeout";
    case ErrorCode::kJudgeUnreachable: return "JudgeUnreachable";
    case ErrorCode::kUnparseableAnswer: return "UnparseableAnswer";
    case ErrorCode::kPanelIncomplete: return "PanelIncomplete";
    case ErrorCode::kMalformedCall: return "MalformedCall";
    case ErrorCode::kCallBudgetExceeded: return "CallBudgetExceeded";
    case ErrorCode::kMissingPrediction: return "MissingPrediction";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kUnknownFrame: return "UnknownFrame";
  }
  return "Unknown";
}

}  // namespace svf
