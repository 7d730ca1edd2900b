// Copyright 2026 The segvote Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "segvote/error.hpp"

namespace segvote {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyDocument: return "EmptyDocument";
    case ErrorCode::kScorerUnavailable: return "ScorerUnavailable";
    case ErrorCode::kScorerProtocolError: return "ScorerProtocolError";
    case ErrorCode::kHandshakeTimeout: return "HandshakeTimeout";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kDegenerateTraining: return "DegenerateTraining";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kEmptyScores: return "EmptyScores";
    case ErrorCode::kWeightMismatch: return "WeightMismatch";
    case ErrorCode::kEmptySequence: return "EmptySequence";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kMissingTags: return "MissingTags";
    case ErrorCode::kEmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::kMissingGold: return "MissingGold";
    case ErrorCode::kBadCheckpoint: return "BadCheckpoint";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

MalformedRecordError::MalformedRecordError(std::size_t line,
                                           const std::string& reason)
    : Error(ErrorCode::kMalformedRecord,
            "line " + std::to_string(line) + ": " + reason),
      line_(line),
      reason_(reason) {}

VersionMismatchError::VersionMismatchError(int ours, int theirs)
    : Error(ErrorCode::kVersionMismatch,
            "ours " + std::to_string(ours) + ", theirs " +
                std::to_string(theirs)),
      ours_(ours),
      theirs_(theirs) {}

}  // namespace segvote
