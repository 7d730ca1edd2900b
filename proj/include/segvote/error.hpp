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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace segvote {

enum class ErrorCode {
  kFileNotFound,
  kMalformedRecord,
  kDuplicateId,
  kEmptyDocument,
  kScorerUnavailable,
  kScorerProtocolError,
  kHandshakeTimeout,
  kVersionMismatch,
  kDegenerateTraining,
  kNonFiniteLoss,
  kEmptyScores,
  kWeightMismatch,
  kEmptySequence,
  kShapeMismatch,
  kMissingTags,
  kEmptyEvaluation,
  kMissingGold,
  kBadCheckpoint,
  kInvalidArgument,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

// Single exception type for every data-level failure in the library. The code
// carries the taxonomy; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class MalformedRecordError : public Error {
 public:
  MalformedRecordError(std::size_t line, const std::string& reason);

  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class VersionMismatchError : public Error {
 public:
  VersionMismatchError(int ours, int theirs);

  int ours() const noexcept { return ours_; }
  int theirs() const noexcept { return theirs_; }

 private:
  int ours_;
  int theirs_;
};

}  // namespace segvote
