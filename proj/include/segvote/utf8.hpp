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
#include <string>
#include <string_view>
#include <vector>

namespace segvote::utf8 {

// One decoded code point and where it sits in the source bytes.
struct CodePoint {
  char32_t value;
  std::size_t byte_offset;
  std::size_t byte_length;
};

inline constexpr char32_t kReplacement = 0xFFFD;

// Lenient decoder: every invalid or truncated sequence becomes one U+FFFD
// covering a single byte, so offsets always tile the input.
std::vector<CodePoint> decode(std::string_view text);

bool is_valid(std::string_view text);

void append(std::string& out, char32_t cp);

// Unicode White_Space property.
bool is_space(char32_t cp);

// Simple case folding for Latin, Greek, Cyrillic and Armenian; identity for
// scripts without case. Locale-independent.
char32_t to_lower(char32_t cp);

std::size_t length(std::string_view text);

}  // namespace segvote::utf8
