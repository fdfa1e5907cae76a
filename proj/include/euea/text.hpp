// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace euea {

bool iequals(std::string_view a, std::string_view b);
std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Lowercase, collapse whitespace, drop trailing punctuation. Used wherever
/// free text is compared for equality.
std::string canonical_text(std::string_view s);

/// Lowercased alphanumeric word tokens.
std::vector<std::string> word_tokens(std::string_view s);

/// Splits text into whitespace-led tokens whose concatenation is the input:
/// "PickupObject Apple" -> {"PickupObject", " Apple"}.
std::vector<std::string> answer_tokens(std::string_view s);

}  // namespace euea
