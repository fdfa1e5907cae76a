// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace euea {

/// Base class of every error raised by the harness. `kind()` is the stable,
/// machine-readable name printed by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define EUEA_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

EUEA_DEFINE_ERROR(UnknownObject);
EUEA_DEFINE_ERROR(Unreachable);
EUEA_DEFINE_ERROR(MissingContext);
EUEA_DEFINE_ERROR(TransportError);
EUEA_DEFINE_ERROR(ProtocolError);
EUEA_DEFINE_ERROR(Unsupported);
EUEA_DEFINE_ERROR(RecoveryExhausted);
EUEA_DEFINE_ERROR(TooFewScenes);
EUEA_DEFINE_ERROR(EmptyOutput);
EUEA_DEFINE_ERROR(VariantMismatch);
EUEA_DEFINE_ERROR(DimensionMismatch);
EUEA_DEFINE_ERROR(EmbedderUnavailable);
EUEA_DEFINE_ERROR(BackendError);
EUEA_DEFINE_ERROR(UsageError);
EUEA_DEFINE_ERROR(ConfigError);
EUEA_DEFINE_ERROR(FormatError);

#undef EUEA_DEFINE_ERROR

/// Raised by the skill parsers; keeps the text that failed to parse so callers
/// can log it or re-sample.
class ParseFailure : public Error {
 public:
  ParseFailure(const std::string& reason, std::string text)
      : Error("ParseFailure", reason + ": \"" + text + "\""), text_(std::move(text)) {}

  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

}  // namespace euea
