#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wsol {

enum class ErrorKind {
  Io,
  Format,
  InsufficientHeads,
  InvalidInput,
  DegenerateMap,
  InvalidParam,
  NoProposal,
  InvalidDataset,
  EmptyBackground,
  InvalidLabels,
  DegeneratePooling,
  Numeric,
};

std::string_view to_string(ErrorKind kind);

/// Every library failure is reported as an Error carrying its kind, so callers
/// (the CLI in particular) can map failures to exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace wsol
