#include "wsol/error.hpp"

namespace wsol {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::InsufficientHeads: return "InsufficientHeads";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DegenerateMap: return "DegenerateMap";
    case ErrorKind::InvalidParam: return "InvalidParam";
    case ErrorKind::NoProposal: return "NoProposal";
    case ErrorKind::InvalidDataset: return "InvalidDataset";
    case ErrorKind::EmptyBackground: return "EmptyBackground";
    case ErrorKind::InvalidLabels: return "InvalidLabels";
    case ErrorKind::DegeneratePooling: return "DegeneratePooling";
    case ErrorKind::Numeric: return "NumericError";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace wsol
