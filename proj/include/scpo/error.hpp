#pragma once

#include <stdexcept>
#include <string>

namespace scpo {

// Every failure carries a stable class name so the CLI can print a
// machine-parsable first token.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SCPO_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

SCPO_DEFINE_ERROR(MalformedAnswer);
SCPO_DEFINE_ERROR(MixedProblem);
SCPO_DEFINE_ERROR(DegeneratePool);
SCPO_DEFINE_ERROR(EmptyDataset);
SCPO_DEFINE_ERROR(UnknownAnswer);
SCPO_DEFINE_ERROR(NonFiniteLoss);
SCPO_DEFINE_ERROR(BackendUnavailable);
SCPO_DEFINE_ERROR(MissingGold);
SCPO_DEFINE_ERROR(Degenerate);
SCPO_DEFINE_ERROR(ValidationError);
SCPO_DEFINE_ERROR(SchemaError);
SCPO_DEFINE_ERROR(IoError);

#undef SCPO_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line, int column)
      : Error("ParseError", message + " (line " + std::to_string(line) +
                                ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace scpo
