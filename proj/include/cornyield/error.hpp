#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cornyield {

enum class ErrorKind {
    Shape,
    Parse,
    Schema,
    Gap,
    Consistency,
    Duplicate,
    Range,
    Coverage,
    Config,
    Domain,
    Plan,
    Combination,
    Join,
    Numeric,
    Io,
    Magic,
    Version,
    Truncation,
    Usage,
};

std::string_view to_string(ErrorKind kind);

// Every error raised by the library carries a kind and the module it came
// from; what() renders as "<module>: <kind> error: <message>".
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string_view module, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& module() const noexcept { return module_; }
    const std::string& message() const noexcept { return message_; }

private:
    ErrorKind kind_;
    std::string module_;
    std::string message_;
};

}  // namespace cornyield
