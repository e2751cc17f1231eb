#pragma once

#include <stdexcept>
#include <string>

namespace decoyvis {

/// Failure category. The CLI maps each kind onto a fixed exit status.
enum class ErrorKind { validation, extraction, io };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& what) { throw Error(ErrorKind::validation, what); }
[[noreturn]] inline void fail_io(const std::string& what) { throw Error(ErrorKind::io, what); }
[[noreturn]] inline void fail_extraction(const std::string& what) { throw Error(ErrorKind::extraction, what); }

}  // namespace decoyvis
