#pragma once

#include <stdexcept>
#include <string>

namespace ctxgs {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Input,       // unreadable file, missing property, bad argument
  Data,        // validation failure, corrupt or truncated stream, CRC mismatch
  Sequencing,  // a context was requested before its parent was decoded
  Overflow,    // quantized symbol outside the 16-bit alphabet
  Divergence,  // non-finite training loss
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace ctxgs
