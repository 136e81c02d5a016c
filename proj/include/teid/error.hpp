#pragma once

#include <stdexcept>
#include <string>

namespace teid {

enum class ErrorKind {
  Input,            // malformed files, unknown names, violated preconditions
  NotIdentifiable,  // a graphical criterion or zero pattern rules out identification
  Degenerate,       // singular blocks, vanishing denominators, empty windows
  Misspecified,     // data inconsistent with the assumed factor structure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

// Process exit code for an error kind: 2 input, 3 not identifiable, 4 numerical.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input:
      return 2;
    case ErrorKind::NotIdentifiable:
      return 3;
    case ErrorKind::Degenerate:
    case ErrorKind::Misspecified:
      return 4;
  }
  return 1;
}

}  // namespace teid
