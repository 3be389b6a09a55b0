#pragma once

#include <stdexcept>
#include <string>

namespace ftsqa {

enum class ErrorKind {
  invalid_argument,
  io,
  parse,
  shape,
  numeric,
  state,
};

struct Error : std::runtime_error {
  ErrorKind kind;
  Error(ErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) {
  throw Error(k, msg);
}

} // namespace ftsqa
