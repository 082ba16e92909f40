#pragma once

#include <stdexcept>
#include <string>

namespace debias {

// Broad error classes; the CLI maps them to process exit codes
// (config -> 2, data -> 3, numerical -> 4).
enum class ErrorKind {
  Config,
  Data,
  Numerical,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string what)
      : std::runtime_error(std::move(what)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& msg) {
  throw Error(ErrorKind::Config, msg);
}

[[noreturn]] inline void throw_data(const std::string& msg) {
  throw Error(ErrorKind::Data, msg);
}

[[noreturn]] inline void throw_numerical(const std::string& msg) {
  throw Error(ErrorKind::Numerical, msg);
}

}  // namespace debias
