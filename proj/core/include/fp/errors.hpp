#pragma once

#include <stdexcept>
#include <string>

namespace fp {

// Exit-code contract shared with the CLI: 0 success, 1 usage, 2 data error,
// 3 numerical failure.
class Error : public std::runtime_error {
 public:
  Error(std::string msg, int code) : std::runtime_error(std::move(msg)), code_(code) {}
  [[nodiscard]] int exit_code() const noexcept { return code_; }

 private:
  int code_;
};

class UsageError : public Error {
 public:
  explicit UsageError(std::string msg) : Error(std::move(msg), 1) {}
};

class DataError : public Error {
 public:
  explicit DataError(std::string msg) : Error(std::move(msg), 2) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(std::string msg) : Error(std::move(msg), 3) {}
};

}  // namespace fp
