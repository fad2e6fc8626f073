#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace paae {

// Every failure raised by the library derives from Error. The category
// decides the CLI exit code (see exit_code()).
enum class ErrorKind {
  kShape,
  kInvalidArgument,
  kNumeric,
  kParse,
  kData,
  kConfig,
  kTraining,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error(ErrorKind::kShape, w) {}
};
struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w)
      : Error(ErrorKind::kInvalidArgument, w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::kNumeric, w) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(ErrorKind::kParse, w) {}
};
struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::kData, w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::kConfig, w) {}
};

/// Raised by training when the loss stops being finite.
class TrainingError : public Error {
 public:
  TrainingError(std::size_t epoch, const std::string& w)
      : Error(ErrorKind::kTraining,
              "training diverged at epoch " + std::to_string(epoch) + ": " + w),
        epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

// 0 success, 1 usage/config, 2 data error, 3 numeric/divergence.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidArgument:
      return 1;
    case ErrorKind::kParse:
    case ErrorKind::kData:
    case ErrorKind::kShape:
      return 2;
    case ErrorKind::kNumeric:
    case ErrorKind::kTraining:
      return 3;
  }
  return 1;
}

}  // namespace paae
