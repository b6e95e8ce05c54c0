#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fact {

// Error categories map 1:1 onto CLI exit codes (see README).
enum class ErrorCategory : int {
  usage = 2,
  io = 3,
  schema = 4,
  invalid_argument = 5,
  numeric = 6,
  degenerate_metric = 7,
  unknown_driver = 8,
  training = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory cat, const std::string& msg)
      : std::runtime_error(msg), cat_(cat) {}
  ErrorCategory category() const noexcept { return cat_; }

 private:
  ErrorCategory cat_;
};

struct InvalidArgumentError : Error {
  explicit InvalidArgumentError(const std::string& m)
      : Error(ErrorCategory::invalid_argument, m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorCategory::io, m) {}
};

struct SchemaError : Error {
  explicit SchemaError(const std::string& m) : Error(ErrorCategory::schema, m) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error(ErrorCategory::numeric, m) {}
};

struct DegenerateTestError : Error {
  explicit DegenerateTestError(const std::string& m)
      : Error(ErrorCategory::degenerate_metric, m) {}
};

struct UndefinedMetricError : Error {
  explicit UndefinedMetricError(const std::string& m)
      : Error(ErrorCategory::degenerate_metric, m) {}
};

struct DegenerateWeightsError : Error {
  explicit DegenerateWeightsError(const std::string& m)
      : Error(ErrorCategory::degenerate_metric, m) {}
};

struct UnknownDriverError : Error {
  explicit UnknownDriverError(const std::string& m)
      : Error(ErrorCategory::unknown_driver, m) {}
};

struct TrainingError : Error {
  explicit TrainingError(const std::string& m)
      : Error(ErrorCategory::training, m) {}
};

// Newton divergence keeps the last finite iterate so callers can inspect it.
struct DivergedError : Error {
  DivergedError(const std::string& m, std::vector<double> beta)
      : Error(ErrorCategory::numeric, m), last_beta(std::move(beta)) {}
  std::vector<double> last_beta;
};

}  // namespace fact
