#pragma once

#include <stdexcept>
#include <string>

namespace imagine {

// Invalid configuration: mismatched shapes, bad flags, malformed config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse, e.g. backward() without a recorded forward pass.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// NaN/Inf in a loss or gradient. `what()` carries the diagnostic dump.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An upstream artifact (dataset, checkpoint) that a command depends on is absent.
class MissingArtifact : public IoError {
 public:
  MissingArtifact(const std::string& path, const std::string& producer)
      : IoError("missing artifact '" + path + "' (produce it with `imagine-rl " + producer + "`)"),
        path_(path),
        producer_(producer) {}

  const std::string& path() const noexcept { return path_; }
  const std::string& producer() const noexcept { return producer_; }

 private:
  std::string path_;
  std::string producer_;
};

}  // namespace imagine
