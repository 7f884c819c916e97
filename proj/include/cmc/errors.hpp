#pragma once

#include <stdexcept>
#include <string>

namespace cmc {

/// Invalid configuration or arguments (CLI exit code 1).
class config_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CLI exit code 2).
class data_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A model could not be trained or applied (CLI exit code 3).
class training_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace cmc
