#pragma once

#include <stdexcept>
#include <string>

namespace elliptest {

/// Base class for all library errors.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// matrix_core
class not_symmetric_error : public error {
 public:
  using error::error;
};
class not_positive_definite_error : public error {
 public:
  using error::error;
};
class dimension_mismatch_error : public error {
 public:
  using error::error;
};

// tyler_solver
class not_enough_samples_error : public error {
 public:
  using error::error;
};
class degenerate_sample_error : public error {
 public:
  using error::error;
};
class no_convergence_error : public error {
 public:
  using error::error;
};

// special_functions
class non_positive_argument_error : public error {
 public:
  using error::error;
};

// test_statistics / null_distribution / test_engine
class invalid_weights_error : public error {
 public:
  using error::error;
};
class truncation_too_small_error : public error {
 public:
  using error::error;
};
class sample_too_small_error : public error {
 public:
  using error::error;
};

// CSV / JSON ingestion
class input_error : public error {
 public:
  using error::error;
};

}  // namespace elliptest
