#pragma once

#include <stdexcept>
#include <string>

namespace ecl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class LabelError : public Error { using Error::Error; };
class EmptySequenceError : public Error { using Error::Error; };
class ReachError : public Error { using Error::Error; };
class InfeasibleDistributionError : public Error { using Error::Error; };
class DatasetIoError : public Error { using Error::Error; };
class IncompleteCoverageError : public Error { using Error::Error; };
class UndefinedStatisticError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class DivergenceError : public Error { using Error::Error; };
class CheckpointError : public Error { using Error::Error; };
class EmptyReportError : public Error { using Error::Error; };

}  // namespace ecl

// Finite-value checks on tensors, compiled in when ECL_CHECK_FINITE is set.
#ifdef ECL_CHECK_FINITE
#define ECL_ASSERT_FINITE(expr, what)                                   \
  do {                                                                  \
    if (!(expr).allFinite()) throw ::ecl::DivergenceError(             \
        std::string("non-finite values in ") + (what));                 \
  } while (0)
#else
#define ECL_ASSERT_FINITE(expr, what) \
  do {                                \
  } while (0)
#endif
