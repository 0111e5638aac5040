#pragma once

#include <stdexcept>
#include <string>

namespace erw {

// p, q, r outside (0, 1) or not summing to one.
class InvalidProbabilities : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// A memory statistic that cannot arise from any path (c > M, |sigma| > c,
// kernel/statistic mismatch).
class ModelIntegrityError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

// Exact computation requested beyond its size budget.
class BudgetError : public std::length_error {
  public:
    using std::length_error::length_error;
};

// Zero variance, zero-probability conditioning, empty branch.
class DegenerateError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// Statistical test refused because the sample is too small to be meaningful.
class InsufficientSamples : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace erw
