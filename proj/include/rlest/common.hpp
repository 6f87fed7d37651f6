#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rlest {

// Thrown when an otherwise valid computation loses its numerical footing
// (underflow of every posterior weight, eigensolver breakdown, ...).
class numerical_failure : public std::runtime_error {
 public:
  explicit numerical_failure(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an operation is not defined for the given variant
// (e.g. sampling a matrix from an ensemble given only by its spectrum).
class unsupported_operation : public std::logic_error {
 public:
  explicit unsupported_operation(const std::string& what) : std::logic_error(what) {}
};

// Pairwise (cascade) summation. Order-independent entry point for every
// reduction whose result lands in a CSV: the trial values are written to
// slots first, then reduced here single-threaded.
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);

// Unbiased sample standard deviation (n-1 denominator).
double sample_stddev(std::span<const double> values);

// Standard error of the mean.
double std_error(std::span<const double> values);

// log(exp(a) + exp(b)) without overflow.
double logsumexp2(double a, double b);

// Streaming log-sum-exp accumulator; also carries weighted moment sums so a
// single enumeration pass can produce posterior averages.
class LogSumExp {
 public:
  void add(double log_term);
  double value() const;
  bool empty() const { return empty_; }

 private:
  double max_ = 0.0;
  double sum_ = 0.0;  // sum of exp(term - max_)
  bool empty_ = true;
};

// Prints a double with 17 significant digits, locale-independent.
std::string format_g17(double v);

// Runs fn(i) for i in [0, count). Work is split in contiguous chunks over
// `threads` std::threads; fn must write only to its own slot(s).
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace rlest
