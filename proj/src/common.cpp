#include "rlest/common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <thread>

namespace rlest {

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double m = mean(values);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (values[i] - m) * (values[i] - m);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(n - 1));
}

double std_error(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  return sample_stddev(values) / std::sqrt(static_cast<double>(values.size()));
}

double logsumexp2(double a, double b) {
  if (a < b) std::swap(a, b);
  if (std::isinf(a) && a < 0) return a;  // both -inf
  return a + std::log1p(std::exp(b - a));
}

void LogSumExp::add(double log_term) {
  if (std::isinf(log_term) && log_term < 0) {
    if (empty_) return;  // keep empty until a finite term arrives
    return;
  }
  if (empty_) {
    max_ = log_term;
    sum_ = 1.0;
    empty_ = false;
    return;
  }
  if (log_term <= max_) {
    sum_ += std::exp(log_term - max_);
  } else {
    sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
    max_ = log_term;
  }
}

double LogSumExp::value() const {
  if (empty_) return -std::numeric_limits<double>::infinity();
  return max_ + std::log(sum_);
}

std::string format_g17(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  const std::size_t nthreads =
      std::min<std::size_t>(std::max(threads, 1), count);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  const std::size_t chunk = (count + nthreads - 1) / nthreads;
  for (std::size_t t = 0; t < nthreads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace rlest
