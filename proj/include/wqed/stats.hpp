#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace wqed {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;        ///< unbiased (n - 1)
  double fourth_central = 0.0;  ///< biased fourth central moment
};

inline Moments moments(std::span<const double> xs) {
  Moments m;
  const auto n = static_cast<double>(xs.size());
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= n;
  double s2 = 0.0, s4 = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    s2 += d * d;
    s4 += d * d * d * d;
  }
  m.variance = xs.size() > 1 ? s2 / (n - 1.0) : 0.0;
  m.fourth_central = s4 / n;
  return m;
}

/// Welford accumulator for one scalar.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stderr_of_mean() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Per-sample-time accumulators; undefined entries are skipped.
class SeriesStats {
 public:
  explicit SeriesStats(std::size_t n = 0) : acc_(n) {}

  void add(std::span<const double> values) {
    if (acc_.empty()) acc_.resize(values.size());
    if (values.size() != acc_.size()) throw std::invalid_argument("series length mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) acc_[i].add(values[i]);
  }
  void add(std::span<const std::optional<double>> values) {
    if (acc_.empty()) acc_.resize(values.size());
    if (values.size() != acc_.size()) throw std::invalid_argument("series length mismatch");
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i]) acc_[i].add(*values[i]);
  }

  std::size_t size() const noexcept { return acc_.size(); }
  const RunningStats& operator[](std::size_t i) const { return acc_[i]; }

  std::vector<double> means() const {
    std::vector<double> out(acc_.size());
    for (std::size_t i = 0; i < acc_.size(); ++i) out[i] = acc_[i].mean();
    return out;
  }
  std::vector<double> stderrs() const {
    std::vector<double> out(acc_.size());
    for (std::size_t i = 0; i < acc_.size(); ++i) out[i] = acc_[i].stderr_of_mean();
    return out;
  }

 private:
  std::vector<RunningStats> acc_;
};

/// Least-squares fit y = intercept + slope * f(x).
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double residual_ss = 0.0;  ///< sum of squared residuals
};

inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs >= 2 paired points");
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    f.residual_ss += r * r;
  }
  if (x.size() > 2) f.slope_stderr = std::sqrt(f.residual_ss / (n - 2.0) / sxx);
  return f;
}

/// y = a + b ln x.
inline LinearFit fit_log(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size());
  std::transform(x.begin(), x.end(), lx.begin(), [](double v) { return std::log(v); });
  return fit_line(lx, y);
}

/// y = A x^p, fitted in log-log space. Returns slope = p, intercept = ln A.
inline LinearFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size()), ly(y.size());
  std::transform(x.begin(), x.end(), lx.begin(), [](double v) { return std::log(v); });
  std::transform(y.begin(), y.end(), ly.begin(), [](double v) { return std::log(v); });
  return fit_line(lx, ly);
}

/// One-sample Kolmogorov-Smirnov statistic D_n against a continuous CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic p-value P(D_n > d) from the Kolmogorov distribution, with the
/// Stephens small-sample correction sqrt(n) + 0.12 + 0.11/sqrt(n).
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace wqed
