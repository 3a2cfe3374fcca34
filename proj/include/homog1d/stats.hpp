#pragma once

// Statistical utilities shared by the estimators, the experiment harness and
// the test suites: order-robust summation, batch-means confidence intervals,
// one-sample normality tests with asymptotic p-values, and weighted power-law
// fits in log-log coordinates.

#include <cmath>
#include <cstddef>
#include <vector>

namespace homog {

// Compensated accumulator for long sequential reductions.  Neumaier's
// variant of Kahan summation: the correction survives even when a later
// addend dwarfs the running sum, e.g. {1e16, 1, -1e16} sums to exactly 1.
class KahanAccumulator {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            carry_ += (sum_ - t) + x;
        else
            carry_ += (x - t) + sum_;
        sum_ = t;
    }
    double sum() const { return sum_ + carry_; }

  private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

// Pairwise reduction; association pattern depends only on the element count,
// so results are reproducible independent of thread scheduling as long as
// the caller stores partial results in index order.
double pairwise_sum(const double* data, std::size_t n);
double pairwise_sum(const std::vector<double>& data);

// Streaming mean / variance (Welford).
class RunningMoments {
  public:
    void add(double x);
    std::size_t count() const { return n_; }
    double mean() const;
    double variance() const;  // unbiased; requires count() >= 2
    double stddev() const;

  private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct MeanCI {
    double mean = 0.0;
    double half_width = 0.0;  // 95% confidence half-width
    std::size_t n = 0;

    double lower() const { return mean - half_width; }
    double upper() const { return mean + half_width; }
};

// 95% CI for the mean of serially stored values via batch means: values are
// split in index order into n_batches contiguous batches and the batch means
// are treated as an i.i.d. sample (Student-t quantile).
MeanCI batch_means_ci(const std::vector<double>& values, std::size_t n_batches);

// Default batch count for batch_means_ci: 20 once the sample supports it,
// fewer for very small samples.
std::size_t default_batch_count(std::size_t n);

// 95% CI treating the values as i.i.d.
MeanCI mean_ci_iid(const std::vector<double>& values);

// Two-sided 97.5% Student-t quantile (for 95% intervals).
double student_t_975(std::size_t dof);

// Standard normal density / distribution function.
double normal_pdf(double x);
double normal_cdf(double x);

struct TestResult {
    double statistic = 0.0;
    double p_value = 0.0;
};

// One-sample Kolmogorov-Smirnov test against N(mean, variance) with the
// asymptotic p-value (Stephens' finite-n rescaling of the Kolmogorov law).
TestResult ks_test_normal(std::vector<double> sample, double mean, double variance);

// KS critical value at significance alpha for sample size n (reject when the
// KS statistic exceeds it).  Inverts the asymptotic Kolmogorov law.
double ks_critical_value(std::size_t n, double alpha);

// Anderson-Darling normality test with mean and variance estimated from the
// sample; p-value from the D'Agostino-Stephens formulas for that case.
TestResult anderson_darling_normality(std::vector<double> sample);

struct PowerLawFit {
    double slope = 0.0;
    double intercept = 0.0;   // in log coordinates
    double slope_stderr = 0.0;
    double r_squared = 0.0;
};

// Weighted least squares of log y against log x.  ci gives the 95% half
// widths of the y values and feeds the weights via the delta method; pass an
// empty vector for an unweighted fit.  Throws std::invalid_argument when
// fewer than 3 points are supplied or when any y interval reaches zero, in
// which case no meaningful log-scale fit exists.
PowerLawFit fit_loglog(const std::vector<double>& xs,
                       const std::vector<double>& ys,
                       const std::vector<double>& ci = {});

}  // namespace homog
