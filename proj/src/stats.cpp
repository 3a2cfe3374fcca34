#include "homog1d/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace homog {

double pairwise_sum(const double* data, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

double pairwise_sum(const std::vector<double>& data) {
    return pairwise_sum(data.data(), data.size());
}

void RunningMoments::add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
}

double RunningMoments::mean() const { return mean_; }

double RunningMoments::variance() const {
    if (n_ < 2) throw std::invalid_argument("variance needs at least 2 samples");
    return m2_ / static_cast<double>(n_ - 1);
}

double RunningMoments::stddev() const { return std::sqrt(variance()); }

double student_t_975(std::size_t dof) {
    // Two-sided 95% quantiles; exact enough for interval reporting.
    static const double table[] = {
        0,     12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262,
        2.228, 2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093,
        2.086, 2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045,
        2.042};
    if (dof == 0) throw std::invalid_argument("t quantile needs dof >= 1");
    if (dof <= 30) return table[dof];
    if (dof <= 60) return 2.042 - (2.042 - 2.000) * (dof - 30) / 30.0;
    if (dof <= 120) return 2.000 - (2.000 - 1.980) * (dof - 60) / 60.0;
    return 1.96;
}

MeanCI batch_means_ci(const std::vector<double>& values, std::size_t n_batches) {
    if (n_batches < 2) throw std::invalid_argument("need at least 2 batches");
    if (values.size() < 2 * n_batches) {
        throw std::invalid_argument("need at least 2 values per batch");
    }
    const std::size_t n = values.size();
    std::vector<double> batch_mean(n_batches);
    // Contiguous batches in index order; remainder spread over the leading
    // batches so every value is used exactly once.
    const std::size_t base = n / n_batches;
    const std::size_t extra = n % n_batches;
    std::size_t pos = 0;
    for (std::size_t b = 0; b < n_batches; ++b) {
        const std::size_t len = base + (b < extra ? 1 : 0);
        batch_mean[b] = pairwise_sum(values.data() + pos, len) /
                        static_cast<double>(len);
        pos += len;
    }
    RunningMoments m;
    for (double bm : batch_mean) m.add(bm);
    MeanCI out;
    out.mean = pairwise_sum(values) / static_cast<double>(n);
    out.half_width = student_t_975(n_batches - 1) * m.stddev() /
                     std::sqrt(static_cast<double>(n_batches));
    out.n = n;
    return out;
}

std::size_t default_batch_count(std::size_t n) {
    if (n >= 40) return 20;
    return std::max<std::size_t>(2, n / 2);
}

MeanCI mean_ci_iid(const std::vector<double>& values) {
    if (values.size() < 2) throw std::invalid_argument("need at least 2 values");
    RunningMoments m;
    for (double v : values) m.add(v);
    MeanCI out;
    out.mean = pairwise_sum(values) / static_cast<double>(values.size());
    out.half_width = student_t_975(std::min<std::size_t>(values.size() - 1, 200)) *
                     m.stddev() / std::sqrt(static_cast<double>(values.size()));
    out.n = values.size();
    return out;
}

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) * 0.3989422804014326779399461;
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.7071067811865475244008444);
}

namespace {

// Kolmogorov asymptotic tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2k^2 lambda^2).
double kolmogorov_tail(double lambda) {
    if (lambda < 1e-8) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 101; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

TestResult ks_test_normal(std::vector<double> sample, double mean, double variance) {
    const std::size_t n = sample.size();
    if (n < 50) {
        throw std::invalid_argument(
            "KS test needs at least 50 samples for the asymptotic p-value");
    }
    if (!(variance > 0.0)) throw std::invalid_argument("KS test needs variance > 0");
    std::sort(sample.begin(), sample.end());
    const double sd = std::sqrt(variance);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = normal_cdf((sample[i] - mean) / sd);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(z - lo, hi - z));
    }
    const double rn = std::sqrt(static_cast<double>(n));
    TestResult out;
    out.statistic = d;
    out.p_value = kolmogorov_tail((rn + 0.12 + 0.11 / rn) * d);
    return out;
}

double ks_critical_value(std::size_t n, double alpha) {
    if (n < 5) throw std::invalid_argument("KS critical value needs n >= 5");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0,1)");
    }
    // Invert the Kolmogorov tail by bisection, then undo the finite-n scaling.
    double lo = 1e-3, hi = 4.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (kolmogorov_tail(mid) > alpha) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double rn = std::sqrt(static_cast<double>(n));
    return 0.5 * (lo + hi) / (rn + 0.12 + 0.11 / rn);
}

TestResult anderson_darling_normality(std::vector<double> sample) {
    const std::size_t n = sample.size();
    if (n < 8) throw std::invalid_argument("AD test needs at least 8 samples");
    std::sort(sample.begin(), sample.end());
    RunningMoments m;
    for (double v : sample) m.add(v);
    const double mu = m.mean();
    const double sd = m.stddev();
    if (!(sd > 0.0)) throw std::invalid_argument("AD test needs spread > 0");

    KahanAccumulator acc;
    for (std::size_t i = 0; i < n; ++i) {
        double zi = normal_cdf((sample[i] - mu) / sd);
        double zr = normal_cdf((sample[n - 1 - i] - mu) / sd);
        zi = std::clamp(zi, 1e-300, 1.0 - 1e-16);
        zr = std::clamp(zr, 1e-300, 1.0 - 1e-16);
        acc.add((2.0 * static_cast<double>(i) + 1.0) *
                (std::log(zi) + std::log1p(-zr)));
    }
    const double a2 = -static_cast<double>(n) -
                      acc.sum() / static_cast<double>(n);
    // Case with estimated mean and variance (D'Agostino & Stephens).
    const double nn = static_cast<double>(n);
    const double a2s = a2 * (1.0 + 0.75 / nn + 2.25 / (nn * nn));
    double p;
    if (a2s <= 0.2) {
        p = 1.0 - std::exp(-13.436 + 101.14 * a2s - 223.73 * a2s * a2s);
    } else if (a2s <= 0.34) {
        p = 1.0 - std::exp(-8.318 + 42.796 * a2s - 59.938 * a2s * a2s);
    } else if (a2s <= 0.6) {
        p = std::exp(0.9177 - 4.279 * a2s - 1.38 * a2s * a2s);
    } else {
        p = std::exp(1.2937 - 5.709 * a2s + 0.0186 * a2s * a2s);
    }
    TestResult out;
    out.statistic = a2s;
    out.p_value = std::clamp(p, 0.0, 1.0);
    return out;
}

PowerLawFit fit_loglog(const std::vector<double>& xs,
                       const std::vector<double>& ys,
                       const std::vector<double>& ci) {
    const std::size_t n = xs.size();
    if (n < 3) throw std::invalid_argument("log-log fit needs at least 3 points");
    if (ys.size() != n || (!ci.empty() && ci.size() != n)) {
        throw std::invalid_argument("log-log fit: size mismatch");
    }
    std::vector<double> lx(n), ly(n), w(n, 1.0);
    bool weighted = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
            throw std::invalid_argument("log-log fit needs positive data");
        }
        if (!ci.empty() && ci[i] > 0.0) {
            if (ys[i] - ci[i] <= 0.0) {
                throw std::invalid_argument(
                    "log-log fit refused: confidence interval reaches zero");
            }
            const double sigma_log = ci[i] / (1.959963984540054 * ys[i]);
            w[i] = 1.0 / (sigma_log * sigma_log);
            weighted = true;
        }
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double sw = 0, swx = 0, swy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        swx += w[i] * lx[i];
        swy += w[i] * ly[i];
    }
    const double xbar = swx / sw;
    const double ybar = swy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w[i] * (lx[i] - xbar) * (lx[i] - xbar);
        sxy += w[i] * (lx[i] - xbar) * (ly[i] - ybar);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("log-log fit: degenerate abscissae");

    PowerLawFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    double rss = 0, tss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        rss += w[i] * r * r;
        tss += w[i] * (ly[i] - ybar) * (ly[i] - ybar);
    }
    fit.r_squared = tss > 0.0 ? 1.0 - rss / tss : 1.0;
    if (weighted) {
        fit.slope_stderr = std::sqrt(1.0 / sxx);
    } else if (n > 2) {
        const double s2 = rss / static_cast<double>(n - 2);
        fit.slope_stderr = std::sqrt(s2 / sxx);
    }
    return fit;
}

}  // namespace homog
