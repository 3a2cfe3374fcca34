#include "homog1d/homogenized.hpp"

#include <cmath>
#include <stdexcept>

#include "homog1d/stats.hpp"

namespace homog {

double heat_kernel(double t, double x) {
    if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: t must be > 0");
    return std::exp(-0.5 * x * x / t) * 0.3989422804014326779399461 / std::sqrt(t);
}

double heat_kernel_dx(double t, double x) {
    return -x / t * heat_kernel(t, x);
}

double heat_kernel_dxx(double t, double x) {
    return (x * x / t - 1.0) / t * heat_kernel(t, x);
}

HomogenizedModel::HomogenizedModel(double abar, InitialDatum datum,
                                   std::size_t n_nodes, double trunc_sd)
    : abar_(abar), datum_(datum) {
    if (!(abar > 0.0)) throw std::invalid_argument("HomogenizedModel: abar must be > 0");
    if (n_nodes < 3 || n_nodes % 2 == 0) {
        throw std::invalid_argument("HomogenizedModel: n_nodes must be odd and >= 3");
    }
    if (!(trunc_sd > 1.0)) {
        throw std::invalid_argument("HomogenizedModel: trunc_sd must be > 1");
    }
    node_.resize(n_nodes);
    weight_.resize(n_nodes);
    const double dz = 2.0 * trunc_sd / static_cast<double>(n_nodes - 1);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        const double z = -trunc_sd + dz * static_cast<double>(i);
        const double w = (i == 0 || i + 1 == n_nodes) ? 0.5 : 1.0;
        node_[i] = z;
        weight_[i] = w * dz * std::exp(-0.5 * z * z) * 0.3989422804014326779399461;
    }
}

double HomogenizedModel::convolve(double t, double x, int order) const {
    if (t < 0.0) throw std::invalid_argument("HomogenizedModel: t must be >= 0");
    if (t == 0.0) {
        switch (order) {
            case 0: return datum_.value(x);
            case 1: return datum_.d1(x);
            default: return datum_.d2(x);
        }
    }
    const double sd = std::sqrt(abar_ * t);
    KahanAccumulator acc;
    for (std::size_t i = 0; i < node_.size(); ++i) {
        const double y = x - sd * node_[i];
        double v;
        switch (order) {
            case 0: v = datum_.value(y); break;
            case 1: v = datum_.d1(y); break;
            default: v = datum_.d2(y); break;
        }
        acc.add(weight_[i] * v);
    }
    return acc.sum();
}

double HomogenizedModel::u(double t, double x) const { return convolve(t, x, 0); }
double HomogenizedModel::u_dx(double t, double x) const { return convolve(t, x, 1); }
double HomogenizedModel::u_dxx(double t, double x) const { return convolve(t, x, 2); }

}  // namespace homog
