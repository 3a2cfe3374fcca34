#include "homog1d/initial_datum.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace homog {
namespace {

constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;

// Quintic smoothstep and derivatives on [0,1]: value, slope and curvature
// vanish at both ends, so compositions stay C^2.
inline double s5(double v) { return v * v * v * (10.0 + v * (-15.0 + 6.0 * v)); }
inline double s5_d1(double v) { return v * v * (30.0 + v * (-60.0 + 30.0 * v)); }
inline double s5_d2(double v) { return v * (60.0 + v * (-180.0 + 120.0 * v)); }

}  // namespace

InitialDatum InitialDatum::gaussian(double width) {
    if (!(width > 0.0)) throw std::invalid_argument("gaussian datum: width must be > 0");
    return InitialDatum(Kind::gaussian_bump, width, 0.0);
}

InitialDatum InitialDatum::compact_bump(double halfwidth, double height) {
    if (!(halfwidth > 0.0)) {
        throw std::invalid_argument("compact bump: halfwidth must be > 0");
    }
    if (!(height > 0.0)) throw std::invalid_argument("compact bump: height must be > 0");
    return InitialDatum(Kind::smooth_compact_bump, halfwidth, height);
}

InitialDatum InitialDatum::plateau(double core_halfwidth, double ramp_width) {
    if (!(core_halfwidth > 0.0) || !(ramp_width > 0.0)) {
        throw std::invalid_argument("plateau datum: widths must be > 0");
    }
    return InitialDatum(Kind::plateau, core_halfwidth, ramp_width);
}

double InitialDatum::value(double x) const {
    switch (kind_) {
        case Kind::gaussian_bump: {
            const double z = x / p1_;
            return inv_sqrt_2pi / p1_ * std::exp(-0.5 * z * z);
        }
        case Kind::smooth_compact_bump: {
            const double u = x / p1_;
            const double s = 1.0 - u * u;
            if (s <= 0.0) return 0.0;
            return p2_ * std::exp(-1.0 / s);
        }
        case Kind::plateau: {
            const double ax = std::fabs(x);
            if (ax <= p1_) return 1.0;
            if (ax >= p1_ + p2_) return 0.0;
            return s5((p1_ + p2_ - ax) / p2_);
        }
    }
    return 0.0;
}

double InitialDatum::d1(double x) const {
    switch (kind_) {
        case Kind::gaussian_bump: {
            const double z = x / p1_;
            return -z / p1_ * inv_sqrt_2pi / p1_ * std::exp(-0.5 * z * z);
        }
        case Kind::smooth_compact_bump: {
            const double u = x / p1_;
            const double s = 1.0 - u * u;
            if (s <= 0.0) return 0.0;
            return p2_ * std::exp(-1.0 / s) * (-2.0 * u / (s * s)) / p1_;
        }
        case Kind::plateau: {
            const double ax = std::fabs(x);
            if (ax <= p1_ || ax >= p1_ + p2_) return 0.0;
            const double v = (p1_ + p2_ - ax) / p2_;
            const double sign = x > 0.0 ? 1.0 : -1.0;
            return -sign / p2_ * s5_d1(v);
        }
    }
    return 0.0;
}

double InitialDatum::d2(double x) const {
    switch (kind_) {
        case Kind::gaussian_bump: {
            const double z = x / p1_;
            const double w2 = p1_ * p1_;
            return (z * z - 1.0) / w2 * inv_sqrt_2pi / p1_ * std::exp(-0.5 * z * z);
        }
        case Kind::smooth_compact_bump: {
            const double u = x / p1_;
            const double s = 1.0 - u * u;
            if (s <= 0.0) return 0.0;
            const double u2 = u * u;
            const double g2 = 4.0 * u2 / (s * s * s * s) - 2.0 / (s * s) -
                              8.0 * u2 / (s * s * s);
            return p2_ * std::exp(-1.0 / s) * g2 / (p1_ * p1_);
        }
        case Kind::plateau: {
            const double ax = std::fabs(x);
            if (ax <= p1_ || ax >= p1_ + p2_) return 0.0;
            const double v = (p1_ + p2_ - ax) / p2_;
            return s5_d2(v) / (p2_ * p2_);
        }
    }
    return 0.0;
}

double InitialDatum::support_radius() const {
    switch (kind_) {
        case Kind::gaussian_bump:
            return std::numeric_limits<double>::infinity();
        case Kind::smooth_compact_bump:
            return p1_;
        case Kind::plateau:
            return p1_ + p2_;
    }
    return 0.0;
}

double InitialDatum::spread() const {
    switch (kind_) {
        case Kind::gaussian_bump:
            return p1_;
        case Kind::smooth_compact_bump:
            return p1_;
        case Kind::plateau:
            return p1_ + p2_;
    }
    return 0.0;
}

std::string InitialDatum::describe() const {
    std::ostringstream out;
    switch (kind_) {
        case Kind::gaussian_bump:
            out << "gaussian_bump(width=" << p1_ << ")";
            break;
        case Kind::smooth_compact_bump:
            out << "smooth_compact_bump(halfwidth=" << p1_ << ", height=" << p2_ << ")";
            break;
        case Kind::plateau:
            out << "plateau(core=" << p1_ << ", ramp=" << p2_ << ")";
            break;
    }
    return out.str();
}

}  // namespace homog
