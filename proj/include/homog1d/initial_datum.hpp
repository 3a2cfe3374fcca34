#pragma once

// Smooth initial data for the diffusion problems.  Three families:
//
//   * gaussian(width): the centered Gaussian density with std dev `width`
//     (convenient because every heat-semigroup action stays in closed form);
//   * compact_bump(halfwidth, height): the classical C^infinity bump
//     height * exp(-1 / (1 - (x/halfwidth)^2)) on (-halfwidth, halfwidth);
//   * plateau(core_halfwidth, ramp_width): identically 1 on [-core, core],
//     falling to 0 through quintic C^2 ramps.  Its derivative vanishes on the
//     whole core, which several degenerate-behavior tests rely on.
//
// First and second derivatives are analytic; estimators never difference the
// datum numerically.

#include <limits>
#include <string>

namespace homog {

class InitialDatum {
  public:
    enum class Kind { gaussian_bump, smooth_compact_bump, plateau };

    static InitialDatum gaussian(double width);
    static InitialDatum compact_bump(double halfwidth, double height);
    static InitialDatum plateau(double core_halfwidth, double ramp_width);

    double value(double x) const;
    double d1(double x) const;
    double d2(double x) const;

    Kind kind() const { return kind_; }
    std::string describe() const;

    // Radius beyond which the datum vanishes identically; +infinity for the
    // Gaussian family.
    double support_radius() const;

    // Finite length scale of the datum (width, halfwidth, or core + ramp),
    // used to size integration windows.
    double spread() const;

    // Raw constructor parameters, for serialization.
    double param1() const { return p1_; }
    double param2() const { return p2_; }

  private:
    InitialDatum(Kind kind, double p1, double p2) : kind_(kind), p1_(p1), p2_(p2) {}

    Kind kind_;
    double p1_;  // width / halfwidth / core halfwidth
    double p2_;  // unused / height / ramp width
};

}  // namespace homog
