#include "homog1d/rng.hpp"

#include <cmath>

namespace homog {
namespace detail {

ZigguratTables::ZigguratTables() {
    const double m1 = 2147483648.0;  // 2^31
    double dn = 3.442619855899;      // tail abscissa
    double tn = dn;
    const double vn = 9.91256303526217e-3;  // layer area

    const double q = vn / std::exp(-0.5 * dn * dn);
    kn[0] = static_cast<std::uint32_t>((dn / q) * m1);
    kn[1] = 0;
    wn[0] = q / m1;
    wn[127] = dn / m1;
    fn[0] = 1.0;
    fn[127] = std::exp(-0.5 * dn * dn);
    for (int i = 126; i >= 1; --i) {
        dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
        kn[i + 1] = static_cast<std::uint32_t>((dn / tn) * m1);
        tn = dn;
        fn[i] = std::exp(-0.5 * dn * dn);
        wn[i] = dn / m1;
    }
}

const ZigguratTables zig_tables;

}  // namespace detail

double NormalSampler::fix(std::int32_t hz, std::uint32_t iz) {
    const auto& t = detail::zig_tables;
    const double r = 3.442619855899;
    for (;;) {
        double x = hz * t.wn[iz];
        if (iz == 0) {
            // Tail sample via Marsaglia's exponential wedge.
            double y;
            do {
                x = -std::log(engine_.uniform_pos()) / r;
                y = -std::log(engine_.uniform_pos());
            } while (y + y < x * x);
            return hz > 0 ? r + x : -(r + x);
        }
        if (t.fn[iz] + engine_.uniform() * (t.fn[iz - 1] - t.fn[iz]) <
            std::exp(-0.5 * x * x)) {
            return x;
        }
        hz = static_cast<std::int32_t>(engine_() & 0xffffffffu);
        iz = static_cast<std::uint32_t>(hz) & 127u;
        const std::uint32_t mag = static_cast<std::uint32_t>(
            hz < 0 ? -static_cast<std::int64_t>(hz) : hz);
        if (mag < t.kn[iz]) return hz * t.wn[iz];
    }
}

double counter_gaussian(std::uint64_t seed, std::int64_t counter) {
    // Box-Muller on two splitmix64 words addressed by the counter.  One trig
    // call per value is acceptable here: this runs once per lattice site at
    // environment construction, not in the path loop.
    const std::uint64_t h = derive_seed(seed, static_cast<std::uint64_t>(counter));
    const std::uint64_t w1 = mix64(h ^ 0xa5a5a5a5a5a5a5a5ULL);
    const std::uint64_t w2 = mix64(h ^ 0x5a5a5a5a5a5a5a5aULL);
    const double u1 = static_cast<double>((w1 >> 11) + 1) * 0x1.0p-53;  // (0,1]
    const double u2 = static_cast<double>(w2 >> 11) * 0x1.0p-53;       // [0,1)
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace homog
