#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "homog1d/homogenized.hpp"
#include "homog1d/limit_field.hpp"
#include "homog1d/rng.hpp"
#include "homog1d/stats.hpp"

using namespace homog;

namespace {

// Reference ensemble constants measured once for the default field spec.
constexpr double kAbar = 0.612702;
constexpr double kRhat0 = 0.113700;

LimitField reference_field() {
    return LimitField(HomogenizedModel(kAbar, InitialDatum::gaussian(1.0)),
                      kRhat0);
}

}  // namespace

TEST_CASE("construction validates rhat0 and exposes cbar") {
    const HomogenizedModel model(kAbar, InitialDatum::gaussian(1.0));
    CHECK_THROWS_AS(LimitField(model, -0.1), std::invalid_argument);
    const LimitField field(model, kRhat0);
    CHECK(field.cbar() ==
          doctest::Approx(std::sqrt(kRhat0) * kAbar).epsilon(1e-12));
    CHECK(field.abar() == kAbar);
}

TEST_CASE("kernels inherit the symmetry of a centered datum") {
    const LimitField field = reference_field();
    // At x = 0 with an even datum, both kernels are even in y.
    for (double y : {0.15, 0.4, 0.83}) {
        CHECK(field.green_kernel(0.5, 0.0, y) ==
              doctest::Approx(field.green_kernel(0.5, 0.0, -y)).epsilon(1e-9));
        CHECK(field.k3_kernel(0.5, 0.0, y) ==
              doctest::Approx(field.k3_kernel(0.5, 0.0, -y)).epsilon(1e-9));
    }
    CHECK(field.green_kernel(0.5, 0.0, 0.3) != 0.0);
}

TEST_CASE("tabulated cell averages track the pointwise kernel") {
    const LimitField field = reference_field();
    const WhiteNoiseGrid grid = field.default_grid(0.5, 0.0);
    const KernelTable table = field.kernel_table(0.5, 0.0, grid);
    REQUIRE(table.g_avg.size() == grid.n_cells);
    // A cell average differs from the midpoint value by O(h^2 g'').
    for (std::size_t i = grid.zero_edge() - 40; i < grid.zero_edge() + 40;
         i += 13) {
        const double mid = 0.5 * (grid.edge(i) + grid.edge(i + 1));
        CHECK(table.g_avg[i] ==
              doctest::Approx(field.green_kernel(0.5, 0.0, mid)).epsilon(5e-3));
    }
}

TEST_CASE("variance is positive, grows with t, and matches the pinned value") {
    const LimitField field = reference_field();
    const double v025 = field.variance_v(0.25, 0.0);
    const double v05 = field.variance_v(0.5, 0.0);
    const double v1 = field.variance_v(1.0, 0.0);
    CHECK(v025 > 0.0);
    CHECK(v025 < v05);
    CHECK(v05 < v1);
    // Frozen from the quadrature at table construction; regression anchor.
    CHECK(v05 == doctest::Approx(3.52008160e-05).epsilon(1e-4));
}

TEST_CASE("sampled variance agrees with the quadrature variance") {
    const LimitField field = reference_field();
    const WhiteNoiseGrid grid = field.default_grid(0.5, 0.0);
    const KernelTable table = field.kernel_table(0.5, 0.0, grid);
    RunningMoments m;
    const std::size_t n = 20000;
    for (std::size_t i = 0; i < n; ++i) {
        m.add(sample_v(table, NoisePath(grid, derive_seed(11, i))));
    }
    // Chi-squared noise on the sample variance is ~1% at n = 2e4.
    CHECK(m.variance() == doctest::Approx(table.variance).epsilon(0.05));
    CHECK(std::fabs(m.mean()) < 4.0 * std::sqrt(table.variance / n));
}

TEST_CASE("samples of the Gaussian field look Gaussian") {
    const LimitField field = reference_field();
    const WhiteNoiseGrid grid = field.default_grid(0.5, 0.0);
    const KernelTable table = field.kernel_table(0.5, 0.0, grid);
    std::vector<double> sample(800);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        sample[i] = sample_v(table, NoisePath(grid, derive_seed(12, i)));
    }
    CHECK(anderson_darling_normality(sample).p_value > 1e-3);
}

TEST_CASE("the component identity holds pathwise") {
    const LimitField field = reference_field();
    const WhiteNoiseGrid grid = field.default_grid(0.5, 0.0);
    const KernelTable table = field.kernel_table(0.5, 0.0, grid);
    double max_defect = 0.0;
    KahanAccumulator sq;
    const std::size_t n = 200;
    for (std::size_t i = 0; i < n; ++i) {
        const NoisePath w(grid, derive_seed(13, i));
        const double v = sample_v(table, w);
        const ComponentSample c = sample_components(table, w);
        max_defect =
            std::max(max_defect, std::fabs(combine_components(table, c) - v));
        sq.add(v * v);
    }
    const double rms = std::sqrt(sq.sum() / n);
    // Far below the 1e-3 acceptance bar; the discretizations are designed to
    // cancel algebraically.
    CHECK(max_defect < 1e-6 * rms);
}

TEST_CASE("evaluation points must sit on a cell edge") {
    const LimitField field = reference_field();
    const WhiteNoiseGrid grid = field.default_grid(0.5, 0.0);
    CHECK_THROWS_AS(field.kernel_table(0.5, 0.0033, grid), std::invalid_argument);
}

TEST_CASE("covariance is symmetric, bounded, and consistent on the diagonal") {
    const LimitField field = reference_field();
    const WhiteNoiseGrid grid = field.default_grid(1.0, 0.0);
    const KernelTable early = field.kernel_table(0.25, 0.0, grid);
    const KernelTable late = field.kernel_table(1.0, 0.0, grid);
    const double cov = covariance_v(early, late);
    CHECK(cov == covariance_v(late, early));
    CHECK(covariance_v(late, late) == doctest::Approx(late.variance).epsilon(1e-12));
    CHECK(std::fabs(cov) <=
          std::sqrt(early.variance * late.variance) + 1e-15);
    // The field is positively correlated across nested times.
    CHECK(cov > 0.0);
}

TEST_CASE("covariance of shifted evaluation points decays") {
    const LimitField field = reference_field();
    const WhiteNoiseGrid grid = field.default_grid(0.5, 3.0, 0.01);
    const KernelTable at0 = field.kernel_table(0.5, 0.0, grid);
    const KernelTable at05 = field.kernel_table(0.5, 0.5, grid);
    const KernelTable at3 = field.kernel_table(0.5, 3.0, grid);
    const double near = covariance_v(at0, at05);
    const double far = covariance_v(at0, at3);
    CHECK(near > 0.0);
    CHECK(std::fabs(far) < near / 3.0);
}

TEST_CASE("k3 cell averages square-integrate to the quadrature variance") {
    // Independent coarse check of the tabulated K3: sum of the pointwise
    // kernel squared against the table's own cells.
    const LimitField field = reference_field();
    const WhiteNoiseGrid grid = field.default_grid(0.5, 0.0);
    const KernelTable table = field.kernel_table(0.5, 0.0, grid);
    KahanAccumulator table_sum, point_sum;
    for (std::size_t i = 0; i < grid.n_cells; ++i) {
        table_sum.add(table.k3_avg[i] * table.k3_avg[i] * grid.h);
        const double mid = 0.5 * (grid.edge(i) + grid.edge(i + 1));
        const double k = field.k3_kernel(0.5, 0.0, mid);
        point_sum.add(k * k * grid.h);
    }
    CHECK(table_sum.sum() == doctest::Approx(point_sum.sum()).epsilon(1e-3));
}

TEST_CASE("brownian paths have the advertised endpoint variance") {
    RunningMoments ends;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        const DiscretePath p = sample_brownian_path(0.8, 0.5, 1e-3, 0.1, derive_seed(21, i));
        CHECK(p.positions.size() == 501);
        ends.add(p.positions.back());
    }
    CHECK(ends.mean() == doctest::Approx(0.1).epsilon(0.25));
    CHECK(ends.variance() == doctest::Approx(0.64 * 0.5).epsilon(0.08));
}

TEST_CASE("binned local time conserves total time and rejects fine bins") {
    DiscretePath path;
    path.sigma = 1.0;
    path.dt = 1e-4;  // 4 sigma sqrt(dt) = 0.04, so 0.05 bins are legal
    path.positions = {0.0, 0.05, 0.10, 0.05};
    const OccupationTable occ = local_time(path, 0.05);
    CHECK(occ.total_time() == doctest::Approx(3e-4).epsilon(1e-12));
    // Left endpoints 0.0, 0.05, 0.10 land in bins [0,.05), [.05,.1), [.1,.15).
    CHECK(occ.bin_width == 0.05);
    REQUIRE(occ.density.size() >= 3);
    const double cell = 1e-4 / 0.05;
    CHECK(occ.density[0] == doctest::Approx(cell).epsilon(1e-12));
    CHECK(occ.density[1] == doctest::Approx(cell).epsilon(1e-12));
    CHECK(occ.density[2] == doctest::Approx(cell).epsilon(1e-12));

    // A bin just under the 4 sigma sqrt(dt) floor samples step noise.
    CHECK_THROWS_AS(local_time(path, 0.03), std::invalid_argument);
}

TEST_CASE("local time of a long path integrates against smooth functions") {
    const DiscretePath p = sample_brownian_path(1.0, 1.0, 1e-3, 0.0, 333);
    const OccupationTable occ = local_time(p, 0.2);
    CHECK(occ.total_time() == doctest::Approx(1.0).epsilon(1e-9));
    // Occupation mass concentrates near the origin for a path started there.
    double near = 0.0, far = 0.0;
    for (std::size_t i = 0; i < occ.density.size(); ++i) {
        const double y = occ.y_lo + (static_cast<double>(i) + 0.5) * occ.bin_width;
        (std::fabs(y) < 1.0 ? near : far) += occ.density[i] * occ.bin_width;
    }
    CHECK(near > far);
}

TEST_CASE("feynman-kac variance construction lands near the quadrature") {
    const LimitField field = reference_field();
    const WhiteNoiseGrid grid = field.default_grid(0.5, 0.0);
    const KernelTable table = field.kernel_table(0.5, 0.0, grid);
    const FkV3Report r = feynman_kac_v3(field, table, 400, 150, 2e-3, 1234);
    CHECK(r.var_quadrature > 0.0);
    CHECK(r.ratio == doctest::Approx(1.0).epsilon(0.35));
    CHECK(r.var_fk_stderr > 0.0);
    CHECK(r.n_noise == 400);
}

TEST_CASE("ito identity check runs and reports a finite mismatch") {
    const LimitField field = reference_field();
    const ItoIdentityReport r = ito_identity_check(field, 0.25, 1e-3, 0.02, 100, 555);
    CHECK(r.n_draws == 100);
    CHECK(r.bin_width >= 4.0 * std::sqrt(field.abar()) * std::sqrt(1e-3) - 1e-12);
    CHECK(r.rms_rhs > 0.0);
    CHECK(r.relative_rms > 0.0);
    CHECK(r.relative_rms < 1.0);  // coarse resolution, but the identity bites
}
