#include "homog1d/limit_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "homog1d/rng.hpp"
#include "homog1d/stats.hpp"

namespace homog {

namespace {

// 8-point Gauss-Legendre rule on [-1, 1], used per dyadic panel of the time
// integrals.
constexpr double kGl8Node[8] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr double kGl8Weight[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

// 3-point rule for the per-cell reductions.
constexpr double kGl3Node[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr double kGl3Weight[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

constexpr int kMaxPanels = 48;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

LimitField::LimitField(HomogenizedModel model, double rhat0)
    : model_(std::move(model)), rhat0_(rhat0) {
    if (!(rhat0 >= 0.0))
        throw std::invalid_argument("rhat0 must be nonnegative");
    cbar_ = std::sqrt(rhat0_) * model_.abar();
}

void LimitField::time_integrals(double t, double x, double y, double* first,
                                double* second) const {
    if (!(t > 0.0)) throw std::invalid_argument("limit field requires t > 0");
    const double d = x - y;
    const double ab = model_.abar();
    // The Gaussian factor underflows to exactly 0 once d^2/(2 ab u^2) > 750;
    // panels entirely below that u contribute nothing.
    const double u_cut = std::fabs(d) / std::sqrt(2.0 * ab * 750.0);
    double acc1 = 0.0, acc2 = 0.0;
    double hi = std::sqrt(t);
    for (int k = 0; k < kMaxPanels && hi >= u_cut; ++k) {
        const double lo = 0.5 * hi;
        const double mid = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        double p1 = 0.0, p2 = 0.0;
        for (int m = 0; m < 8; ++m) {
            const double u = mid + half * kGl8Node[m];
            const double var = ab * u * u;
            const double gauss =
                std::exp(-0.5 * d * d / var) * kInvSqrt2Pi / std::sqrt(var);
            const double s = t - u * u;
            const double two_u = 2.0 * u;
            p1 += kGl8Weight[m] * (-d / var) * gauss * two_u * model_.u_dx(s, y);
            p2 += kGl8Weight[m] * gauss * two_u * model_.u_dxx(s, y);
        }
        acc1 += half * p1;
        acc2 += half * p2;
        hi = lo;
    }
    *first = acc1;
    *second = acc2;
}

double LimitField::green_kernel(double t, double x, double y) const {
    double i1, i2;
    time_integrals(t, x, y, &i1, &i2);
    return -0.5 * cbar_ * model_.abar() * i1;
}

double LimitField::k3_kernel(double t, double x, double y) const {
    double i1, i2;
    time_integrals(t, x, y, &i1, &i2);
    return i2;
}

WhiteNoiseGrid LimitField::default_grid(double t, double x, double h_w) const {
    if (!(t > 0.0)) throw std::invalid_argument("limit field requires t > 0");
    const double spread = model_.datum().spread();
    const double w =
        8.0 * std::sqrt(model_.abar() * t + spread * spread) + 2.0 * h_w;
    return WhiteNoiseGrid(h_w, std::min(x, 0.0) - w, std::max(x, 0.0) + w);
}

KernelTable LimitField::kernel_table(double t, double x,
                                     const WhiteNoiseGrid& grid) const {
    if (!(t > 0.0)) throw std::invalid_argument("limit field requires t > 0");
    KernelTable tb;
    tb.t = t;
    tb.x = x;
    tb.cbar = cbar_;
    tb.abar = model_.abar();
    tb.grid = grid;
    tb.x_edge = grid.edge_index_of(x);
    tb.u_dx_at_x = model_.u_dx(t, x);

    const double h = grid.h;
    const double g_pref = -0.5 * cbar_ * model_.abar();
    const double qvar = model_.abar() * t;
    tb.g_avg.resize(grid.n_cells);
    tb.k3_avg.resize(grid.n_cells);
    tb.v1_a.resize(grid.n_cells);
    tb.v1_b.resize(grid.n_cells);
    KahanAccumulator var_acc;
    for (std::size_t j = 0; j < grid.n_cells; ++j) {
        const double mid = grid.edge(j) + 0.5 * h;
        double g_cell = 0.0, k3_cell = 0.0, a_cell = 0.0, b_cell = 0.0;
        for (int m = 0; m < 3; ++m) {
            const double y = mid + 0.5 * h * kGl3Node[m];
            double i1, i2;
            time_integrals(t, x, y, &i1, &i2);
            g_cell += kGl3Weight[m] * i1;
            k3_cell += kGl3Weight[m] * i2;
            const double qf = heat_kernel(qvar, x - y) * model_.datum().d1(y);
            const double u = 0.5 * (1.0 + kGl3Node[m]);
            a_cell += kGl3Weight[m] * qf * (1.0 - u);
            b_cell += kGl3Weight[m] * qf * u;
        }
        tb.g_avg[j] = g_pref * 0.5 * g_cell;
        tb.k3_avg[j] = 0.5 * k3_cell;
        tb.v1_a[j] = 0.5 * h * a_cell;
        tb.v1_b[j] = 0.5 * h * b_cell;
        var_acc.add(tb.g_avg[j] * tb.g_avg[j] * h);
    }
    tb.variance = var_acc.sum();
    return tb;
}

double LimitField::variance_v(double t, double x) const {
    return kernel_table(t, x, default_grid(t, x)).variance;
}

double variance_v(const KernelTable& table) { return table.variance; }

double covariance_v(const KernelTable& a, const KernelTable& b) {
    if (a.grid.h != b.grid.h)
        throw std::invalid_argument("kernel tables use different cell widths");
    const std::int64_t lo = std::max(a.grid.j_lo, b.grid.j_lo);
    const std::int64_t hi =
        std::min(a.grid.j_lo + static_cast<std::int64_t>(a.grid.n_cells),
                 b.grid.j_lo + static_cast<std::int64_t>(b.grid.n_cells));
    KahanAccumulator acc;
    for (std::int64_t j = lo; j < hi; ++j) {
        acc.add(a.g_avg[static_cast<std::size_t>(j - a.grid.j_lo)] *
                b.g_avg[static_cast<std::size_t>(j - b.grid.j_lo)] * a.grid.h);
    }
    return acc.sum();
}

namespace {
void require_matching_grid(const KernelTable& table, const NoisePath& noise) {
    if (!table.grid.same_geometry(noise.grid()))
        throw std::invalid_argument(
            "noise draw lives on a different grid than the kernel table");
}
}  // namespace

double sample_v(const KernelTable& table, const NoisePath& noise) {
    require_matching_grid(table, noise);
    KahanAccumulator acc;
    for (std::size_t j = 0; j < table.grid.n_cells; ++j)
        acc.add(table.g_avg[j] * noise.increment(j));
    return acc.sum();
}

ComponentSample sample_components(const KernelTable& table,
                                  const NoisePath& noise) {
    require_matching_grid(table, noise);
    ComponentSample out;
    KahanAccumulator v1, v3;
    for (std::size_t j = 0; j < table.grid.n_cells; ++j) {
        v1.add(table.v1_a[j] * noise.edge_value(j) +
               table.v1_b[j] * noise.edge_value(j + 1));
        v3.add(table.k3_avg[j] * noise.increment(j));
    }
    out.v1 = v1.sum();
    out.v2 = table.u_dx_at_x * noise.edge_value(table.x_edge);
    out.v3 = v3.sum();
    return out;
}

double combine_components(const KernelTable& table, const ComponentSample& c) {
    return table.cbar * (-c.v1 + c.v2 + 0.5 * table.abar * c.v3);
}

DiscretePath sample_brownian_path(double sigma, double t, double dt,
                                  double start, std::uint64_t seed) {
    if (!(sigma > 0.0) || !(t > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("brownian path needs positive sigma, t, dt");
    const auto n = static_cast<std::size_t>(std::llround(t / dt));
    if (n == 0) throw std::invalid_argument("dt exceeds the path horizon");
    DiscretePath path;
    path.sigma = sigma;
    path.dt = dt;
    path.positions.reserve(n + 1);
    path.positions.push_back(start);
    NormalSampler draw(seed);
    const double step_sd = sigma * std::sqrt(dt);
    double p = start;
    for (std::size_t k = 0; k < n; ++k) {
        p += step_sd * draw();
        path.positions.push_back(p);
    }
    return path;
}

double OccupationTable::total_time() const {
    KahanAccumulator acc;
    for (double d : density) acc.add(d * bin_width);
    return acc.sum();
}

OccupationTable local_time(const DiscretePath& path, double bin_width) {
    if (!(bin_width > 0.0))
        throw std::invalid_argument("bin width must be positive");
    if (bin_width + 1e-12 < 4.0 * path.sigma * std::sqrt(path.dt))
        throw std::invalid_argument(
            "local-time bins finer than 4 sigma sqrt(dt): histogram would "
            "measure step noise, not occupation");
    if (path.positions.size() < 2)
        throw std::invalid_argument("path carries no steps");

    const std::size_t n = path.positions.size() - 1;
    std::int64_t k_min = 0, k_max = 0;
    std::vector<std::int64_t> bin_of(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k =
            static_cast<std::int64_t>(std::floor(path.positions[i] / bin_width));
        bin_of[i] = k;
        if (i == 0 || k < k_min) k_min = k;
        if (i == 0 || k > k_max) k_max = k;
    }
    std::vector<std::size_t> counts(static_cast<std::size_t>(k_max - k_min + 1), 0);
    for (std::size_t i = 0; i < n; ++i)
        ++counts[static_cast<std::size_t>(bin_of[i] - k_min)];

    OccupationTable table;
    table.y_lo = static_cast<double>(k_min) * bin_width;
    table.bin_width = bin_width;
    table.density.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        table.density[i] =
            static_cast<double>(counts[i]) * path.dt / bin_width;
    return table;
}

FkV3Report feynman_kac_v3(const LimitField& field, const KernelTable& table,
                          std::size_t n_noise, std::size_t n_w_paths, double dt,
                          std::uint64_t seed) {
    if (n_noise < 2 || n_w_paths < 2)
        throw std::invalid_argument("feynman_kac_v3 needs >= 2 draws per level");
    const double sigbar = std::sqrt(table.abar);
    const WhiteNoiseGrid& grid = table.grid;
    const auto m = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(
               std::ceil(4.0 * sigbar * std::sqrt(dt) / grid.h - 1e-9)));
    const double bin_width = static_cast<double>(m) * grid.h;
    // Bins are groups of m cells whose edges are multiples of bin_width; only
    // bins fully inside the grid are usable.
    const std::int64_t k_lo = floor_div(grid.j_lo + m - 1, m);
    const std::int64_t k_hi =
        floor_div(grid.j_lo + static_cast<std::int64_t>(grid.n_cells), m);
    if (k_hi <= k_lo)
        throw std::invalid_argument(
            "local-time bin width incompatible with the noise grid extent");
    const std::size_t n_bins = static_cast<std::size_t>(k_hi - k_lo);

    const InitialDatum& datum = field.model().datum();
    std::vector<double> bin_dw(n_bins);
    std::vector<std::size_t> counts(n_bins);
    std::vector<double> outer_means;
    outer_means.reserve(n_noise);
    RunningMoments inner_noise_var;

    for (std::size_t i = 0; i < n_noise; ++i) {
        const NoisePath noise(grid, derive_seed(seed, seed_stream::noise, i));
        for (std::size_t b = 0; b < n_bins; ++b) {
            const std::int64_t edge_lo = (k_lo + static_cast<std::int64_t>(b)) * m - grid.j_lo;
            bin_dw[b] = noise.edge_value(static_cast<std::size_t>(edge_lo + m)) -
                        noise.edge_value(static_cast<std::size_t>(edge_lo));
        }
        RunningMoments inner;
        for (std::size_t p = 0; p < n_w_paths; ++p) {
            const DiscretePath path = sample_brownian_path(
                sigbar, table.t, dt, table.x,
                derive_seed(seed, seed_stream::path, i, p));
            std::fill(counts.begin(), counts.end(), 0);
            const std::size_t n_steps = path.positions.size() - 1;
            for (std::size_t s = 0; s < n_steps; ++s) {
                const auto k = static_cast<std::int64_t>(
                    std::floor(path.positions[s] / bin_width));
                if (k < k_lo || k >= k_hi)
                    throw std::out_of_range(
                        "Brownian path left the noise extent; enlarge the grid");
                ++counts[static_cast<std::size_t>(k - k_lo)];
            }
            KahanAccumulator wiener;
            for (std::size_t b = 0; b < n_bins; ++b)
                if (counts[b] != 0)
                    wiener.add(static_cast<double>(counts[b]) * bin_dw[b]);
            const double occupation_sum = wiener.sum() * dt / bin_width;
            inner.add(datum.d2(path.positions.back()) * occupation_sum);
        }
        outer_means.push_back(inner.mean());
        inner_noise_var.add(inner.variance() / static_cast<double>(n_w_paths));
    }

    RunningMoments outer;
    for (double v : outer_means) outer.add(v);

    FkV3Report report;
    report.n_noise = n_noise;
    report.n_w_paths = n_w_paths;
    report.dt = dt;
    report.bin_width = bin_width;
    KahanAccumulator quad;
    for (std::size_t j = 0; j < grid.n_cells; ++j)
        quad.add(table.k3_avg[j] * table.k3_avg[j] * grid.h);
    report.var_quadrature = quad.sum();
    report.var_fk = outer.variance() - inner_noise_var.mean();
    report.var_fk_stderr =
        outer.variance() * std::sqrt(2.0 / static_cast<double>(n_noise - 1));
    report.ratio = report.var_quadrature > 0.0
                       ? report.var_fk / report.var_quadrature
                       : 0.0;
    return report;
}

ItoIdentityReport ito_identity_check(const LimitField& field, double t,
                                     double dt, double h_w,
                                     std::size_t n_draws, std::uint64_t seed) {
    if (!(t > 0.0) || !(dt > 0.0) || !(h_w > 0.0))
        throw std::invalid_argument("ito_identity_check needs positive t, dt, h_w");
    if (n_draws < 2)
        throw std::invalid_argument("ito_identity_check needs >= 2 draws");
    const double ab = field.abar();
    const double cb = field.cbar();
    const double sigbar = std::sqrt(ab);
    const auto m = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(
               std::ceil(4.0 * sigbar * std::sqrt(dt) / h_w - 1e-9)));
    const double bin_width = static_cast<double>(m) * h_w;
    const double extent = 8.0 * sigbar * std::sqrt(t) + 2.0 * bin_width + h_w;
    const WhiteNoiseGrid grid(h_w, -extent, extent);

    KahanAccumulator diff_sq, rhs_sq;
    for (std::size_t i = 0; i < n_draws; ++i) {
        const NoisePath noise(grid, derive_seed(seed, seed_stream::noise, i));
        const DiscretePath path = sample_brownian_path(
            sigbar, t, dt, 0.0, derive_seed(seed, seed_stream::path, i));

        KahanAccumulator ito;
        const std::size_t n_steps = path.positions.size() - 1;
        for (std::size_t k = 0; k < n_steps; ++k)
            ito.add(noise.value(path.positions[k]) *
                    (path.positions[k + 1] - path.positions[k]));
        const double lhs =
            cb * (noise.integral_to(path.positions.back()) - ito.sum());

        const OccupationTable occ = local_time(path, bin_width);
        const auto k_base =
            static_cast<std::int64_t>(std::llround(occ.y_lo / bin_width));
        KahanAccumulator wiener;
        for (std::size_t b = 0; b < occ.density.size(); ++b) {
            if (occ.density[b] == 0.0) continue;
            const std::int64_t edge_lo =
                (k_base + static_cast<std::int64_t>(b)) * m - grid.j_lo;
            const std::int64_t edge_hi = edge_lo + m;
            if (edge_lo < 0 ||
                edge_hi > static_cast<std::int64_t>(grid.n_cells))
                throw std::out_of_range(
                    "Brownian path left the noise extent; enlarge the grid");
            wiener.add(occ.density[b] *
                       (noise.edge_value(static_cast<std::size_t>(edge_hi)) -
                        noise.edge_value(static_cast<std::size_t>(edge_lo))));
        }
        const double rhs = 0.5 * cb * ab * wiener.sum();

        diff_sq.add((lhs - rhs) * (lhs - rhs));
        rhs_sq.add(rhs * rhs);
    }

    ItoIdentityReport report;
    report.t = t;
    report.dt = dt;
    report.h_w = h_w;
    report.bin_width = bin_width;
    report.n_draws = n_draws;
    report.rms_diff = std::sqrt(diff_sq.sum() / static_cast<double>(n_draws));
    report.rms_rhs = std::sqrt(rhs_sq.sum() / static_cast<double>(n_draws));
    report.relative_rms =
        report.rms_rhs > 0.0 ? report.rms_diff / report.rms_rhs : 0.0;
    return report;
}

}  // namespace homog
