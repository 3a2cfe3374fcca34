#include "homog1d/white_noise.hpp"

#include <cmath>
#include <stdexcept>

#include "homog1d/rng.hpp"

namespace homog {

WhiteNoiseGrid::WhiteNoiseGrid(double cell_width, double lo, double hi) {
    if (!(cell_width > 0.0))
        throw std::invalid_argument("noise cell width must be positive");
    if (!(lo < 0.0) || !(hi > 0.0))
        throw std::invalid_argument(
            "noise extent must straddle 0 (the anchoring edge)");
    h = cell_width;
    j_lo = static_cast<std::int64_t>(std::floor(lo / h + 1e-9));
    const std::int64_t j_hi = static_cast<std::int64_t>(std::ceil(hi / h - 1e-9));
    n_cells = static_cast<std::size_t>(j_hi - j_lo);
}

std::size_t WhiteNoiseGrid::edge_index_of(double x) const {
    const double pos = x / h - static_cast<double>(j_lo);
    const double rounded = std::round(pos);
    if (std::fabs(pos - rounded) > 1e-9)
        throw std::invalid_argument(
            "evaluation point must lie on a noise-grid cell edge");
    if (rounded < 0.0 || rounded > static_cast<double>(n_cells))
        throw std::out_of_range("edge outside the noise grid");
    return static_cast<std::size_t>(rounded);
}

NoisePath::NoisePath(const WhiteNoiseGrid& grid, std::uint64_t seed)
    : grid_(grid), seed_(seed) {
    if (grid_.n_cells == 0) throw std::invalid_argument("empty noise grid");
    NormalSampler draw(seed);
    const double sd = std::sqrt(grid_.h);
    dw_.resize(grid_.n_cells);
    for (auto& inc : dw_) inc = sd * draw();

    // Integrate outward from the zero edge so W(0) = 0 holds exactly, then
    // re-derive the increments as edge differences: rounding in the prefix
    // sum means fl(a + b) - a is not b bit for bit, and the edge values are
    // the primary data downstream, so they win and the 1-ulp adjustment
    // lands on the increments.  Telescoping is exact afterwards.
    const std::size_t z = grid_.zero_edge();
    w_edge_.assign(grid_.n_cells + 1, 0.0);
    for (std::size_t k = z; k < grid_.n_cells; ++k)
        w_edge_[k + 1] = w_edge_[k] + dw_[k];
    for (std::size_t k = z; k-- > 0;) w_edge_[k] = w_edge_[k + 1] - dw_[k];
    for (std::size_t k = 0; k < grid_.n_cells; ++k)
        dw_[k] = w_edge_[k + 1] - w_edge_[k];

    // Per-cell areas are trapezoids (W is linear on each cell).
    area_edge_.assign(grid_.n_cells + 1, 0.0);
    for (std::size_t k = z; k < grid_.n_cells; ++k)
        area_edge_[k + 1] =
            area_edge_[k] + 0.5 * grid_.h * (w_edge_[k] + w_edge_[k + 1]);
    for (std::size_t k = z; k-- > 0;)
        area_edge_[k] =
            area_edge_[k + 1] - 0.5 * grid_.h * (w_edge_[k] + w_edge_[k + 1]);
}

std::size_t NoisePath::cell_of(double x) const {
    if (x < grid_.lo() || x > grid_.hi())
        throw std::out_of_range("point outside the noise grid extent");
    const double pos = (x - grid_.lo()) / grid_.h;
    std::size_t c = static_cast<std::size_t>(pos);
    if (c >= grid_.n_cells) c = grid_.n_cells - 1;
    return c;
}

double NoisePath::value(double x) const {
    const std::size_t c = cell_of(x);
    const double frac = (x - grid_.edge(c)) / grid_.h;
    return w_edge_[c] + frac * (w_edge_[c + 1] - w_edge_[c]);
}

double NoisePath::integral_to(double z) const {
    const std::size_t c = cell_of(z);
    const double xi = z - grid_.edge(c);
    const double slope = dw_[c] / grid_.h;
    return area_edge_[c] + w_edge_[c] * xi + 0.5 * slope * xi * xi;
}

}  // namespace homog
