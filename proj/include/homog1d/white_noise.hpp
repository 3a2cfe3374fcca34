#pragma once

// Spatial white noise, discretized as independent Gaussian increments over a
// uniform cell grid.  The integrated path W is piecewise linear with
// W(0) = 0: cells are anchored so that 0 is always a cell edge, which keeps
// the anchoring exact and lets different extents share increments cell by
// cell.  Wiener integrals of tabulated kernels become dot products with the
// increment vector.

#include <cstdint>
#include <vector>

namespace homog {

struct WhiteNoiseGrid {
    double h = 0.01;          // cell width
    std::int64_t j_lo = 0;    // cell i spans [(j_lo + i) h, (j_lo + i + 1) h)
    std::size_t n_cells = 0;

    WhiteNoiseGrid() = default;
    // Covers [lo, hi], snapped outward to cell edges; requires lo < 0 < hi so
    // the anchoring edge is interior.
    WhiteNoiseGrid(double cell_width, double lo, double hi);

    double lo() const { return static_cast<double>(j_lo) * h; }
    double hi() const { return static_cast<double>(j_lo + static_cast<std::int64_t>(n_cells)) * h; }
    double edge(std::size_t k) const {
        return static_cast<double>(j_lo + static_cast<std::int64_t>(k)) * h;
    }
    std::size_t zero_edge() const { return static_cast<std::size_t>(-j_lo); }

    bool same_geometry(const WhiteNoiseGrid& o) const {
        return h == o.h && j_lo == o.j_lo && n_cells == o.n_cells;
    }

    // Edge index of a point that must lie on a cell edge (within 1e-9 h);
    // throws std::invalid_argument otherwise.  Kernel tables are built
    // relative to edge-aligned evaluation points so that the integrated path
    // is read off exactly and kernel jumps never fall inside a cell.
    std::size_t edge_index_of(double x) const;
};

class NoisePath {
  public:
    // Draws the increments from the given seed (one normal per cell, in cell
    // order) and integrates.
    NoisePath(const WhiteNoiseGrid& grid, std::uint64_t seed);

    const WhiteNoiseGrid& grid() const { return grid_; }
    std::uint64_t seed() const { return seed_; }

    // Increment over cell i, distributed N(0, h).
    double increment(std::size_t i) const { return dw_[i]; }
    const std::vector<double>& increments() const { return dw_; }

    // Integrated path at edge k (exact) and at arbitrary interior points
    // (linear interpolation, which is exact for this path model).
    double edge_value(std::size_t k) const { return w_edge_[k]; }
    double value(double x) const;

    // Signed area int_0^z W(y) dy, exact for the piecewise-linear path.
    double integral_to(double z) const;

  private:
    std::size_t cell_of(double x) const;  // throws std::out_of_range outside

    WhiteNoiseGrid grid_;
    std::uint64_t seed_;
    std::vector<double> dw_;
    std::vector<double> w_edge_;    // path at edges, anchored W(0) = 0
    std::vector<double> area_edge_;  // int_0^{edge k} W, anchored 0 at 0
};

}  // namespace homog
