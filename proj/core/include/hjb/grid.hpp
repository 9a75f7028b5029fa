#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hjb {

/// Fixed-capacity coordinate/control vector. Only the leading `dim` entries
/// of the owning grid or input set are meaningful; trailing entries are zero.
using Vec = std::array<double, 2>;

/// Maps an arbitrary logical node index into the canonical periodic range
/// [-n_nodes/2, n_nodes/2 - 1]. Idempotent and periodic with period n_nodes.
int wrap_index(int i, int n_nodes);

/// Uniform periodic space-time mesh on [-L, L]^dim x [0, T].
///
/// Each axis carries 2*n_space distinct nodes x_i = i*dx for
/// i = -n_space .. n_space-1; the endpoints i = +-n_space coincide under the
/// periodic identification and are stored once. Time has n_time+1 levels
/// t_j = j*dt. The ratio alpha = dt/dx is computed once at construction and
/// never recomputed, so it is identical wherever it is consulted.
///
/// Immutable after construction; cheap to copy.
class GridSpec {
public:
    /// Degenerate 1x1 placeholder; build real grids through make_grid.
    GridSpec() = default;

    int dim() const { return dim_; }
    double half_width() const { return half_width_; }
    int n_space() const { return n_space_; }
    double horizon() const { return horizon_; }
    int n_time() const { return n_time_; }

    double dx() const { return dx_; }
    double dt() const { return dt_; }
    double alpha() const { return alpha_; }

    int nodes_per_axis() const { return 2 * n_space_; }
    std::size_t num_nodes() const;

    /// Coordinate of a logical node index (wrapped first).
    double node_coord(int logical_i) const;
    /// Time of level j.
    double time(int j) const { return j * dt_; }

    /// Storage index of a logical 1D node index.
    std::size_t storage_of(int logical_i) const;
    /// Storage index of a logical 2D node index pair.
    std::size_t storage_of(int logical_i1, int logical_i2) const;

    /// Coordinates of a storage index.
    Vec point_of(std::size_t storage) const;

    /// Storage index shifted one node along `axis` in direction `step`
    /// (+1 or -1), with periodic wrap.
    std::size_t neighbor(std::size_t storage, int axis, int step) const;

    /// Per-axis storage index of the half-open cell [x_{i-1/2}, x_{i+1/2})
    /// containing x, after periodic wrap. Ties at a cell boundary resolve to
    /// the right cell.
    int axis_cell(double x) const;

    /// Storage index of the spatial cell containing a point.
    std::size_t cell_of(const Vec& x) const;

    /// Time-cell index in [0, n_time]; the cell for t in [t_j, t_{j+1}) is j,
    /// and t = T maps to n_time. Throws std::out_of_range outside [0, T]
    /// (modulo a tiny rounding allowance at the endpoints).
    int time_cell(double t) const;

    bool operator==(const GridSpec& other) const = default;

private:
    friend GridSpec make_grid(int, double, int, double, int);

    int dim_ = 1;
    double half_width_ = 1.0;
    int n_space_ = 1;
    double horizon_ = 1.0;
    int n_time_ = 1;
    double dx_ = 1.0;
    double dt_ = 1.0;
    double alpha_ = 1.0;
};

/// Builds a grid, validating every parameter. Throws std::invalid_argument
/// naming the offending field.
GridSpec make_grid(int dim, double half_width, int n_space, double horizon,
                   int n_time);

/// One time slice of a discrete field: one value per spatial node, stored in
/// row-major storage order (axis 0 outer, axis 1 inner for dim 2).
class ScalarField {
public:
    ScalarField(GridSpec grid, int time_index, double fill = 0.0);

    /// Samples fn at every node of the slice.
    static ScalarField sampled(const GridSpec& grid, int time_index,
                               const std::function<double(const Vec&)>& fn);

    const GridSpec& grid() const { return grid_; }
    int time_index() const { return time_index_; }
    std::size_t size() const { return values_.size(); }

    double operator[](std::size_t storage) const { return values_[storage]; }
    double& operator[](std::size_t storage) { return values_[storage]; }

    /// Logical-index access with periodic wrap (dim 1).
    double at(int i) const;
    /// Logical-index access with periodic wrap (dim 2).
    double at(int i1, int i2) const;

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

private:
    GridSpec grid_;
    int time_index_;
    std::vector<double> values_;
};

/// A run of consecutive time slices, slices[k] at time index
/// first_time_index + k. Value fields start at 0; input fields start at 1
/// (no minimization happens at the initial time level).
struct FieldSequence {
    int first_time_index = 0;
    std::vector<ScalarField> slices;

    const GridSpec& grid() const { return slices.front().grid(); }
    int last_time_index() const {
        return first_time_index + static_cast<int>(slices.size()) - 1;
    }
    const ScalarField& at_time_index(int j) const;

    /// Piecewise-constant extension evaluated at (x, t); see
    /// extend_piecewise_constant.
    double sample(const Vec& x, double t) const;
};

/// Promotes the discrete slices to a function constant on each space-time
/// cell [x_{i-1/2}, x_{i+1/2}) x [t_j, t_{j+1}), with t = T mapping to the
/// final slice. Time cells not covered by the sequence clamp to its first
/// slice, which matters only for input fields (their first level is 1).
double extend_piecewise_constant(const FieldSequence& seq, const Vec& x,
                                 double t);

}  // namespace hjb
