#include "hjb/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hjb {

int wrap_index(int i, int n_nodes) {
    if (n_nodes < 1) {
        throw std::invalid_argument("wrap_index: n_nodes must be positive");
    }
    const int half = n_nodes / 2;
    int r = (i + half) % n_nodes;
    if (r < 0) r += n_nodes;
    return r - half;
}

GridSpec make_grid(int dim, double half_width, int n_space, double horizon,
                   int n_time) {
    if (dim != 1 && dim != 2) {
        throw std::invalid_argument("make_grid: dim must be 1 or 2");
    }
    if (!(half_width > 0.0)) {
        throw std::invalid_argument("make_grid: half_width must be positive");
    }
    if (n_space <= 0) {
        throw std::invalid_argument("make_grid: n_space must be positive");
    }
    if (!(horizon > 0.0)) {
        throw std::invalid_argument("make_grid: horizon must be positive");
    }
    if (n_time <= 0) {
        throw std::invalid_argument("make_grid: n_time must be positive");
    }
    GridSpec g;
    g.dim_ = dim;
    g.half_width_ = half_width;
    g.n_space_ = n_space;
    g.horizon_ = horizon;
    g.n_time_ = n_time;
    g.dx_ = half_width / n_space;
    g.dt_ = horizon / n_time;
    g.alpha_ = g.dt_ / g.dx_;
    return g;
}

std::size_t GridSpec::num_nodes() const {
    const std::size_t per = static_cast<std::size_t>(nodes_per_axis());
    return dim_ == 1 ? per : per * per;
}

double GridSpec::node_coord(int logical_i) const {
    return wrap_index(logical_i, nodes_per_axis()) * dx_;
}

std::size_t GridSpec::storage_of(int logical_i) const {
    return static_cast<std::size_t>(wrap_index(logical_i, nodes_per_axis()) +
                                    n_space_);
}

std::size_t GridSpec::storage_of(int logical_i1, int logical_i2) const {
    const std::size_t per = static_cast<std::size_t>(nodes_per_axis());
    return storage_of(logical_i1) * per + storage_of(logical_i2);
}

Vec GridSpec::point_of(std::size_t storage) const {
    const std::size_t per = static_cast<std::size_t>(nodes_per_axis());
    if (dim_ == 1) {
        return {(static_cast<int>(storage) - n_space_) * dx_, 0.0};
    }
    const int s1 = static_cast<int>(storage / per);
    const int s2 = static_cast<int>(storage % per);
    return {(s1 - n_space_) * dx_, (s2 - n_space_) * dx_};
}

std::size_t GridSpec::neighbor(std::size_t storage, int axis, int step) const {
    const std::size_t per = static_cast<std::size_t>(nodes_per_axis());
    if (dim_ == 1) {
        std::size_t s = storage;
        if (step > 0) {
            s = (s + 1 == per) ? 0 : s + 1;
        } else {
            s = (s == 0) ? per - 1 : s - 1;
        }
        return s;
    }
    std::size_t s1 = storage / per;
    std::size_t s2 = storage % per;
    std::size_t& c = (axis == 0) ? s1 : s2;
    if (step > 0) {
        c = (c + 1 == per) ? 0 : c + 1;
    } else {
        c = (c == 0) ? per - 1 : c - 1;
    }
    return s1 * per + s2;
}

int GridSpec::axis_cell(double x) const {
    const double width = 2.0 * half_width_;
    // Wrap into [-L, L).
    double xw = x - width * std::floor((x + half_width_) / width);
    if (xw >= half_width_) xw -= width;
    if (xw < -half_width_) xw += width;

    int k = static_cast<int>(std::floor(xw / dx_ + 0.5));
    // Resolve ties exactly against the representable cell boundaries: the
    // cell for node k is [ (k-1/2)dx, (k+1/2)dx ).
    if (xw >= (k + 0.5) * dx_) {
        ++k;
    } else if (xw < (k - 0.5) * dx_) {
        --k;
    }
    return wrap_index(k, nodes_per_axis()) + n_space_;
}

std::size_t GridSpec::cell_of(const Vec& x) const {
    if (dim_ == 1) {
        return static_cast<std::size_t>(axis_cell(x[0]));
    }
    const std::size_t per = static_cast<std::size_t>(nodes_per_axis());
    return static_cast<std::size_t>(axis_cell(x[0])) * per +
           static_cast<std::size_t>(axis_cell(x[1]));
}

int GridSpec::time_cell(double t) const {
    const double slack = 1e-9 * std::max(1.0, horizon_);
    if (t < -slack || t > horizon_ + slack) {
        throw std::out_of_range("time_cell: t outside [0, horizon]");
    }
    int j = static_cast<int>(std::floor(t / dt_));
    while (j + 1 <= n_time_ && t >= (j + 1) * dt_) ++j;
    while (j > 0 && t < j * dt_) --j;
    return std::clamp(j, 0, n_time_);
}

ScalarField::ScalarField(GridSpec grid, int time_index, double fill)
    : grid_(grid),
      time_index_(time_index),
      values_(grid.num_nodes(), fill) {}

ScalarField ScalarField::sampled(const GridSpec& grid, int time_index,
                                 const std::function<double(const Vec&)>& fn) {
    ScalarField f(grid, time_index);
    for (std::size_t s = 0; s < f.size(); ++s) {
        f.values_[s] = fn(grid.point_of(s));
    }
    return f;
}

double ScalarField::at(int i) const {
    return values_[grid_.storage_of(i)];
}

double ScalarField::at(int i1, int i2) const {
    return values_[grid_.storage_of(i1, i2)];
}

const ScalarField& FieldSequence::at_time_index(int j) const {
    const int k = j - first_time_index;
    if (k < 0 || k >= static_cast<int>(slices.size())) {
        throw std::out_of_range("FieldSequence: time index " +
                                std::to_string(j) + " not covered");
    }
    return slices[static_cast<std::size_t>(k)];
}

double FieldSequence::sample(const Vec& x, double t) const {
    return extend_piecewise_constant(*this, x, t);
}

double extend_piecewise_constant(const FieldSequence& seq, const Vec& x,
                                 double t) {
    const GridSpec& g = seq.grid();
    const int j = std::clamp(g.time_cell(t), seq.first_time_index,
                             seq.last_time_index());
    return seq.at_time_index(j)[g.cell_of(x)];
}

}  // namespace hjb
