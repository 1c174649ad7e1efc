#include "dplab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dplab {

std::size_t Grid::index(const std::vector<int>& coord) const {
    std::size_t flat = 0;
    for (int a = 0; a < naxes(); ++a) {
        flat = flat * static_cast<std::size_t>(dims[a]) + static_cast<std::size_t>(coord[a]);
    }
    return flat;
}

std::vector<int> Grid::coord(std::size_t flat) const {
    std::vector<int> c(dims.size());
    for (int a = naxes() - 1; a >= 0; --a) {
        c[a] = static_cast<int>(flat % static_cast<std::size_t>(dims[a]));
        flat /= static_cast<std::size_t>(dims[a]);
    }
    return c;
}

Grid make_grid(std::vector<int> dims, std::vector<double> spacing,
               std::vector<Topology> topology) {
    if (dims.empty() || dims.size() > 3)
        throw std::invalid_argument("grid must have 1-3 axes");
    if (spacing.size() != dims.size() || topology.size() != dims.size())
        throw std::invalid_argument("dims/spacing/topology length mismatch");
    for (std::size_t a = 0; a < dims.size(); ++a) {
        if (dims[a] < 1) throw std::invalid_argument("grid dimension must be >= 1");
        if (!(spacing[a] > 0.0)) throw std::invalid_argument("grid spacing must be > 0");
    }
    return Grid{std::move(dims), std::move(spacing), std::move(topology)};
}

Grid make_grid(std::vector<int> dims, double spacing, Topology topology) {
    std::vector<double> sp(dims.size(), spacing);
    std::vector<Topology> tp(dims.size(), topology);
    return make_grid(std::move(dims), std::move(sp), std::move(tp));
}

Field make_field(Grid grid, double fill) {
    Field f;
    f.values.assign(grid.size(), fill);
    f.grid = std::move(grid);
    return f;
}

Field make_field(Grid grid, std::vector<double> values) {
    if (values.size() != grid.size())
        throw std::invalid_argument("value count does not match grid size");
    for (double v : values) {
        if (!std::isfinite(v)) throw std::invalid_argument("field values must be finite");
    }
    Field f;
    f.grid = std::move(grid);
    f.values = std::move(values);
    return f;
}

double l2_norm(const Field& f) {
    double s = 0.0;
    for (double v : f.values) s += v * v;
    return std::sqrt(s);
}

double rms(const Field& f) {
    return f.size() == 0 ? 0.0 : l2_norm(f) / std::sqrt(static_cast<double>(f.size()));
}

double max_abs(const Field& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const Field& a, const Field& b) {
    if (a.size() != b.size()) throw std::invalid_argument("shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double mean(const Field& f) {
    if (f.size() == 0) return 0.0;
    double s = 0.0;
    for (double v : f.values) s += v;
    return s / static_cast<double>(f.size());
}

double dot(const Field& a, const Field& b) {
    if (a.size() != b.size()) throw std::invalid_argument("shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Field operator+(const Field& a, const Field& b) {
    if (!a.grid.same_shape(b.grid)) throw std::invalid_argument("shape mismatch");
    Field out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

Field operator-(const Field& a, const Field& b) {
    if (!a.grid.same_shape(b.grid)) throw std::invalid_argument("shape mismatch");
    Field out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

Field operator*(double s, const Field& a) {
    Field out = a;
    for (double& v : out.values) v *= s;
    return out;
}

bool approx_equal(const Field& a, const Field& b, double tol) {
    if (a.size() != b.size()) return false;
    return max_abs_diff(a, b) <= tol;
}

double normalized_distance(const Field& a, const Field& b) {
    if (a.size() != b.size()) throw std::invalid_argument("shape mismatch");
    double num = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        num += d * d;
    }
    num = std::sqrt(num / static_cast<double>(a.size()));
    return num / (1.0 + rms(a));
}

std::string shape_string(const Grid& g) {
    std::ostringstream os;
    for (int a = 0; a < g.naxes(); ++a) {
        if (a) os << "x";
        os << g.dims[a];
    }
    return os.str();
}

}  // namespace dplab
