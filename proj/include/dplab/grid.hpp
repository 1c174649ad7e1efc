#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dplab {

enum class Topology { Free, Periodic };

/// Rectangular grid, 1-3 axes. Values attached to a grid are stored
/// row-major with axis 0 slowest. For Free axes values are read as node
/// samples at x_i = i * spacing (interpolating schemes) or as cell
/// averages (conservative scheme); Periodic axes wrap with period
/// dims * spacing.
struct Grid {
    std::vector<int> dims;
    std::vector<double> spacing;
    std::vector<Topology> topology;

    int naxes() const { return static_cast<int>(dims.size()); }
    std::size_t size() const {
        std::size_t n = 1;
        for (int d : dims) n *= static_cast<std::size_t>(d);
        return n;
    }
    bool same_shape(const Grid& other) const { return dims == other.dims; }
    std::size_t index(const std::vector<int>& coord) const;
    std::vector<int> coord(std::size_t flat) const;
};

Grid make_grid(std::vector<int> dims, std::vector<double> spacing,
               std::vector<Topology> topology);

// Convenience: all axes share one spacing/topology.
Grid make_grid(std::vector<int> dims, double spacing, Topology topology);

struct Field {
    Grid grid;
    std::vector<double> values;

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    double& at(const std::vector<int>& coord) { return values[grid.index(coord)]; }
    double at(const std::vector<int>& coord) const { return values[grid.index(coord)]; }
    std::size_t size() const { return values.size(); }
};

/// Constructs a field; values must be finite and match the grid size.
Field make_field(Grid grid, double fill = 0.0);
Field make_field(Grid grid, std::vector<double> values);

// Plain-vector norms (no grid measure). RMS variants divide by sqrt(N) so
// fields of different resolution are comparable.
double l2_norm(const Field& f);
double rms(const Field& f);
double max_abs(const Field& f);
double max_abs_diff(const Field& a, const Field& b);
double mean(const Field& f);
double dot(const Field& a, const Field& b);

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(double s, const Field& a);

// Field equality for tests and contracts: max-abs difference <= tol
// (default 1e-12) unless an operation declares bit-exactness.
bool approx_equal(const Field& a, const Field& b, double tol = 1e-12);

// Normalized distance ||a - b||_rms / (1 + rms(a)) used by the stability
// indices. Shapes must match; resample first if they do not.
double normalized_distance(const Field& a, const Field& b);

std::string shape_string(const Grid& g);

}  // namespace dplab
