#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace romforge {

/// Uniform Cartesian grid of d-component vector samples (d = 2 or 3).
///
/// Values are stacked point-major: for grid point p the d components are
/// contiguous, and points are ordered x-fastest, i.e.
/// p = ix + n_x * (iy + n_y * iz). Every active axis needs at least 4 points
/// so that the one-sided second-order stencils have room.
struct Grid {
    int dims = 0;                          // 2 or 3
    std::array<int, 3> cells{1, 1, 1};     // n_x, n_y, n_z (n_z = 1 when dims == 2)
    std::array<double, 3> spacing{1, 1, 1};

    std::int64_t point_count() const {
        return static_cast<std::int64_t>(cells[0]) * cells[1] * cells[2];
    }
    std::int64_t value_count() const { return dims * point_count(); }

    bool operator==(const Grid&) const = default;
};

Grid make_grid_2d(int nx, int ny, double dx, double dy);
Grid make_grid_3d(int nx, int ny, int nz, double dx, double dy, double dz);

/// Throws ValidationError if the grid shape/spacing invariants fail.
void validate(const Grid& grid);

/// A d-component vector field sampled on a Grid (point-major values).
class VelocityField {
public:
    VelocityField() = default;
    explicit VelocityField(const Grid& grid);
    VelocityField(const Grid& grid, std::vector<double> values);

    const Grid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    const double* data() const { return values_.data(); }
    double* data() { return values_.data(); }
    std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }

    double operator()(std::int64_t point, int component) const {
        return values_[static_cast<std::size_t>(point * grid_.dims + component)];
    }
    double& operator()(std::int64_t point, int component) {
        return values_[static_cast<std::size_t>(point * grid_.dims + component)];
    }

    /// Throws ValidationError on NaN/Inf entries.
    void require_finite(const char* label = "field") const;

private:
    Grid grid_;
    std::vector<double> values_;
};

/// Per-point d x d matrices of spatial derivatives, entry (i, j) = dv_i/dx_j.
/// Stored row-major per point.
class PointJacobianField {
public:
    PointJacobianField() = default;
    explicit PointJacobianField(const Grid& grid);

    const Grid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }

    double operator()(std::int64_t point, int i, int j) const {
        const int d = grid_.dims;
        return values_[static_cast<std::size_t>((point * d + i) * d + j)];
    }
    double& operator()(std::int64_t point, int i, int j) {
        const int d = grid_.dims;
        return values_[static_cast<std::size_t>((point * d + i) * d + j)];
    }

private:
    Grid grid_;
    std::vector<double> values_;
};

// Raw kernels shared by the field wrappers and the tensor assembly loops.
// Buffers are point-major with the usual sizes (v: N, jac: N_grid*d*d).
namespace fd {
void gradient(const Grid& grid, const double* v, double* jac);
void laplacian(const Grid& grid, const double* v, double* out);
void convect(const Grid& grid, const double* a, const double* v, double* out);
void grad_contract(const Grid& grid, const double* v, const double* w, double* out);
} // namespace fd

/// First derivatives of every component: central differences inside,
/// one-sided 3-point second-order stencils on the boundary planes.
PointJacobianField gradient(const VelocityField& v);

/// Componentwise Laplacian summed over axes; 3-point central stencil inside,
/// one-sided 4-point second-order stencil on the boundaries.
VelocityField laplacian(const VelocityField& v);

/// Pointwise (a . grad) v.
VelocityField convect(const VelocityField& a, const VelocityField& v);

/// Pointwise (grad v) . w, the Jacobian of v applied to w.
VelocityField grad_contract(const VelocityField& v, const VelocityField& w);

} // namespace romforge
