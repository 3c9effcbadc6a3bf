#include "grid.hpp"

#include "error.hpp"

#include <cmath>
#include <string>

namespace romforge {

namespace {

void check_axis(int n, const char* name) {
    if (n < 4)
        throw ValidationError(std::string("grid axis ") + name +
                              " needs at least 4 points, got " + std::to_string(n));
}

void check_spacing(double h, const char* name) {
    if (!(h > 0.0) || !std::isfinite(h))
        throw ValidationError(std::string("grid spacing ") + name +
                              " must be strictly positive");
}

void check_same_grid(const Grid& a, const Grid& b) {
    if (!(a == b)) throw ValidationError("fields live on different grids");
}

} // namespace

Grid make_grid_2d(int nx, int ny, double dx, double dy) {
    Grid g;
    g.dims = 2;
    g.cells = {nx, ny, 1};
    g.spacing = {dx, dy, 1.0};
    validate(g);
    return g;
}

Grid make_grid_3d(int nx, int ny, int nz, double dx, double dy, double dz) {
    Grid g;
    g.dims = 3;
    g.cells = {nx, ny, nz};
    g.spacing = {dx, dy, dz};
    validate(g);
    return g;
}

void validate(const Grid& grid) {
    if (grid.dims != 2 && grid.dims != 3)
        throw ValidationError("grid dims must be 2 or 3, got " + std::to_string(grid.dims));
    static const char* axis_names[3] = {"n_x", "n_y", "n_z"};
    static const char* spacing_names[3] = {"dx", "dy", "dz"};
    for (int j = 0; j < grid.dims; ++j) {
        check_axis(grid.cells[j], axis_names[j]);
        check_spacing(grid.spacing[j], spacing_names[j]);
    }
    if (grid.dims == 2 && grid.cells[2] != 1)
        throw ValidationError("2D grid must have n_z = 1");
}

VelocityField::VelocityField(const Grid& grid)
    : grid_(grid), values_(static_cast<std::size_t>(grid.value_count()), 0.0) {
    validate(grid);
}

VelocityField::VelocityField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    validate(grid);
    if (static_cast<std::int64_t>(values_.size()) != grid.value_count())
        throw ValidationError("field has " + std::to_string(values_.size()) +
                              " values, grid expects " + std::to_string(grid.value_count()));
}

void VelocityField::require_finite(const char* label) const {
    for (double x : values_)
        if (!std::isfinite(x))
            throw ValidationError(std::string(label) + " contains non-finite values");
}

PointJacobianField::PointJacobianField(const Grid& grid)
    : grid_(grid),
      values_(static_cast<std::size_t>(grid.point_count() * grid.dims * grid.dims), 0.0) {
    validate(grid);
}

namespace fd {

namespace {

// Second-order first derivative of one scalar sample line. idx addresses the
// sample at line coordinate i, stride moves one point along the axis.
inline double d1(const double* f, std::int64_t idx, std::int64_t stride, int i, int n,
                 double inv_2h) {
    if (i == 0)
        return (-3.0 * f[idx] + 4.0 * f[idx + stride] - f[idx + 2 * stride]) * inv_2h;
    if (i == n - 1)
        return (3.0 * f[idx] - 4.0 * f[idx - stride] + f[idx - 2 * stride]) * inv_2h;
    return (f[idx + stride] - f[idx - stride]) * inv_2h;
}

// Second-order second derivative; the boundary closure is the 4-point
// one-sided stencil (2, -5, 4, -1)/h^2, which is why axes need >= 4 points.
inline double d2(const double* f, std::int64_t idx, std::int64_t stride, int i, int n,
                 double inv_h2) {
    if (i == 0)
        return (2.0 * f[idx] - 5.0 * f[idx + stride] + 4.0 * f[idx + 2 * stride] -
                f[idx + 3 * stride]) *
               inv_h2;
    if (i == n - 1)
        return (2.0 * f[idx] - 5.0 * f[idx - stride] + 4.0 * f[idx - 2 * stride] -
                f[idx - 3 * stride]) *
               inv_h2;
    return (f[idx - stride] - 2.0 * f[idx] + f[idx + stride]) * inv_h2;
}

struct AxisInfo {
    std::int64_t value_stride; // point stride * dims
    int n;
    double inv_2h;
    double inv_h2;
};

template <typename Fn>
void for_each_point(const Grid& grid, Fn&& fn) {
    const int nx = grid.cells[0], ny = grid.cells[1], nz = grid.cells[2];
    std::int64_t p = 0;
    int coord[3];
    for (int iz = 0; iz < nz; ++iz) {
        coord[2] = iz;
        for (int iy = 0; iy < ny; ++iy) {
            coord[1] = iy;
            for (int ix = 0; ix < nx; ++ix, ++p) {
                coord[0] = ix;
                fn(p, coord);
            }
        }
    }
}

std::array<AxisInfo, 3> axis_info(const Grid& grid) {
    std::array<AxisInfo, 3> info{};
    std::int64_t point_stride = 1;
    for (int j = 0; j < grid.dims; ++j) {
        info[j].value_stride = point_stride * grid.dims;
        info[j].n = grid.cells[j];
        info[j].inv_2h = 1.0 / (2.0 * grid.spacing[j]);
        info[j].inv_h2 = 1.0 / (grid.spacing[j] * grid.spacing[j]);
        point_stride *= grid.cells[j];
    }
    return info;
}

// out_c = sum_j coef_j * dv_c/dx_j. Shared core of convect and grad_contract:
// (a . grad)v and (grad v) . w are the same contraction with roles swapped.
void contract_gradient(const Grid& grid, const double* v, const double* coef, double* out) {
    const int d = grid.dims;
    const auto ax = axis_info(grid);
    for_each_point(grid, [&](std::int64_t p, const int* coord) {
        const std::int64_t base = p * d;
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j)
                acc += coef[base + j] *
                       d1(v, base + c, ax[j].value_stride, coord[j], ax[j].n, ax[j].inv_2h);
            out[base + c] = acc;
        }
    });
}

} // namespace

void gradient(const Grid& grid, const double* v, double* jac) {
    const int d = grid.dims;
    const auto ax = axis_info(grid);
    for_each_point(grid, [&](std::int64_t p, const int* coord) {
        const std::int64_t base = p * d;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                jac[(base + i) * d + j] =
                    d1(v, base + i, ax[j].value_stride, coord[j], ax[j].n, ax[j].inv_2h);
    });
}

void laplacian(const Grid& grid, const double* v, double* out) {
    const int d = grid.dims;
    const auto ax = axis_info(grid);
    for_each_point(grid, [&](std::int64_t p, const int* coord) {
        const std::int64_t base = p * d;
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j)
                acc += d2(v, base + c, ax[j].value_stride, coord[j], ax[j].n, ax[j].inv_h2);
            out[base + c] = acc;
        }
    });
}

void convect(const Grid& grid, const double* a, const double* v, double* out) {
    contract_gradient(grid, v, a, out);
}

void grad_contract(const Grid& grid, const double* v, const double* w, double* out) {
    contract_gradient(grid, v, w, out);
}

} // namespace fd

PointJacobianField gradient(const VelocityField& v) {
    PointJacobianField jac(v.grid());
    fd::gradient(v.grid(), v.data(), jac.data());
    return jac;
}

VelocityField laplacian(const VelocityField& v) {
    VelocityField out(v.grid());
    fd::laplacian(v.grid(), v.data(), out.data());
    return out;
}

VelocityField convect(const VelocityField& a, const VelocityField& v) {
    check_same_grid(a.grid(), v.grid());
    VelocityField out(v.grid());
    fd::convect(v.grid(), a.data(), v.data(), out.data());
    return out;
}

VelocityField grad_contract(const VelocityField& v, const VelocityField& w) {
    check_same_grid(v.grid(), w.grid());
    VelocityField out(v.grid());
    fd::grad_contract(v.grid(), v.data(), w.data(), out.data());
    return out;
}

} // namespace romforge
