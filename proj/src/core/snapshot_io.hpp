#pragma once

#include "grid.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace romforge {

/// An ordered ensemble of velocity snapshots on one grid.
struct SnapshotSet {
    Grid grid;
    std::vector<VelocityField> snapshots;
    std::vector<double> times;     // strictly increasing, seconds
    double nu = 0.0;               // kinematic viscosity from the manifest
    double u_ref = 0.0;            // reference velocity; derived from the mean when absent

    int count() const { return static_cast<int>(snapshots.size()); }
};

/// Mean/fluctuation split of a SnapshotSet. Column m of `fluctuations` is
/// u*(t_m) = u(t_m) - u'.
struct FluctuationSet {
    Grid grid;
    VelocityField mean;
    Eigen::MatrixXd fluctuations;  // N x M
    std::vector<double> times;
};

/// Time-stamped modal coefficient columns (r x M).
struct CoefficientSeries {
    std::vector<double> times;
    Eigen::MatrixXd coefficients;  // r x M, column m sampled at times[m]

    int modes() const { return static_cast<int>(coefficients.rows()); }
    int samples() const { return static_cast<int>(times.size()); }
};

// --- manifest / key-value files -------------------------------------------
//
// Manifests are UTF-8 text, one `key = value` per line, `#` starts a comment.
// Repeated keys (e.g. `snapshot`) keep their order of appearance.

struct KeyValueFile {
    std::vector<std::pair<std::string, std::string>> entries;

    std::optional<std::string> get(const std::string& key) const;
    std::string require(const std::string& key) const;
    std::vector<std::string> all(const std::string& key) const;
};

KeyValueFile parse_key_value_file(const std::filesystem::path& path);
KeyValueFile parse_key_value_text(const std::string& text, const std::string& origin);

// --- snapshot ensembles ----------------------------------------------------

/// Reads a snapshot manifest plus the binary snapshot files it lists.
/// Validates grid shape, value counts, finiteness and monotone times.
SnapshotSet load_snapshots(const std::filesystem::path& manifest_path);

/// Writes the manifest and one binary file per snapshot into `dir`.
void save_snapshots(const SnapshotSet& set, const std::filesystem::path& dir,
                    const std::string& manifest_name = "snapshots.manifest");

/// u' = (1/M) sum_m u(t_m); fluctuation columns are the remainders.
FluctuationSet split_mean(const SnapshotSet& set);

/// Root-mean-square magnitude of the mean field over grid points; the u_ref
/// fallback when the manifest does not fix one.
double default_reference_velocity(const VelocityField& mean);

// --- single fields ---------------------------------------------------------

/// Raw little-endian IEEE-754 doubles, point-major, no header. Byte-exact
/// round trips.
void save_field(const VelocityField& field, const std::filesystem::path& path);
VelocityField load_field(const Grid& grid, const std::filesystem::path& path);

/// Text alternative: header `x,y[,z],u_1..u_d`, one row per grid point.
void save_field_csv(const VelocityField& field, const std::filesystem::path& path);

// --- coefficient series ----------------------------------------------------

/// CSV with header `time,a_1,...,a_r`; values printed with 17 significant
/// digits so the round trip is value-exact.
void save_coefficient_series(const CoefficientSeries& series,
                             const std::filesystem::path& path);
CoefficientSeries load_coefficient_series(const std::filesystem::path& path);

/// Short hash of the grid shape used to tag derived artifacts.
std::string grid_hash(const Grid& grid);

} // namespace romforge
