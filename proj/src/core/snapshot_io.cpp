#include "snapshot_io.hpp"

#include "error.hpp"

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace romforge {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("cannot parse '" + s + "' as a number for " + what);
    }
}

int parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("cannot parse '" + s + "' as an integer for " + what);
    }
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Binary fields are little-endian on disk.
void to_little_endian(double* values, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        (void)values;
        (void)count;
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, &values[i], 8);
            bits = __builtin_bswap64(bits);
            std::memcpy(&values[i], &bits, 8);
        }
    }
}

} // namespace

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    return std::nullopt;
}

std::string KeyValueFile::require(const std::string& key) const {
    auto v = get(key);
    if (!v) throw ValidationError("manifest is missing key '" + key + "'");
    return *v;
}

std::vector<std::string> KeyValueFile::all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries)
        if (k == key) out.push_back(v);
    return out;
}

KeyValueFile parse_key_value_text(const std::string& text, const std::string& origin) {
    KeyValueFile kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(origin + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
        kv.entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
}

KeyValueFile parse_key_value_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_key_value_text(buf.str(), path.string());
}

void save_field(const VelocityField& field, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    std::vector<double> buffer = field.values();
    to_little_endian(buffer.data(), buffer.size());
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size() * sizeof(double)));
    if (!out) throw IoError("write failed for " + path.string());
}

VelocityField load_field(const Grid& grid, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const std::int64_t bytes = in.tellg();
    in.seekg(0);
    const std::int64_t expected = grid.value_count() * static_cast<std::int64_t>(sizeof(double));
    if (bytes != expected)
        throw ValidationError(path.string() + " holds " + std::to_string(bytes) +
                              " bytes, grid expects " + std::to_string(expected));
    std::vector<double> buffer(static_cast<std::size_t>(grid.value_count()));
    in.read(reinterpret_cast<char*>(buffer.data()), expected);
    if (!in) throw IoError("read failed for " + path.string());
    to_little_endian(buffer.data(), buffer.size());
    VelocityField field(grid, std::move(buffer));
    field.require_finite(path.string().c_str());
    return field;
}

void save_field_csv(const VelocityField& field, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const Grid& g = field.grid();
    out << "x,y";
    if (g.dims == 3) out << ",z";
    for (int c = 0; c < g.dims; ++c) out << ",u_" << (c + 1);
    out << "\n";
    std::int64_t p = 0;
    for (int iz = 0; iz < g.cells[2]; ++iz)
        for (int iy = 0; iy < g.cells[1]; ++iy)
            for (int ix = 0; ix < g.cells[0]; ++ix, ++p) {
                out << format_double(ix * g.spacing[0]) << ','
                    << format_double(iy * g.spacing[1]);
                if (g.dims == 3) out << ',' << format_double(iz * g.spacing[2]);
                for (int c = 0; c < g.dims; ++c) out << ',' << format_double(field(p, c));
                out << "\n";
            }
    if (!out) throw IoError("write failed for " + path.string());
}

SnapshotSet load_snapshots(const std::filesystem::path& manifest_path) {
    const KeyValueFile kv = parse_key_value_file(manifest_path);
    const auto dir = manifest_path.parent_path();

    Grid grid;
    const int d = parse_int(kv.require("d"), "d");
    if (d == 2) {
        grid = make_grid_2d(parse_int(kv.require("n_x"), "n_x"),
                            parse_int(kv.require("n_y"), "n_y"),
                            parse_double(kv.require("dx"), "dx"),
                            parse_double(kv.require("dy"), "dy"));
    } else if (d == 3) {
        grid = make_grid_3d(parse_int(kv.require("n_x"), "n_x"),
                            parse_int(kv.require("n_y"), "n_y"),
                            parse_int(kv.require("n_z"), "n_z"),
                            parse_double(kv.require("dx"), "dx"),
                            parse_double(kv.require("dy"), "dy"),
                            parse_double(kv.require("dz"), "dz"));
    } else {
        throw ValidationError("manifest d must be 2 or 3, got " + std::to_string(d));
    }

    SnapshotSet set;
    set.grid = grid;
    set.nu = parse_double(kv.require("nu"), "nu");
    if (!(set.nu > 0)) throw ValidationError("nu must be strictly positive");

    for (const std::string& entry : kv.all("snapshot")) {
        std::istringstream fields(entry);
        std::string time_str, file_name;
        if (!(fields >> time_str >> file_name))
            throw ValidationError("snapshot entry '" + entry + "' must be '<time> <file>'");
        const double t = parse_double(time_str, "snapshot time");
        if (!set.times.empty() && !(t > set.times.back()))
            throw ValidationError("snapshot times must be strictly increasing (offender t = " +
                                  time_str + ")");
        set.times.push_back(t);
        set.snapshots.push_back(load_field(grid, dir / file_name));
    }
    if (set.count() < 2)
        throw ValidationError("need at least 2 snapshots, manifest lists " +
                              std::to_string(set.count()));

    if (auto u_ref = kv.get("u_ref")) {
        set.u_ref = parse_double(*u_ref, "u_ref");
        if (!(set.u_ref > 0)) throw ValidationError("u_ref must be strictly positive");
    } else {
        set.u_ref = default_reference_velocity(split_mean(set).mean);
    }
    return set;
}

void save_snapshots(const SnapshotSet& set, const std::filesystem::path& dir,
                    const std::string& manifest_name) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / manifest_name, std::ios::trunc);
    if (!out) throw IoError("cannot open " + (dir / manifest_name).string());
    const Grid& g = set.grid;
    out << "# velocity snapshot ensemble\n";
    out << "d = " << g.dims << "\n";
    out << "n_x = " << g.cells[0] << "\nn_y = " << g.cells[1] << "\n";
    if (g.dims == 3) out << "n_z = " << g.cells[2] << "\n";
    out << "dx = " << format_double(g.spacing[0]) << "\ndy = " << format_double(g.spacing[1])
        << "\n";
    if (g.dims == 3) out << "dz = " << format_double(g.spacing[2]) << "\n";
    out << "nu = " << format_double(set.nu) << "\n";
    if (set.u_ref > 0) out << "u_ref = " << format_double(set.u_ref) << "\n";
    for (int m = 0; m < set.count(); ++m) {
        char name[32];
        std::snprintf(name, sizeof(name), "snapshot_%04d.bin", m);
        out << "snapshot = " << format_double(set.times[static_cast<std::size_t>(m)]) << ' '
            << name << "\n";
        save_field(set.snapshots[static_cast<std::size_t>(m)], dir / name);
    }
    if (!out) throw IoError("write failed for " + (dir / manifest_name).string());
}

FluctuationSet split_mean(const SnapshotSet& set) {
    const std::int64_t n = set.grid.value_count();
    const int m_count = set.count();
    FluctuationSet f;
    f.grid = set.grid;
    f.times = set.times;

    VelocityField mean(set.grid);
    for (const VelocityField& snap : set.snapshots)
        for (std::int64_t i = 0; i < n; ++i) mean.data()[i] += snap.data()[i];
    const double inv_m = 1.0 / m_count;
    for (std::int64_t i = 0; i < n; ++i) mean.data()[i] *= inv_m;

    f.fluctuations.resize(n, m_count);
    for (int m = 0; m < m_count; ++m) {
        const double* snap = set.snapshots[static_cast<std::size_t>(m)].data();
        for (std::int64_t i = 0; i < n; ++i) f.fluctuations(i, m) = snap[i] - mean.data()[i];
    }
    f.mean = std::move(mean);
    return f;
}

double default_reference_velocity(const VelocityField& mean) {
    const Grid& g = mean.grid();
    double sum = 0.0;
    for (std::int64_t i = 0; i < g.value_count(); ++i) sum += mean.data()[i] * mean.data()[i];
    const double rms = std::sqrt(sum / static_cast<double>(g.point_count()));
    return rms > 0 ? rms : 1.0;
}

void save_coefficient_series(const CoefficientSeries& series,
                             const std::filesystem::path& path) {
    if (series.samples() != static_cast<int>(series.coefficients.cols()) &&
        !(series.samples() == 0 && series.coefficients.size() == 0))
        throw ValidationError("series times/columns mismatch");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "time";
    for (int k = 0; k < series.modes(); ++k) out << ",a_" << (k + 1);
    out << "\n";
    for (int m = 0; m < series.samples(); ++m) {
        out << format_double(series.times[static_cast<std::size_t>(m)]);
        for (int k = 0; k < series.modes(); ++k)
            out << ',' << format_double(series.coefficients(k, m));
        out << "\n";
    }
    if (!out) throw IoError("write failed for " + path.string());
}

CoefficientSeries load_coefficient_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path.string() + " is empty");
    int r = -1; // from header: time,a_1..a_r
    {
        int commas = 0;
        for (char c : line)
            if (c == ',') ++commas;
        r = commas;
    }
    CoefficientSeries series;
    std::vector<std::vector<double>> columns;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ','))
            values.push_back(parse_double(trim(cell), path.string()));
        if (static_cast<int>(values.size()) != r + 1)
            throw ValidationError(path.string() + ": row has " +
                                  std::to_string(values.size()) + " cells, expected " +
                                  std::to_string(r + 1));
        series.times.push_back(values[0]);
        columns.emplace_back(values.begin() + 1, values.end());
    }
    series.coefficients.resize(r, static_cast<int>(columns.size()));
    for (int m = 0; m < static_cast<int>(columns.size()); ++m)
        for (int k = 0; k < r; ++k)
            series.coefficients(k, m) = columns[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)];
    return series;
}

std::string grid_hash(const Grid& grid) {
    char canon[160];
    std::snprintf(canon, sizeof(canon), "%d|%d|%d|%d|%a|%a|%a", grid.dims, grid.cells[0],
                  grid.cells[1], grid.cells[2], grid.spacing[0], grid.spacing[1],
                  grid.spacing[2]);
    // FNV-1a
    std::uint64_t h = 1469598103934665603ull;
    for (const char* c = canon; *c; ++c) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(*c));
        h *= 1099511628211ull;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016" PRIx64, h);
    return out;
}

} // namespace romforge
