#include "srs/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace srs {

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

std::string manifest_id_for(const ExperimentConfig& c) { return hex64(fnv1a64(serialize_config(c))); }

CsvTable::CsvTable(std::string manifest_id, std::vector<std::string> columns) : columns_(columns.size()) {
    out_ = "# manifest_id: " + manifest_id + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out_ += ',';
        out_ += columns[i];
    }
    out_ += '\n';
}

CsvTable& CsvTable::cell(double v) { return cell(std::string_view(format_double(v))); }

CsvTable& CsvTable::cell_int(std::int64_t v) { return cell(std::string_view(std::to_string(v))); }

CsvTable& CsvTable::cell_uint(std::uint64_t v) { return cell(std::string_view(std::to_string(v))); }

CsvTable& CsvTable::cell(std::string_view v) {
    if (filled_ == columns_) throw std::logic_error("CsvTable: too many cells in row");
    if (filled_) out_ += ',';
    out_ += v;
    ++filled_;
    return *this;
}

CsvTable& CsvTable::end_row() {
    if (filled_ != columns_) throw std::logic_error("CsvTable: row has the wrong number of cells");
    out_ += '\n';
    filled_ = 0;
    return *this;
}

std::uint64_t write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
    return fnv1a64(content);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string snapshots_csv(const std::string& manifest_id, std::span<const RunResult> runs, int dim) {
    std::vector<std::string> cols{"replica_id", "snapshot_index", "snapshot_time", "x"};
    if (dim == 2) cols.push_back("y");
    CsvTable t(manifest_id, cols);
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& run = runs[r];
        for (std::size_t s = 0; s < run.snapshots.size(); ++s) {
            for (const Vec& p : run.snapshots[s].points()) {
                t.cell(r).cell(s).cell(run.snapshot_times[s]).cell(p[0]);
                if (dim == 2) t.cell(p[1]);
                t.end_row();
            }
        }
    }
    return t.text();
}

std::string events_csv(const std::string& manifest_id, std::span<const RunResult> runs) {
    CsvTable t(manifest_id, {"replica_id", "seed", "events", "deaths", "fissions", "final_size", "extinct",
                             "extinction_time", "final_time"});
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& run = runs[r];
        const std::size_t final_size = run.snapshots.empty() ? 0 : run.snapshots.back().size();
        t.cell(r).cell(run.seed).cell(run.events).cell(run.deaths).cell(run.fissions).cell(final_size);
        t.cell(run.extinct).cell(run.extinct ? run.extinction_time : -1.0).cell(run.final_time).end_row();
    }
    return t.text();
}

namespace {

template <class T>
T parse_field(std::string_view s, std::size_t line) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw SnapshotError("snapshots.csv line " + std::to_string(line) + ": bad field '" + std::string(s) + "'");
    return v;
}

}  // namespace

std::vector<RunResult> parse_snapshots(std::string_view csv, std::size_t replicas, std::span<const double> times,
                                       const TorusGeometry& geom, double min_cell_size) {
    std::vector<RunResult> runs(replicas);
    for (auto& r : runs) {
        r.snapshot_times.assign(times.begin(), times.end());
        r.snapshots.assign(times.size(), Configuration(geom, min_cell_size));
    }
    const std::size_t want = geom.dim() == 2 ? 5 : 4;
    std::size_t line = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    std::vector<std::string_view> f;
    while (pos < csv.size()) {
        auto end = csv.find('\n', pos);
        if (end == std::string_view::npos) end = csv.size();
        std::string_view row = csv.substr(pos, end - pos);
        pos = end + 1;
        ++line;
        if (row.empty() || row.front() == '#') continue;
        if (!header_seen) {
            header_seen = true;
            if (row.substr(0, 10) != "replica_id") throw SnapshotError("snapshots.csv: missing header row");
            continue;
        }
        f.clear();
        std::size_t start = 0;
        while (true) {
            const auto c = row.find(',', start);
            f.push_back(row.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
            if (c == std::string_view::npos) break;
            start = c + 1;
        }
        if (f.size() != want)
            throw SnapshotError("snapshots.csv line " + std::to_string(line) + ": expected " + std::to_string(want) +
                                " fields");
        const auto r = parse_field<std::size_t>(f[0], line);
        const auto s = parse_field<std::size_t>(f[1], line);
        const auto t = parse_field<double>(f[2], line);
        if (r >= replicas || s >= times.size() || t != times[s])
            throw SnapshotError("snapshots.csv line " + std::to_string(line) + ": replica or snapshot out of range");
        Vec p{parse_field<double>(f[3], line), 0.0};
        if (want == 5) p[1] = parse_field<double>(f[4], line);
        for (int k = 0; k < geom.dim(); ++k)
            if (!(p[k] >= 0.0 && p[k] < geom.side()))
                throw SnapshotError("snapshots.csv line " + std::to_string(line) + ": point outside the torus");
        runs[r].snapshots[s].insert(p);
    }
    if (!header_seen) throw SnapshotError("snapshots.csv: empty file");
    return runs;
}

}  // namespace srs
