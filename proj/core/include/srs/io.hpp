#pragma once

#include <concepts>
#include <cstdint>
#include <span>
#include <type_traits>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "srs/config.hpp"
#include "srs/simulator.hpp"

namespace srs {

struct SnapshotError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::string hex64(std::uint64_t v);

/// Builds a CSV table: `# manifest_id: <id>` line, header row, then rows.
class CsvTable {
public:
    CsvTable(std::string manifest_id, std::vector<std::string> columns);

    CsvTable& cell(double v);
    template <std::integral T>
    CsvTable& cell(T v) {
        if constexpr (std::is_same_v<T, bool>) return cell_int(v ? 1 : 0);
        else if constexpr (std::is_signed_v<T>) return cell_int(static_cast<std::int64_t>(v));
        else return cell_uint(static_cast<std::uint64_t>(v));
    }
    CsvTable& cell(std::string_view v);
    /// Ends the current row. Throws std::logic_error on a column-count mismatch.
    CsvTable& end_row();

    const std::string& text() const noexcept { return out_; }

private:
    CsvTable& cell_int(std::int64_t v);
    CsvTable& cell_uint(std::uint64_t v);

    std::size_t columns_;
    std::size_t filled_ = 0;
    std::string out_;
};

/// Writes `content` to `path` and returns its FNV-1a hash.
std::uint64_t write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Snapshot table: one row per point (replica_id, snapshot_time, x[, y]).
std::string snapshots_csv(const std::string& manifest_id, std::span<const RunResult> runs, int dim);
/// Per-replica summary (seed, event counts, extinction).
std::string events_csv(const std::string& manifest_id, std::span<const RunResult> runs);

/// Rebuilds runs from a snapshot table. Replica count and snapshot times come from the
/// manifest, so empty snapshots survive the round trip. Throws SnapshotError on
/// malformed input.
std::vector<RunResult> parse_snapshots(std::string_view csv, std::size_t replicas, std::span<const double> times,
                                       const TorusGeometry& geom, double min_cell_size);

/// Identifier shared by all files of one run: hash of the serialized config.
std::string manifest_id_for(const ExperimentConfig& c);

}  // namespace srs
