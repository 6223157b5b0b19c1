#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kslab/config.hpp"
#include "kslab/diagnostics.hpp"

namespace kslab {

inline constexpr const char *kVersion = "0.3.0";
inline constexpr const char *kRunFormat = "kslab-run/1";
inline constexpr const char *kSweepFormat = "kslab-sweep/1";

std::uint64_t fnv1a64(const void *data, std::size_t len);
std::uint64_t fnv1a64_file(const std::string &path); // throws std::runtime_error on I/O failure
std::string hex64(std::uint64_t v);                  // "0x" + 16 hex digits
std::string format_g17(double v);                    // %.17g, round-trip exact

// Run directory layout (no timestamps, no machine-specific content, so a
// repeated run with the same config and seed reproduces every byte):
//   metadata.json               config echo, per-replica stats, checksums
//   replicas/rNNNN/snapshots.csv   t,i,x,y   (%.17g)
//   replicas/rNNNN/events.jsonl    one event object per line
//   diagnostics.json            estimates + index of series files
//   series/<name>.csv           t,value
void write_run_dir(const std::string &dir, const RunSpec &spec, std::uint64_t family_hash,
                   const std::vector<TrajectoryRecord> &records,
                   const DiagnosticsReport &report);

struct LoadedRun {
    std::string dir;
    KeyMap echo;
    RunSpec spec;
    std::uint64_t family_hash = 0;
    std::vector<TrajectoryRecord> records;
};

// Rebuilds the records from the directory alone; throws std::runtime_error
// when a required artifact is missing or malformed.
LoadedRun read_run_dir(const std::string &dir);

// Relative paths of listed files whose checksum disagrees with metadata
// (missing files included).
std::vector<std::string> checksum_mismatches(const std::string &dir);

} // namespace kslab
