#pragma once

#include "appear/recording.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace appear {

inline constexpr int kReportSchemaVersion = 1;

struct IcRecord {
    int index = 0;
    std::string label;
    std::vector<std::string> trace;
    // Non-finite values (e.g. a missing local minimum) are stored as null.
    std::map<std::string, double> diagnostics;

    bool operator==(const IcRecord& other) const;
};

struct StageTime {
    std::string stage;
    double seconds = 0.0;

    bool operator==(const StageTime&) const = default;
};

struct RunReport {
    int schema_version = kReportSchemaVersion;
    std::string mode;
    std::string selected_qrs_method;
    std::optional<double> hr_ecg;
    std::optional<double> hr_ica;
    std::optional<double> hr_oximetry;
    std::vector<std::string> notes;
    double band_lo_hz = 0.0;
    double band_hi_hz = 0.0;
    std::vector<double> reject_centers_hz;
    std::vector<Interval> bad_intervals;
    std::uint64_t seed = 0;
    int ica_iterations = 0;
    bool ica_converged = false;
    std::vector<int> removed_ics;
    std::vector<IcRecord> ics;
    std::vector<StageTime> stage_times;
    double total_seconds = 0.0;
    std::map<std::string, std::string> config;

    bool operator==(const RunReport&) const = default;

    /// Throws ArgumentError if a stage time is negative or IC indices are not 0..n-1.
    void validate() const;
};

std::string report_to_json(const RunReport& report, int indent = 2);
RunReport report_from_json(const std::string& text);

void write_report(const RunReport& report, const std::filesystem::path& path);
RunReport read_report(const std::filesystem::path& path);

} // namespace appear
