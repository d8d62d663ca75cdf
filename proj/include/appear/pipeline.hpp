#pragma once

#include "appear/cardiac.hpp"
#include "appear/config.hpp"
#include "appear/ica.hpp"
#include "appear/recording.hpp"
#include "appear/report.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace appear {

struct PipelineResult {
    Recording corrected;  // EEG with artifact ICs removed, ECG row carried through
    RunReport report;
    IntervalSet bad;
    CardiacEvents events;
    IcaDecomposition decomp;
    std::vector<std::pair<std::string, Recording>> intermediates;  // only when requested
};

/// Runs the full correction on a raw scanner recording: volume triggers,
/// gradient subtraction, decimation, band-pass, band-reject, cardiac event
/// detection and selection, BCG subtraction, bad-interval screening, Infomax
/// on the clean samples, IC classification and reconstruction without the
/// artifact ICs. Stage durations and decisions go into the report.
PipelineResult run_pipeline(Recording raw, const std::optional<Recording>& oximetry, const PipelineConfig& config,
                            bool keep_intermediates = false);

/// Indices of the EEG (non-ECG) rows. A channel counts as ECG when it is
/// flagged so or carries `ecg_label`.
std::vector<Index> eeg_rows(const Recording& rec, const std::string& ecg_label);

} // namespace appear
