#pragma once

#include "appear/recording.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace appear {

// --- time-frequency ------------------------------------------------------------

struct Scalogram {
    Vector times;      // s
    Vector freqs;      // Hz, ascending
    Matrix magnitude;  // freqs x times
};

struct MorseOptions {
    double gamma = 3.0;
    double time_bandwidth = 60.0;
    int voices_per_octave = 10;
    double min_hz = 1.0;
};

/// Generalised Morse CWT computed as a frequency-domain filter bank. Each
/// wavelet peaks at 2 on its centre frequency, so a unit-amplitude tone gives a
/// unit ridge. Throws InsufficientDataError below 2 s of data.
Scalogram cwt_morse(const Eigen::RowVectorXd& signal, double fs, const MorseOptions& options = {});

/// Mean over channels per sample, as a one-channel recording labelled "avg".
Recording channel_average(const Recording& rec);

// --- spectra -------------------------------------------------------------------

struct Band {
    std::string name;
    double lo_hz;
    double hi_hz;
};

/// delta 1-4, theta 4-8, alpha 8-13, beta 13-30 Hz.
const std::vector<Band>& comparison_bands();

struct BandTable {
    std::vector<Band> bands;
    std::vector<double> power;  // channel-averaged linear PSD band means, uV^2/Hz
    Matrix per_channel;         // channels x bands
};

/// Welch PSD of every channel after removing `bad`, band means per channel and
/// their average over channels.
BandTable band_table(const Recording& rec, const IntervalSet& bad = {}, double window_s = 4.096,
                     double overlap = 0.5);

// --- ERP -----------------------------------------------------------------------

enum RejectReason : unsigned {
    RejectNone = 0,
    RejectBoundary = 1u << 0,
    RejectStep = 1u << 1,
    RejectRange = 1u << 2,
    RejectFlat = 1u << 3,
};

std::string describe_reasons(unsigned reasons);

struct ErpSet {
    double fs = 0.0;
    std::vector<std::string> channels;
    Index pre = 0;   // samples before onset
    Index post = 0;  // samples after onset
    std::vector<std::int64_t> onsets;
    std::vector<Matrix> epochs;      // channels x samples; empty for boundary trials
    std::vector<unsigned> reasons;   // RejectReason bits per trial

    Index samples() const { return pre + post + 1; }
    double time_ms(Index k) const { return 1000.0 * static_cast<double>(k - pre) / fs; }
    std::size_t trial_count() const { return onsets.size(); }
    std::vector<std::size_t> accepted() const;
};

struct ErpWindow {
    double pre_ms = 200.0;
    double post_ms = 800.0;
};

/// Cuts [-pre, +post] around each marker, both ends included. Trials whose
/// window leaves the data are kept in the set with reason boundary. Throws
/// EmptyDataError when no trial is usable.
ErpSet epoch_erp(const Recording& rec, const MarkerList& stimuli, const ErpWindow& window = {});

/// Subtracts the mean of the pre-stimulus samples (t < 0) per trial and channel.
ErpSet baseline_correct(const ErpSet& set);

/// Zero-phase Butterworth low-pass, half amplitude at the cutoff. Order 8 run
/// forward and backward. Throws ArgumentError for cutoff >= fs/2.
ErpSet erp_lowpass(const ErpSet& set, double cutoff_hz = 30.0, int order = 8);

struct RejectOptions {
    double step_uv = 50.0;
    double range_uv = 200.0;
    double flat_uv = 0.5;
    double window_ms = 200.0;
};

/// Marks trials with a sample-to-sample step above step_uv, a max-min range
/// above range_uv in some window, or a range below flat_uv in some window.
ErpSet reject_trials(const ErpSet& set, const RejectOptions& options = {});

struct PeakMeasure {
    double amplitude_uv = 0.0;
    double latency_ms = 0.0;
    double mean_uv = 0.0;
    double snr_peak = 0.0;
    double snr_mean = 0.0;
};

struct ChannelErp {
    std::string channel;
    std::optional<PeakMeasure> n2;
    PeakMeasure p3;
    double noise_uv = 0.0;
};

struct ErpMeasures {
    std::size_t accepted_trials = 0;
    std::vector<ChannelErp> channels;
    Matrix average;  // accepted-trial average, channels x samples
};

struct ErpMeasureOptions {
    std::vector<std::string> channels = {"Fz", "FCz", "Cz", "Pz"};
    std::vector<std::string> n2_channels = {"Fz", "FCz", "Cz"};
    double n2_lo_ms = 175.0, n2_hi_ms = 225.0;
    double p3_lo_ms = 300.0, p3_hi_ms = 500.0;
    double noise_floor_uv = 0.01;
};

/// Peak and mean amplitudes of the accepted-trial average. Noise is the
/// baseline max - min, clamped below at noise_floor_uv. Throws EmptyDataError
/// without accepted trials or when none of the channels exist.
ErpMeasures erp_measures(const ErpSet& set, const ErpMeasureOptions& options = {});

// --- statistics ----------------------------------------------------------------

struct PairedStats {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
    double cohen_d = 0.0;
    double mean_diff = 0.0;
    double sd_diff = 0.0;
};

/// Dependent-samples t-test on a - b with a two-sided p-value and
/// d = mean(diff) / sd(diff). Identical inputs give t = d = 0, p = 1; a constant
/// nonzero difference throws DegenerateError; n < 2 throws ArgumentError.
PairedStats paired_stats(const std::vector<double>& a, const std::vector<double>& b);

} // namespace appear
