#pragma once

#include "appear/ica.hpp"
#include "appear/recording.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace appear {

struct SynthSpec {
    double duration_s = 480.0;
    int n_channels = 31;
    double fs_raw = 5000.0;
    std::uint64_t seed = 1;

    // scanner
    double tr_s = 2.0;
    int n_slices = 39;
    double scan_lead_s = 1.0;      // silence before the first volume
    double gradient_uv = 2000.0;
    double gradient_drift = 0.0;   // fractional amplitude modulation across volumes
    double gradient_jitter_s = 0.0;  // slow timing wander of the slice waveform
    std::string slice_marker = "R128";

    // cardiac
    double hr_bpm = 72.0;
    double rr_jitter = 0.04;       // RR standard deviation as a fraction of the mean
    double bcg_uv = 150.0;
    double bcg_variability = 0.15; // beat-to-beat amplitude spread
    double bcg_delay_s = 0.15;     // R peak to artifact onset
    double ecg_uv = 1000.0;
    double oximetry_fs = 40.0;
    double oximetry_delay_s = 0.3;

    // ocular and muscle
    double blink_per_min = 10.0;
    double blink_uv = 100.0;
    double muscle_per_min = 6.0;
    double muscle_uv = 30.0;
    std::vector<std::string> muscle_channels = {"T7", "T8"};

    // neural
    double neural_uv = 50.0;       // typical peak amplitude; channel rms is a quarter of it
    double alpha_uv = 20.0;
    double one_over_f = 1.0;

    // task
    bool task = false;
    double isi_min_s = 2.5;
    double isi_max_s = 3.5;
    double n2_uv = -5.0;
    double p3_uv = 10.0;
    std::string stimulus_marker = "S  1";

    /// Throws ArgumentError on negative rates, duration < 10 s or an
    /// unknown muscle channel.
    void validate() const;
    double slice_hz() const { return n_slices / tr_s; }
};

std::string spec_to_json(const SynthSpec& spec);
/// Missing keys keep their defaults; unknown keys or wrong types raise ParseError.
SynthSpec spec_from_json(const std::string& text);

/// Names of the constituents in summation order.
const std::vector<std::string>& constituent_names();

struct SynthSession {
    SynthSpec spec;
    Recording raw;        // scalp channels plus ECG, with slice and stimulus markers
    Recording ecg;        // clean ECG lead
    Recording oximetry;   // pulse wave at oximetry_fs
    std::vector<std::int64_t> r_peaks;  // raw-rate samples
    MarkerList stimuli;
    std::map<std::string, Recording> truth;  // constituents that were kept
};

/// Builds the session. `keep` selects which constituents stay in `truth`;
/// an empty set keeps all of them. Deterministic in spec.seed.
SynthSession generate(const SynthSpec& spec, const std::set<std::string>& keep = {});

/// Regenerates one constituent (bit-identical to the one summed into raw).
Recording synth_constituent(const SynthSpec& spec, const std::string& name);

/// Beat times in seconds, shared by ECG, BCG and oximetry.
std::vector<double> beat_times(const SynthSpec& spec);

/// Channel gains of the planted ERP (1 on the midline, tapering laterally).
double erp_gain(const Position& p);

// --- scoring -------------------------------------------------------------------

struct RecoveryMetrics {
    std::vector<std::string> channels;
    std::vector<double> correlation;   // per channel, 1-70 Hz
    double mean_correlation = 0.0;
    double median_correlation = 0.0;
    double residual_rms_uv = 0.0;
    double residual_slice_db = 0.0;    // residual power in +-0.5 Hz around slice harmonics
    double residual_bcg_band_db = 0.0; // residual power 2-7 Hz
};

/// Correlates cleaned and truth after removing `bad` from both and band
/// passing 1-70 Hz. Both recordings must share rate, channels and length.
RecoveryMetrics score_recovery(const Recording& cleaned, const Recording& truth_neural, const IntervalSet& bad = {},
                               double slice_hz = 19.5);

/// Mean square (over channels and samples) of the event-locked average of
/// `rec`, epochs [-pre_s, post_s) around each event. Events whose window
/// leaves the data are skipped.
double locked_power(const Recording& rec, const std::vector<std::int64_t>& events, double pre_s = 0.2,
                    double post_s = 0.6);

// --- planted-IC benchmark -----------------------------------------------------

struct PlantedScene {
    Recording x;                 // A * S with the default layout, fs 250
    IcaDecomposition decomp;     // planted mixing and its inverse
    Matrix S;
    std::vector<std::string> expected;  // label per IC
    Index alpha_ic = -1;
};

/// Seeded scene with one BCG, blink, saccade, single-channel and muscle IC,
/// one occipital alpha IC and neural fill-up ICs.
PlantedScene planted_ic_scene(std::uint64_t seed, double duration_s = 120.0);

} // namespace appear
