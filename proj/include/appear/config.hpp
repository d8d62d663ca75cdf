#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace appear {

enum class Mode { Rest, Task };

const char* to_string(Mode mode);
Mode parse_mode(const std::string& text);

enum class GradientMethod { AAS, OBS };

struct PipelineConfig {
    Mode mode = Mode::Rest;

    // acquisition
    int n_slices = 39;
    double tr_seconds = 2.0;
    double slice_freq_hz = 19.5;
    double vibration_freq_hz = 26.0;
    double line_freq_hz = 60.0;
    std::string slice_marker = "R128";
    std::string ecg_label = "ECG";

    // gradient removal and filtering
    GradientMethod gradient_method = GradientMethod::OBS;
    int aas_half_width = 15;
    int obs_components = 4;
    bool gradient_align = false;
    double target_fs = 250.0;
    double rest_lo_hz = 1.0;
    double rest_hi_hz = 70.0;
    double task_lo_hz = 0.1;
    double task_hi_hz = 70.0;
    double reject_bw_hz = 1.0;
    double harmonic_limit_hz = 120.0;

    // cardiac
    int bcg_template = 21;
    double oximetry_fs = 40.0;

    // bad intervals
    double bad_window_s = 1.0;
    double bad_step_s = 0.5;
    double bad_power_db = 10.0;
    double bad_amplitude_uv = 250.0;
    double bad_pad_s = 0.25;
    double bad_max_fraction = 0.5;

    // ICA
    std::uint64_t seed = 1;
    int ica_block = 128;
    int ica_max_sweeps = 512;
    double ica_tolerance = 1e-6;
    double ica_min_samples_factor = 20.0;

    // classification thresholds
    double psd_window_s = 4.096;
    double region_threshold = 0.2;
    double boundary_width = 0.2;
    double min_region_area = 0.01;
    double secondary_min_area = 0.05;
    double secondary_min_arc = 0.10;
    double frontal_y = 0.33;
    double blink_anterior_fraction = 0.6;
    double saccade_min_separation = 0.5;
    double alpha_overlap_unipolar = 0.4;
    double alpha_overlap_bipolar = 0.91;
    double occipital_radius = 0.25;
    double contribution_mean_ratio = 0.97;
    double contribution_min_ratio = 0.95;
    double single_channel_ratio2 = 5.0;
    double single_channel_ratio3 = 10.0;
    double single_channel_kurtosis = 4.0;
    double bcg_rn_factor = 0.33;
    double bcg_offset_db = 3.0;
    double bcg_cb_rise_factor = 0.2;

    double band_lo_hz() const { return mode == Mode::Rest ? rest_lo_hz : task_lo_hz; }
    double band_hi_hz() const { return mode == Mode::Rest ? rest_hi_hz : task_hi_hz; }

    /// Throws ArgumentError when a value is out of range or the slice
    /// frequency disagrees with n_slices / tr_seconds.
    void validate() const;

    /// Flat key/value view, used for the report echo and for round trips.
    std::map<std::string, std::string> to_map() const;
};

/// Parses `key=value` lines; `#` starts a comment. Unknown keys and bad
/// values raise ParseError. When slice_freq_hz is not given it is derived
/// from n_slices / tr_seconds.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Explicit path if non-empty, else $APPEAR_CONFIG if set, else defaults.
PipelineConfig resolve_config(const std::filesystem::path& explicit_path);

} // namespace appear
