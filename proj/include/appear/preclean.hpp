#pragma once

#include "appear/config.hpp"
#include "appear/recording.hpp"

#include <string>
#include <vector>

namespace appear {

inline constexpr const char* kVolumeLabel = "Volume";

/// Every n_slices-th slice trigger (labelled `slice_label`) becomes a
/// volume trigger, starting with the first. Throws TriggerCountError when the
/// slice-trigger count is not a positive multiple of n_slices.
MarkerList derive_volume_triggers(const MarkerList& markers, int n_slices,
                                  const std::string& slice_label = "R128");

struct GradientOptions {
    GradientMethod method = GradientMethod::OBS;
    int half_width = 15;     // W, in volumes
    int components = 4;      // n_pc for OBS
    Index epoch_length = 0;  // samples; 0 takes the median trigger spacing
    int max_shift = 0;       // integer realignment search range, 0 = off
    double obs_highpass_hz = 70.0;  // band used to estimate and fit the OBS basis
};

/// Average artifact subtraction over volume epochs with an optional
/// optimal-basis-set stage. Each epoch's template is the mean of the 2W+1
/// neighbouring epochs (the window slides inward at the ends). OBS then
/// removes, per channel, the leading principal components of the residual
/// epochs. Components and per-epoch weights are estimated on the residuals
/// high-passed at obs_highpass_hz, where the artifact dominates the EEG; the
/// subtracted waveforms are the matching full-band residual combinations.
/// Samples outside every epoch are copied unchanged.
Recording gradient_subtract(const Recording& rec, const MarkerList& volumes, const GradientOptions& options);

/// Integer shifts (in samples) that best align each volume epoch with the
/// first one on the highest-variance channel.
std::vector<int> gradient_alignment(const Recording& rec, const MarkerList& volumes, Index epoch_length,
                                    int max_shift);

/// Zero-phase anti-alias low-pass (pass band to 0.4 of the new rate, stop
/// band from the new Nyquist) followed by keeping every factor-th sample.
Recording decimate(const Recording& rec, int factor);

/// Zero-phase Hamming-windowed FIR band-pass with transition width
/// min(lo, 2 Hz). lo = 0 gives a pure low-pass.
Recording fir_bandpass(const Recording& rec, double lo_hz, double hi_hz);

/// Zero-phase band-stop at every center, each `bw_hz` wide.
Recording band_reject(const Recording& rec, const std::vector<double>& centers_hz, double bw_hz = 1.0);

/// Slice frequency and its harmonics up to min(limit, fs/2 - bw), then the
/// extra centers (vibration, line) that lie below fs/2 - bw/2.
std::vector<double> reject_centers(double slice_hz, const std::vector<double>& extra_hz, double fs,
                                   double bw_hz = 1.0, double harmonic_limit_hz = 120.0);

inline constexpr double kPsdFloorDb = -120.0;

struct PsdEstimate {
    Vector freqs;
    Matrix power_db;      // channels x bins, dB re 1 uV^2/Hz, floored at kPsdFloorDb
    Matrix power_linear;  // channels x bins, uV^2/Hz
    double window_s = 0.0;
    double overlap = 0.0;

    double resolution() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
};

PsdEstimate compute_psd(const Recording& rec, double win_s = 4.096, double overlap = 0.5);

/// PSD of a single row vector sampled at fs.
PsdEstimate compute_psd(const Vector& signal, double fs, double win_s = 4.096, double overlap = 0.5);

/// Mean of the dB values over bins with lo <= f < hi, per channel.
Vector band_average(const PsdEstimate& psd, double lo_hz, double hi_hz);

} // namespace appear
