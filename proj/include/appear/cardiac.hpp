#pragma once

#include "appear/ica.hpp"
#include "appear/recording.hpp"

#include <cstdint>
#include <vector>

namespace appear {

enum class CardiacMethod { ECG, ICA, Oximetry };

const char* to_string(CardiacMethod m);

struct CardiacEvents {
    std::vector<std::int64_t> peaks;  // sorted sample indices
    double fs = 0.0;
    double mean_hr_bpm = 0.0;
    CardiacMethod method = CardiacMethod::ECG;
    double rr_cv = 0.0;     // coefficient of variation of the accepted RR intervals
    double scale_s = 0.0;   // ICA smoothing scale that was selected
};

/// Drops any peak closer than 0.25 s to the previously kept one and
/// computes 60 / mean(RR) over the RR intervals lying in [0.25, 3] s.
void finalize_events(CardiacEvents& ev);

/// Derivative-square-integrate QRS detector with adaptive thresholds and a
/// 300 ms refractory period. Peaks are moved to the raw ECG extremum within
/// +-50 ms, using the polarity shared by most beats.
CardiacEvents detect_r_peaks_ecg(const Recording& ecg, Index channel = 0);

/// Zero-phase low-pass at 3 Hz, then local maxima with prominence >= 0.3 x IQR
/// and at least 0.25 s apart (higher peaks win).
CardiacEvents detect_pulse_peaks(const Recording& oxi);

/// Heart beats from the activation of the strongest BCG candidate (largest
/// |A column| x std(source)). The absolute activation is smoothed at
/// 0.05, 0.1, 0.2 and 0.4 s, peaks are picked at each scale and the scale
/// with the smallest RR coefficient of variation wins. Peak indices refer to
/// the full recording through the decomposition's index map.
CardiacEvents detect_r_peaks_ica(const IcaDecomposition& decomp, const std::vector<Index>& bcg_candidates);

/// Peaks of one activation time course at fs, as used by detect_r_peaks_ica.
CardiacEvents detect_activation_peaks(const Eigen::RowVectorXd& activation, double fs);

struct HrSelection {
    double hr_ecg = 0.0;
    double hr_ica = 0.0;
    double hr_oxi = 0.0;
    CardiacMethod chosen = CardiacMethod::ECG;
};

/// The method whose mean heart rate is closest to the oximetry rate; a tie
/// goes to ICA.
HrSelection select_cardiac_source(double hr_ecg, double hr_ica, double hr_oxi);

/// Average artifact subtraction locked to the cardiac events. Each beat's
/// epoch spans [peak - 0.3 RRmed, peak + 0.7 RRmed); its template is the mean
/// of the n_template previous epochs, or of the first n_template epochs for
/// the early beats. ECG channels and samples outside every epoch are left
/// untouched. Where epochs overlap the later beat wins.
Recording bcg_aas(const Recording& rec, const CardiacEvents& events, int n_template = 21);

struct BadIntervalOptions {
    double window_s = 1.0;
    double step_s = 0.5;
    double power_db = 10.0;
    double amplitude_uv = 250.0;
    double pad_s = 0.25;
    double max_fraction = 0.5;
};

/// Flags 1 s windows whose 20-40 Hz power on some channel is at least 10 dB
/// above that channel's median window power, or whose absolute amplitude
/// exceeds 250 uV. Flagged windows are merged and padded. Throws
/// ExcessiveArtifactError when more than max_fraction of the session is bad.
IntervalSet detect_bad_intervals(const Recording& rec, const BadIntervalOptions& options = {});

} // namespace appear
