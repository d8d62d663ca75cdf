#pragma once

#include "appear/config.hpp"
#include "appear/ica.hpp"
#include "appear/recording.hpp"

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace appear {

enum class IcLabel { Neural, BCG, Blink, Saccade, SingleChannel, Muscle };

const char* to_string(IcLabel label);

struct ClassifyOptions {
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
};

ClassifyOptions classify_options(const PipelineConfig& config);

// --- topographic maps -----------------------------------------------------------

inline constexpr int kTopoGrid = 64;

/// Scalp projection on a kTopoGrid x kTopoGrid grid over [-1, 1]^2. Row 0 is
/// the anterior edge (y = +1), column 0 the left edge (x = -1). Cells outside
/// the unit disc hold NaN.
struct TopoMap {
    std::vector<double> values;
    Index source = -1;

    static double cell_x(int col) { return -1.0 + (col + 0.5) * 2.0 / kTopoGrid; }
    static double cell_y(int row) { return 1.0 - (row + 0.5) * 2.0 / kTopoGrid; }
    static bool inside(int row, int col);

    double at(int row, int col) const { return values[static_cast<std::size_t>(row * kTopoGrid + col)]; }
    double& at(int row, int col) { return values[static_cast<std::size_t>(row * kTopoGrid + col)]; }
};

/// Thin-plate spline through the channel values, normalised to max |v| = 1
/// over the disc (an all-zero column stays zero). Throws LayoutError for
/// fewer than 8 channels or collinear positions.
TopoMap interp_topomap(const Eigen::VectorXd& column, const std::vector<Position>& layout, Index source = -1);

struct Region {
    int sign = 0;
    double area = 0.0;      // fraction of the disc
    Position centroid;
    double arc = 0.0;       // fraction of the boundary band covered
    double peak = 0.0;      // max |v| inside
    std::vector<int> cells; // row * kTopoGrid + col
};

struct PolarityRegions {
    std::vector<Region> regions;  // every component with area >= min_region_area, largest first
    std::optional<Region> primary;
    std::optional<Region> secondary;
    int neutral_count = 0;
    int primary_sign_regions = 0;
    int primary_sign_arcs = 0;

    bool bipolar(double secondary_min_area) const
    {
        return secondary && secondary->area >= secondary_min_area;
    }
};

/// Connected (4-neighbour) components of v > thr and v < -thr. The primary
/// region holds the map's largest magnitude; the secondary is the largest
/// opposite-sign region. Neutral regions are the connected pieces of the disc
/// left once primary and secondary are taken out. Arcs are overlaps with the
/// outer annulus r > 1 - boundary_width.
PolarityRegions extract_polarity_regions(const TopoMap& map, const ClassifyOptions& options = {});

// --- spectra --------------------------------------------------------------------

struct Spectrum {
    Vector freqs;
    Vector db;
    Vector linear;
};

/// Welch spectrum of one activation row.
Spectrum ic_spectrum(const Eigen::RowVectorXd& activation, double fs, double window_s = 4.096);

/// Mean of the linear spectrum over lo <= f < hi.
double band_mean(const Spectrum& s, double lo_hz, double hi_hz);

struct BcgSpectralDiag {
    double f_p = 0.0;
    double f_lmin = std::numeric_limits<double>::quiet_NaN();
    double r_n = 0.0;
    double s_min = 0.0;
    double s_ave = 0.0;  // mean 2-7 Hz level above s_min
    double s_n = 0.0;
    std::vector<double> cb_freqs;
    std::vector<double> cb_rises;
    std::vector<double> cb_powers;
    bool cond_peak = false;
    bool s3 = false;
    bool s4 = false;
    bool s5 = false;
};

/// Cardioballistic / neuronal peak rules, all in dB. Throws ArgumentError
/// when the spectrum does not cover 1-30 Hz.
std::pair<bool, BcgSpectralDiag> bcg_spectral_test(const Spectrum& psd, const ClassifyOptions& options = {});

bool bcg_topo_test(const PolarityRegions& regions, const ClassifyOptions& options = {});

struct ContributionDiag {
    std::vector<Index> channels;  // channels with both magnitudes nonzero
    std::vector<double> ratio_pos;
    std::vector<double> ratio_neg;
    std::vector<double> ratio_sym;
    double min_sym = 0.0;
    double min_single = 0.0;
};

/// Removes the IC from x and compares mean positive / mean |negative|
/// magnitudes per channel. Throws ArgumentError when no channel qualifies.
std::pair<bool, ContributionDiag> bcg_contribution_test(const Matrix& x, const IcaDecomposition& decomp,
                                                        const Matrix& S, Index ic, const ClassifyOptions& options = {});

/// Fraction of the occipital template (discs around O1, Oz, O2) covered by
/// |v| > threshold.
double occipital_overlap(const TopoMap& map, const ClassifyOptions& options = {});

bool alpha_guard(const TopoMap& map, const Spectrum& psd, const ClassifyOptions& options = {});

bool blink_test(const TopoMap& map, const ClassifyOptions& options = {});
bool saccade_test(const TopoMap& map, const ClassifyOptions& options = {});

struct SingleChannelDiag {
    std::vector<double> channel_power;  // total linear PSD power per channel of the one-IC reconstruction
    double max1 = 0.0, max2 = 0.0, max3 = 0.0;
    double kurtosis = 0.0;
    double delta = 0.0, theta = 0.0, alpha = 0.0, beta = 0.0;
};

std::pair<bool, SingleChannelDiag> single_channel_test(const IcaDecomposition& decomp, const Matrix& S, Index ic,
                                                       const ClassifyOptions& options = {});

bool muscle_test(const Spectrum& psd);

struct IcVerdict {
    Index ic = 0;
    IcLabel label = IcLabel::Neural;
    std::vector<std::string> trace;
    std::map<std::string, double> diagnostics;
};

/// Labels every IC. `x` supplies the channel layout and the data used by the
/// contribution rule; S are the matching activations. Rules run in the order
/// alpha guard, blink, saccade, single channel, muscle, BCG.
std::vector<IcVerdict> classify_ics(const Recording& x, const IcaDecomposition& decomp, const Matrix& S,
                                    const ClassifyOptions& options = {});

} // namespace appear
