#include "appear/classify.hpp"

#include "appear/dsp.hpp"
#include "appear/errors.hpp"
#include "appear/montage.hpp"
#include "appear/preclean.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace appear {

namespace {

constexpr int kCells = kTopoGrid * kTopoGrid;

double tps_kernel(double r) { return r > 0 ? r * r * std::log(r) : 0.0; }

double cell_r(int row, int col) { return std::hypot(TopoMap::cell_x(col), TopoMap::cell_y(row)); }

int disc_cells()
{
    static const int n = [] {
        int c = 0;
        for (int r = 0; r < kTopoGrid; ++r)
            for (int k = 0; k < kTopoGrid; ++k) c += TopoMap::inside(r, k) ? 1 : 0;
        return c;
    }();
    return n;
}

bool in_band(int row, int col, double width) { return cell_r(row, col) > 1.0 - width; }

int band_cells(double width)
{
    int c = 0;
    for (int r = 0; r < kTopoGrid; ++r)
        for (int k = 0; k < kTopoGrid; ++k) c += TopoMap::inside(r, k) && in_band(r, k, width) ? 1 : 0;
    return c;
}

// 4-neighbour flood fill of cells where member(cell) holds.
template <class Pred>
std::vector<std::vector<int>> components(Pred member)
{
    std::vector<int> label(kCells, -1);
    std::vector<std::vector<int>> out;
    std::vector<int> stack;
    for (int start = 0; start < kCells; ++start) {
        if (label[static_cast<std::size_t>(start)] >= 0 || !member(start)) continue;
        const int id = static_cast<int>(out.size());
        out.emplace_back();
        stack.push_back(start);
        label[static_cast<std::size_t>(start)] = id;
        while (!stack.empty()) {
            const int cell = stack.back();
            stack.pop_back();
            out.back().push_back(cell);
            const int r = cell / kTopoGrid, c = cell % kTopoGrid;
            const int nb[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
            for (const auto& p : nb) {
                if (p[0] < 0 || p[0] >= kTopoGrid || p[1] < 0 || p[1] >= kTopoGrid) continue;
                const int n = p[0] * kTopoGrid + p[1];
                if (label[static_cast<std::size_t>(n)] >= 0 || !member(n)) continue;
                label[static_cast<std::size_t>(n)] = id;
                stack.push_back(n);
            }
        }
    }
    return out;
}

Region describe(const TopoMap& map, std::vector<int> cells, int sign, double band_width, int band_total)
{
    Region g;
    g.sign = sign;
    g.area = static_cast<double>(cells.size()) / disc_cells();
    double sx = 0, sy = 0;
    int in_arc = 0;
    for (int cell : cells) {
        const int r = cell / kTopoGrid, c = cell % kTopoGrid;
        sx += TopoMap::cell_x(c);
        sy += TopoMap::cell_y(r);
        if (in_band(r, c, band_width)) ++in_arc;
        g.peak = std::max(g.peak, std::abs(map.values[static_cast<std::size_t>(cell)]));
    }
    g.centroid = {sx / static_cast<double>(cells.size()), sy / static_cast<double>(cells.size())};
    g.arc = band_total > 0 ? static_cast<double>(in_arc) / band_total : 0.0;
    std::sort(cells.begin(), cells.end());
    g.cells = std::move(cells);
    return g;
}

std::vector<Index> bins_in(const Vector& f, double lo, double hi)
{
    std::vector<Index> out;
    for (Index k = 0; k < f.size(); ++k)
        if (f[k] >= lo && f[k] < hi) out.push_back(k);
    return out;
}

std::vector<Index> bins_closed(const Vector& f, double lo, double hi)
{
    std::vector<Index> out;
    for (Index k = 0; k < f.size(); ++k)
        if (f[k] >= lo && f[k] <= hi) out.push_back(k);
    return out;
}

double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v)
        if (std::isfinite(x)) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

const char* to_string(IcLabel label)
{
    switch (label) {
    case IcLabel::Neural: return "Neural";
    case IcLabel::BCG: return "BCG";
    case IcLabel::Blink: return "Blink";
    case IcLabel::Saccade: return "Saccade";
    case IcLabel::SingleChannel: return "SingleChannel";
    case IcLabel::Muscle: return "Muscle";
    }
    return "?";
}

ClassifyOptions classify_options(const PipelineConfig& c)
{
    ClassifyOptions o;
    o.psd_window_s = c.psd_window_s;
    o.region_threshold = c.region_threshold;
    o.boundary_width = c.boundary_width;
    o.min_region_area = c.min_region_area;
    o.secondary_min_area = c.secondary_min_area;
    o.secondary_min_arc = c.secondary_min_arc;
    o.frontal_y = c.frontal_y;
    o.blink_anterior_fraction = c.blink_anterior_fraction;
    o.saccade_min_separation = c.saccade_min_separation;
    o.alpha_overlap_unipolar = c.alpha_overlap_unipolar;
    o.alpha_overlap_bipolar = c.alpha_overlap_bipolar;
    o.occipital_radius = c.occipital_radius;
    o.contribution_mean_ratio = c.contribution_mean_ratio;
    o.contribution_min_ratio = c.contribution_min_ratio;
    o.single_channel_ratio2 = c.single_channel_ratio2;
    o.single_channel_ratio3 = c.single_channel_ratio3;
    o.single_channel_kurtosis = c.single_channel_kurtosis;
    o.bcg_rn_factor = c.bcg_rn_factor;
    o.bcg_offset_db = c.bcg_offset_db;
    o.bcg_cb_rise_factor = c.bcg_cb_rise_factor;
    return o;
}

bool TopoMap::inside(int row, int col) { return cell_r(row, col) <= 1.0; }

TopoMap interp_topomap(const Eigen::VectorXd& column, const std::vector<Position>& layout, Index source)
{
    const auto n = static_cast<Index>(layout.size());
    if (column.size() != n) throw ArgumentError("map column and layout sizes differ");
    if (n < 8) throw LayoutError("topographic interpolation needs at least 8 positioned channels");

    Eigen::MatrixXd P(n, 3);
    for (Index i = 0; i < n; ++i) P.row(i) << 1.0, layout[static_cast<std::size_t>(i)].x, layout[static_cast<std::size_t>(i)].y;
    Eigen::FullPivLU<Eigen::MatrixXd> plu(P);
    plu.setThreshold(1e-9);
    if (plu.rank() < 3) throw LayoutError("channel positions are collinear");

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 3, n + 3);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            const auto& a = layout[static_cast<std::size_t>(i)];
            const auto& b = layout[static_cast<std::size_t>(j)];
            M(i, j) = tps_kernel(std::hypot(a.x - b.x, a.y - b.y));
        }
    M.topRightCorner(n, 3) = P;
    M.bottomLeftCorner(3, n) = P.transpose();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 3);
    rhs.head(n) = column;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) throw LayoutError("channel positions do not determine a spline (duplicates?)");
    const Eigen::VectorXd coef = lu.solve(rhs);

    TopoMap map;
    map.source = source;
    map.values.assign(kCells, std::numeric_limits<double>::quiet_NaN());
    for (int r = 0; r < kTopoGrid; ++r)
        for (int c = 0; c < kTopoGrid; ++c) {
            if (!TopoMap::inside(r, c)) continue;
            const double x = TopoMap::cell_x(c), y = TopoMap::cell_y(r);
            double v = coef[n] + coef[n + 1] * x + coef[n + 2] * y;
            for (Index i = 0; i < n; ++i) {
                const auto& p = layout[static_cast<std::size_t>(i)];
                v += coef[i] * tps_kernel(std::hypot(x - p.x, y - p.y));
            }
            map.at(r, c) = v;
        }
    const double scale = max_abs(map.values);
    for (double& v : map.values)
        if (std::isfinite(v)) v = scale > 0 ? std::clamp(v / scale, -1.0, 1.0) : 0.0;
    return map;
}

PolarityRegions extract_polarity_regions(const TopoMap& map, const ClassifyOptions& o)
{
    const double thr = o.region_threshold;
    const int band_total = band_cells(o.boundary_width);
    auto value = [&](int cell) { return map.values[static_cast<std::size_t>(cell)]; };

    PolarityRegions out;
    for (int sign : {1, -1}) {
        auto comps = components([&](int cell) {
            const double v = value(cell);
            return std::isfinite(v) && sign * v > thr;
        });
        for (auto& cells : comps) {
            if (static_cast<double>(cells.size()) / disc_cells() < o.min_region_area) continue;
            out.regions.push_back(describe(map, std::move(cells), sign, o.boundary_width, band_total));
        }
    }
    std::stable_sort(out.regions.begin(), out.regions.end(),
                     [](const Region& a, const Region& b) { return a.area > b.area; });
    if (out.regions.empty()) return out;

    std::size_t p = 0;
    for (std::size_t i = 1; i < out.regions.size(); ++i)
        if (out.regions[i].peak > out.regions[p].peak + 1e-12) p = i;
    out.primary = out.regions[p];
    for (const auto& g : out.regions)
        if (g.sign == -out.primary->sign) {
            out.secondary = g;
            break;
        }
    for (const auto& g : out.regions)
        if (g.sign == out.primary->sign) {
            ++out.primary_sign_regions;
            if (g.arc > 0) ++out.primary_sign_arcs;
        }

    std::vector<char> taken(kCells, 0);
    for (int cell : out.primary->cells) taken[static_cast<std::size_t>(cell)] = 1;
    if (out.secondary)
        for (int cell : out.secondary->cells) taken[static_cast<std::size_t>(cell)] = 1;
    const auto rest = components([&](int cell) { return std::isfinite(value(cell)) && !taken[static_cast<std::size_t>(cell)]; });
    for (const auto& cells : rest)
        if (static_cast<double>(cells.size()) / disc_cells() >= o.min_region_area) ++out.neutral_count;
    return out;
}

Spectrum ic_spectrum(const Eigen::RowVectorXd& activation, double fs, double window_s)
{
    const PsdEstimate p = compute_psd(Vector(activation.transpose()), fs, window_s, 0.5);
    return {p.freqs, p.power_db.row(0).transpose(), p.power_linear.row(0).transpose()};
}

double band_mean(const Spectrum& s, double lo, double hi)
{
    const auto bins = bins_in(s.freqs, lo, hi);
    if (bins.empty()) throw ArgumentError("band [" + std::to_string(lo) + ", " + std::to_string(hi) + ") has no bins");
    double sum = 0.0;
    for (Index k : bins) sum += s.linear[k];
    return sum / static_cast<double>(bins.size());
}

std::pair<bool, BcgSpectralDiag> bcg_spectral_test(const Spectrum& psd, const ClassifyOptions& o)
{
    const Vector& f = psd.freqs;
    const Vector& S = psd.db;
    if (f.size() < 3 || f[0] > 1.0 || f[f.size() - 1] < 30.0 || (f[1] - f[0]) > 1.0)
        throw ArgumentError("spectrum must cover 1-30 Hz at <= 1 Hz resolution");

    BcgSpectralDiag d;
    const auto neuronal = bins_closed(f, 8.0, 12.0);
    Index kp = neuronal.front();
    for (Index k : neuronal)
        if (S[k] > S[kp]) kp = k;
    d.f_p = f[kp];
    d.s_n = S[kp];

    // Nearest strict local minimum below 8 Hz, searched down to 2 Hz.
    Index klmin = -1;
    for (Index k = kp; k >= 1; --k) {
        if (f[k] >= 8.0) continue;
        if (f[k] < 2.0) break;
        if (S[k] < S[k - 1] && S[k] < S[k + 1]) {
            klmin = k;
            break;
        }
    }
    Index lo = klmin;
    if (klmin >= 0) {
        d.f_lmin = f[klmin];
    } else {
        lo = bins_closed(f, 8.0, 12.0).front();
    }
    double floor_n = S[kp];
    for (Index k = lo; k <= kp; ++k) floor_n = std::min(floor_n, S[k]);
    d.r_n = S[kp] - floor_n;

    d.s_min = S[kp];
    for (Index k : bins_closed(f, 1.0, f[kp])) d.s_min = std::min(d.s_min, S[k]);
    const auto cb = bins_closed(f, 2.0, 7.0);
    double mean_cb = 0.0;
    for (Index k : cb) mean_cb += S[k];
    mean_cb /= static_cast<double>(cb.size());
    d.s_ave = mean_cb - d.s_min;

    for (Index k : cb) {
        if (k < 1 || k + 1 >= f.size()) continue;
        if (!(S[k] > S[k - 1] && S[k] >= S[k + 1])) continue;
        Index j = k;
        while (j > 0 && S[j - 1] < S[j]) --j;
        if (j == 0) continue;  // no left minimum before the spectrum edge
        const double rise = S[k] - S[j];
        if (rise > o.bcg_cb_rise_factor * d.s_ave) {
            d.cb_freqs.push_back(f[k]);
            d.cb_rises.push_back(rise);
            d.cb_powers.push_back(S[k]);
        }
    }
    d.cond_peak = !d.cb_rises.empty();
    if (d.cond_peak) {
        const double max_rise = *std::max_element(d.cb_rises.begin(), d.cb_rises.end());
        const double max_pow = *std::max_element(d.cb_powers.begin(), d.cb_powers.end());
        d.s3 = d.r_n <= o.bcg_rn_factor * d.s_ave;
        d.s4 = max_rise > d.r_n - o.bcg_offset_db;
        d.s5 = d.s_ave > o.bcg_rn_factor * d.r_n && max_pow > d.s_n - o.bcg_offset_db;
    }
    return {d.cond_peak && (d.s3 || d.s4 || d.s5), d};
}

bool bcg_topo_test(const PolarityRegions& g, const ClassifyOptions& o)
{
    if (!g.primary || !g.secondary) return false;
    if (g.neutral_count > 1) return false;
    if (g.primary_sign_regions != 1 || g.primary_sign_arcs != 1) return false;
    if (!(g.primary->centroid.x * g.secondary->centroid.x < 0)) return false;
    return g.secondary->area >= o.secondary_min_area && g.secondary->arc >= o.secondary_min_arc;
}

std::pair<bool, ContributionDiag> bcg_contribution_test(const Matrix& x, const IcaDecomposition& decomp,
                                                        const Matrix& S, Index ic, const ClassifyOptions& o)
{
    if (ic < 0 || ic >= decomp.components()) throw ArgumentError("IC index out of range");
    if (x.rows() != decomp.A.rows() || x.cols() != S.cols()) throw ArgumentError("data and sources do not match");
    ContributionDiag d;
    const auto s = S.row(ic);
    for (Index j = 0; j < x.rows(); ++j) {
        const double a = decomp.A(j, ic);
        double pos = 0, neg = 0, pos2 = 0, neg2 = 0;
        Index np = 0, nn = 0, np2 = 0, nn2 = 0;
        for (Index k = 0; k < x.cols(); ++k) {
            const double v = x(j, k);
            const double w = v - a * s[k];
            if (v > 0) { pos += v; ++np; }
            else if (v < 0) { neg -= v; ++nn; }
            if (w > 0) { pos2 += w; ++np2; }
            else if (w < 0) { neg2 -= w; ++nn2; }
        }
        const double ap = np ? pos / np : 0.0, an = nn ? neg / nn : 0.0;
        if (!(ap > 0) || !(an > 0)) continue;
        const double rp = (np2 ? pos2 / np2 : 0.0) / ap;
        const double rn = (nn2 ? neg2 / nn2 : 0.0) / an;
        d.channels.push_back(j);
        d.ratio_pos.push_back(rp);
        d.ratio_neg.push_back(rn);
        d.ratio_sym.push_back(0.5 * (rp + rn));
    }
    if (d.channels.empty()) throw ArgumentError("no channel has both positive and negative samples");
    d.min_sym = *std::min_element(d.ratio_sym.begin(), d.ratio_sym.end());
    d.min_single = std::min(*std::min_element(d.ratio_pos.begin(), d.ratio_pos.end()),
                            *std::min_element(d.ratio_neg.begin(), d.ratio_neg.end()));
    return {d.min_sym < o.contribution_mean_ratio && d.min_single < o.contribution_min_ratio, d};
}

double occipital_overlap(const TopoMap& map, const ClassifyOptions& o)
{
    std::vector<Position> sites;
    for (const char* label : {"O1", "Oz", "O2"}) sites.push_back(*standard_position(label));
    int total = 0, covered = 0;
    for (int r = 0; r < kTopoGrid; ++r)
        for (int c = 0; c < kTopoGrid; ++c) {
            if (!TopoMap::inside(r, c)) continue;
            const double x = TopoMap::cell_x(c), y = TopoMap::cell_y(r);
            bool in = false;
            for (const auto& p : sites) in = in || std::hypot(x - p.x, y - p.y) <= o.occipital_radius;
            if (!in) continue;
            ++total;
            if (std::abs(map.at(r, c)) > o.region_threshold) ++covered;
        }
    return total ? static_cast<double>(covered) / total : 0.0;
}

bool alpha_guard(const TopoMap& map, const Spectrum& psd, const ClassifyOptions& o)
{
    const auto regions = extract_polarity_regions(map, o);
    const double need = regions.bipolar(o.secondary_min_area) ? o.alpha_overlap_bipolar : o.alpha_overlap_unipolar;
    if (!(occipital_overlap(map, o) > need)) return false;

    const auto bins = bins_closed(psd.freqs, 1.0, std::min(70.0, psd.freqs[psd.freqs.size() - 1]));
    if (bins.empty()) return false;
    Index arg = bins.front();
    for (Index k : bins)
        if (psd.linear[k] > psd.linear[arg]) arg = k;
    const bool peak_alpha = psd.freqs[arg] >= 7.0 && psd.freqs[arg] <= 13.0 && psd.linear[arg] > 0;
    const double alpha = band_mean(psd, 7.0, 13.0);
    const bool mean_alpha =
        alpha > band_mean(psd, 1.0, 4.0) && alpha > band_mean(psd, 4.0, 7.0) && alpha > band_mean(psd, 13.0, 30.0);
    return peak_alpha || mean_alpha;
}

bool blink_test(const TopoMap& map, const ClassifyOptions& o)
{
    const auto g = extract_polarity_regions(map, o);
    if (!g.primary || g.bipolar(o.secondary_min_area)) return false;
    int dominant = 0;
    for (const auto& r : g.regions) dominant += r.area >= o.secondary_min_area ? 1 : 0;
    if (dominant != 1) return false;
    if (!(g.primary->centroid.y > o.frontal_y)) return false;
    int anterior = 0;
    for (int cell : g.primary->cells) anterior += TopoMap::cell_y(cell / kTopoGrid) > o.frontal_y ? 1 : 0;
    return static_cast<double>(anterior) >= o.blink_anterior_fraction * static_cast<double>(g.primary->cells.size());
}

bool saccade_test(const TopoMap& map, const ClassifyOptions& o)
{
    const auto g = extract_polarity_regions(map, o);
    if (!g.primary || !g.bipolar(o.secondary_min_area)) return false;
    int dominant = 0;
    for (const auto& r : g.regions) dominant += r.area >= o.secondary_min_area ? 1 : 0;
    if (dominant != 2) return false;
    const auto& a = g.primary->centroid;
    const auto& b = g.secondary->centroid;
    return a.y > o.frontal_y && b.y > o.frontal_y && std::abs(a.x - b.x) >= o.saccade_min_separation;
}

std::pair<bool, SingleChannelDiag> single_channel_test(const IcaDecomposition& decomp, const Matrix& S, Index ic,
                                                       const ClassifyOptions& o)
{
    if (ic < 0 || ic >= decomp.components()) throw ArgumentError("IC index out of range");
    SingleChannelDiag d;
    const Spectrum sp = ic_spectrum(S.row(ic), decomp.fs, o.psd_window_s);
    // Welch power is quadratic, so channel j of the one-IC reconstruction has
    // spectrum A(j, ic)^2 times the activation spectrum.
    const double total = sp.linear.sum();
    for (Index j = 0; j < decomp.A.rows(); ++j) d.channel_power.push_back(decomp.A(j, ic) * decomp.A(j, ic) * total);
    std::vector<double> sorted = d.channel_power;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    d.max1 = sorted.size() > 0 ? sorted[0] : 0.0;
    d.max2 = sorted.size() > 1 ? sorted[1] : 0.0;
    d.max3 = sorted.size() > 2 ? sorted[2] : 0.0;
    d.kurtosis = dsp::kurtosis(dsp::row_span(S, ic));
    d.delta = band_mean(sp, 1.0, 4.0);
    d.theta = band_mean(sp, 4.0, 8.0);
    d.alpha = band_mean(sp, 8.0, 12.0);
    d.beta = band_mean(sp, 13.0, 30.0);
    const bool ratios = d.max1 > o.single_channel_ratio2 * d.max2 && d.max1 > o.single_channel_ratio3 * d.max3;
    const bool kurt = d.kurtosis > o.single_channel_kurtosis;
    const bool alpha_low = d.alpha < d.delta && d.alpha < d.theta && d.alpha < d.beta;
    return {ratios && kurt && alpha_low, d};
}

bool muscle_test(const Spectrum& psd)
{
    const double gamma = band_mean(psd, 30.0, 60.0);
    return gamma > band_mean(psd, 1.0, 4.0) && gamma > band_mean(psd, 4.0, 8.0) && gamma > band_mean(psd, 8.0, 13.0) &&
           gamma > band_mean(psd, 13.0, 30.0);
}

std::vector<IcVerdict> classify_ics(const Recording& x, const IcaDecomposition& decomp, const Matrix& S,
                                    const ClassifyOptions& o)
{
    const Index N = decomp.components();
    if (x.channel_count() != decomp.A.rows()) throw ArgumentError("recording channels do not match the mixing matrix");
    if (S.rows() != N || S.cols() != x.sample_count()) throw ArgumentError("source matrix does not match the recording");
    std::vector<Position> layout;
    for (const auto& ch : x.channels) layout.push_back(ch.position);

    std::vector<IcVerdict> out;
    for (Index ic = 0; ic < N; ++ic) {
        IcVerdict v;
        v.ic = ic;
        auto& dg = v.diagnostics;

        const TopoMap map = interp_topomap(decomp.A.col(ic), layout, ic);
        const PolarityRegions regions = extract_polarity_regions(map, o);
        const Spectrum psd = ic_spectrum(S.row(ic), decomp.fs, o.psd_window_s);

        const bool guard = alpha_guard(map, psd, o);
        const bool blink = blink_test(map, o);
        const bool saccade = saccade_test(map, o);
        const auto [single, sd] = single_channel_test(decomp, S, ic, o);
        const bool muscle = muscle_test(psd);
        const auto [bcg_spec, bd] = bcg_spectral_test(psd, o);
        const bool bcg_topo = bcg_topo_test(regions, o);
        const auto [bcg_contrib, cd] = bcg_contribution_test(x.data, decomp, S, ic, o);

        dg["regions"] = static_cast<double>(regions.regions.size());
        dg["neutral_regions"] = regions.neutral_count;
        dg["primary_area"] = regions.primary ? regions.primary->area : 0.0;
        dg["primary_arc"] = regions.primary ? regions.primary->arc : 0.0;
        dg["secondary_area"] = regions.secondary ? regions.secondary->area : 0.0;
        dg["secondary_arc"] = regions.secondary ? regions.secondary->arc : 0.0;
        dg["bipolar"] = regions.bipolar(o.secondary_min_area) ? 1.0 : 0.0;
        dg["occipital_overlap"] = occipital_overlap(map, o);
        dg["band_delta"] = band_mean(psd, 1.0, 4.0);
        dg["band_theta"] = band_mean(psd, 4.0, 8.0);
        dg["band_alpha"] = band_mean(psd, 8.0, 13.0);
        dg["band_beta"] = band_mean(psd, 13.0, 30.0);
        dg["band_gamma"] = band_mean(psd, 30.0, 60.0);
        dg["sc_max1"] = sd.max1;
        dg["sc_max2"] = sd.max2;
        dg["sc_max3"] = sd.max3;
        dg["kurtosis"] = sd.kurtosis;
        dg["bcg_f_p"] = bd.f_p;
        dg["bcg_f_lmin"] = bd.f_lmin;
        dg["bcg_r_n"] = bd.r_n;
        dg["bcg_s_min"] = bd.s_min;
        dg["bcg_s_ave"] = bd.s_ave;
        dg["bcg_s_n"] = bd.s_n;
        dg["bcg_cb_peaks"] = static_cast<double>(bd.cb_rises.size());
        dg["bcg_cb_max_rise"] = bd.cb_rises.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                    : *std::max_element(bd.cb_rises.begin(), bd.cb_rises.end());
        dg["contribution_min_sym"] = cd.min_sym;
        dg["contribution_min_single"] = cd.min_single;

        const std::pair<const char*, bool> rules[] = {
            {"alpha_guard", guard},         {"blink", blink},       {"saccade", saccade},
            {"single_channel", single},     {"muscle", muscle},     {"bcg_spectral", bcg_spec},
            {"bcg_topo", bcg_topo},         {"bcg_contribution", bcg_contrib},
        };
        for (const auto& [name, fired] : rules) {
            dg[std::string("rule_") + name] = fired ? 1.0 : 0.0;
            if (fired) v.trace.emplace_back(name);
        }

        if (guard) v.label = IcLabel::Neural;
        else if (blink) v.label = IcLabel::Blink;
        else if (saccade) v.label = IcLabel::Saccade;
        else if (single) v.label = IcLabel::SingleChannel;
        else if (muscle) v.label = IcLabel::Muscle;
        else if (bcg_spec && bcg_topo && bcg_contrib) v.label = IcLabel::BCG;
        else v.label = IcLabel::Neural;
        out.push_back(std::move(v));
    }
    return out;
}

} // namespace appear
