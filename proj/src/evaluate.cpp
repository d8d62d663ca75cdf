#include "appear/evaluate.hpp"

#include "appear/dsp.hpp"
#include "appear/errors.hpp"
#include "appear/preclean.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace appear {

namespace {

constexpr double kPi = std::numbers::pi;

} // namespace

// --- time-frequency ------------------------------------------------------------

Scalogram cwt_morse(const Eigen::RowVectorXd& signal, double fs, const MorseOptions& o)
{
    if (!(fs > 0.0)) throw ArgumentError("sampling rate must be positive");
    const Index n = signal.size();
    if (static_cast<double>(n) < 2.0 * fs)
        throw InsufficientDataError("CWT needs at least 2 s of data, got " + std::to_string(n) + " samples");
    if (!(o.gamma > 0.0) || !(o.time_bandwidth > 0.0) || o.voices_per_octave < 1 || !(o.min_hz > 0.0))
        throw ArgumentError("invalid Morse wavelet parameters");

    const double beta = o.time_bandwidth / o.gamma;
    const double omega_peak = std::pow(beta / o.gamma, 1.0 / o.gamma);

    Scalogram sc;
    std::vector<double> freqs;
    for (int k = 0;; ++k) {
        const double f = o.min_hz * std::pow(2.0, static_cast<double>(k) / o.voices_per_octave);
        if (f > fs / 2.0) break;
        freqs.push_back(f);
    }
    sc.freqs = Eigen::Map<const Vector>(freqs.data(), static_cast<Index>(freqs.size()));
    sc.times = Vector::LinSpaced(n, 0.0, static_cast<double>(n - 1) / fs);
    sc.magnitude.resize(static_cast<Index>(freqs.size()), n);

    // Reflect half the signal on each side to keep the low-frequency wavelets
    // away from the circular wrap.
    const Index pad = std::min<Index>(n - 1, n / 2);
    const std::size_t L = dsp::next_pow2(static_cast<std::size_t>(n + 2 * pad));
    std::vector<dsp::Complex> x(L, 0.0);
    for (Index k = 0; k < n; ++k) x[static_cast<std::size_t>(pad + k)] = signal[k];
    for (Index k = 1; k <= pad; ++k) {
        x[static_cast<std::size_t>(pad - k)] = signal[k];
        x[static_cast<std::size_t>(pad + n - 1 + k)] = signal[n - 1 - k];
    }
    dsp::ComplexFft fft(L);
    fft.forward(x);

    std::vector<dsp::Complex> y(L);
    const double log_peak = std::log(omega_peak);
    const double peak_pow = std::pow(omega_peak, o.gamma);
    for (std::size_t fi = 0; fi < freqs.size(); ++fi) {
        const double scale = omega_peak / (2.0 * kPi * freqs[fi] / fs);
        std::fill(y.begin(), y.end(), dsp::Complex(0.0));
        for (std::size_t m = 1; m <= L / 2; ++m) {
            const double w = scale * 2.0 * kPi * static_cast<double>(m) / static_cast<double>(L);
            const double log_psi = beta * (std::log(w) - log_peak) - (std::pow(w, o.gamma) - peak_pow);
            if (log_psi < -700.0) continue;
            y[m] = x[m] * (2.0 * std::exp(log_psi));
        }
        fft.backward(y);
        for (Index k = 0; k < n; ++k)
            sc.magnitude(static_cast<Index>(fi), k) = std::abs(y[static_cast<std::size_t>(pad + k)]) / static_cast<double>(L);
    }
    return sc;
}

Recording channel_average(const Recording& rec)
{
    if (rec.channel_count() < 1) throw ArgumentError("recording has no channels");
    Recording out;
    out.fs = rec.fs;
    out.kind = rec.kind;
    out.markers = rec.markers;
    out.channels = {{"avg", {}, false}};
    out.data = rec.data.colwise().mean();
    return out;
}

// --- spectra -------------------------------------------------------------------

const std::vector<Band>& comparison_bands()
{
    static const std::vector<Band> bands = {
        {"delta", 1.0, 4.0},
        {"theta", 4.0, 8.0},
        {"alpha", 8.0, 13.0},
        {"beta", 13.0, 30.0},
    };
    return bands;
}

BandTable band_table(const Recording& rec, const IntervalSet& bad, double window_s, double overlap)
{
    const Recording kept = bad.empty() ? rec : excise_intervals(rec, bad).first;
    const PsdEstimate psd = compute_psd(kept, window_s, overlap);
    BandTable t;
    t.bands = comparison_bands();
    t.per_channel = Matrix::Zero(kept.channel_count(), static_cast<Index>(t.bands.size()));
    for (std::size_t b = 0; b < t.bands.size(); ++b) {
        int count = 0;
        for (Index k = 0; k < psd.freqs.size(); ++k) {
            if (psd.freqs[k] >= t.bands[b].lo_hz && psd.freqs[k] < t.bands[b].hi_hz) {
                t.per_channel.col(static_cast<Index>(b)) += psd.power_linear.col(k);
                ++count;
            }
        }
        if (count == 0) throw ArgumentError("band " + t.bands[b].name + " contains no PSD bins");
        t.per_channel.col(static_cast<Index>(b)) /= count;
        t.power.push_back(t.per_channel.col(static_cast<Index>(b)).mean());
    }
    return t;
}

// --- ERP -----------------------------------------------------------------------

std::string describe_reasons(unsigned reasons)
{
    if (reasons == RejectNone) return "accepted";
    std::string out;
    const std::pair<unsigned, const char*> names[] = {
        {RejectBoundary, "boundary"}, {RejectStep, "step"}, {RejectRange, "range"}, {RejectFlat, "flat"}};
    for (const auto& [bit, name] : names) {
        if (reasons & bit) {
            if (!out.empty()) out += ",";
            out += name;
        }
    }
    return out;
}

std::vector<std::size_t> ErpSet::accepted() const
{
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < reasons.size(); ++t)
        if (reasons[t] == RejectNone) out.push_back(t);
    return out;
}

ErpSet epoch_erp(const Recording& rec, const MarkerList& stimuli, const ErpWindow& window)
{
    if (!(rec.fs > 0.0)) throw ArgumentError("sampling rate must be positive");
    ErpSet set;
    set.fs = rec.fs;
    for (const auto& ch : rec.channels) set.channels.push_back(ch.label);
    set.pre = static_cast<Index>(std::llround(window.pre_ms * rec.fs / 1000.0));
    set.post = static_cast<Index>(std::llround(window.post_ms * rec.fs / 1000.0));
    std::size_t usable = 0;
    for (const auto& m : stimuli) {
        set.onsets.push_back(m.sample);
        const std::int64_t start = m.sample - set.pre;
        const std::int64_t end = m.sample + set.post;
        if (start < 0 || end >= rec.sample_count()) {
            set.epochs.emplace_back();
            set.reasons.push_back(RejectBoundary);
            continue;
        }
        set.epochs.emplace_back(rec.data.middleCols(start, set.samples()));
        set.reasons.push_back(RejectNone);
        ++usable;
    }
    if (usable == 0) throw EmptyDataError("no stimulus has a complete epoch window inside the data");
    return set;
}

ErpSet baseline_correct(const ErpSet& set)
{
    ErpSet out = set;
    if (set.pre == 0) return out;
    for (auto& e : out.epochs) {
        if (e.size() == 0) continue;
        const Vector base = e.leftCols(set.pre).rowwise().mean();
        e.colwise() -= base;
    }
    return out;
}

ErpSet erp_lowpass(const ErpSet& set, double cutoff_hz, int order)
{
    if (!(cutoff_hz > 0.0) || cutoff_hz >= set.fs / 2.0)
        throw ArgumentError("ERP low-pass cutoff must lie in (0, fs/2)");
    const auto sos = dsp::butterworth_lowpass(order, cutoff_hz, set.fs);
    ErpSet out = set;
    for (auto& e : out.epochs) {
        for (Index c = 0; c < e.rows(); ++c) {
            const Eigen::RowVectorXd row = e.row(c);
            std::span<double> dst(e.data() + c * e.cols(), static_cast<std::size_t>(e.cols()));
            dsp::sos_filtfilt(sos, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), dst);
        }
    }
    return out;
}

ErpSet reject_trials(const ErpSet& set, const RejectOptions& o)
{
    ErpSet out = set;
    const Index w = std::max<Index>(2, static_cast<Index>(std::llround(o.window_ms * set.fs / 1000.0)));
    for (std::size_t t = 0; t < out.epochs.size(); ++t) {
        const Matrix& e = out.epochs[t];
        if (e.size() == 0) continue;
        unsigned reasons = out.reasons[t] & RejectBoundary;
        for (Index c = 0; c < e.rows(); ++c) {
            for (Index k = 1; k < e.cols(); ++k)
                if (std::abs(e(c, k) - e(c, k - 1)) > o.step_uv) reasons |= RejectStep;
            const Index span = std::min<Index>(w, e.cols());
            for (Index s = 0; s + span <= e.cols(); ++s) {
                const auto seg = e.row(c).segment(s, span);
                const double range = seg.maxCoeff() - seg.minCoeff();
                if (range > o.range_uv) reasons |= RejectRange;
                if (range < o.flat_uv) reasons |= RejectFlat;
            }
        }
        out.reasons[t] = reasons;
    }
    return out;
}

ErpMeasures erp_measures(const ErpSet& set, const ErpMeasureOptions& o)
{
    const auto acc = set.accepted();
    if (acc.empty()) throw EmptyDataError("no accepted trials");
    ErpMeasures m;
    m.accepted_trials = acc.size();
    m.average = Matrix::Zero(static_cast<Index>(set.channels.size()), set.samples());
    for (std::size_t t : acc) m.average += set.epochs[t];
    m.average /= static_cast<double>(acc.size());

    auto window = [&](double lo_ms, double hi_ms) {
        std::vector<Index> ks;
        for (Index k = 0; k < set.samples(); ++k) {
            const double ms = set.time_ms(k);
            if (ms >= lo_ms - 1e-9 && ms <= hi_ms + 1e-9) ks.push_back(k);
        }
        if (ks.empty()) throw ArgumentError("measurement window holds no samples");
        return ks;
    };
    const auto n2_ks = window(o.n2_lo_ms, o.n2_hi_ms);
    const auto p3_ks = window(o.p3_lo_ms, o.p3_hi_ms);

    for (const auto& label : o.channels) {
        const auto it = std::find(set.channels.begin(), set.channels.end(), label);
        if (it == set.channels.end()) continue;
        const Index c = it - set.channels.begin();
        const auto row = m.average.row(c);
        ChannelErp ce;
        ce.channel = label;
        double noise = 0.0;
        if (set.pre > 0) {
            const auto base = row.head(set.pre);
            noise = base.maxCoeff() - base.minCoeff();
        }
        ce.noise_uv = std::max(noise, o.noise_floor_uv);

        auto measure = [&](const std::vector<Index>& ks, bool negative) {
            PeakMeasure p;
            Index best = ks.front();
            double sum = 0.0;
            for (Index k : ks) {
                sum += row[k];
                if (negative ? row[k] < row[best] : row[k] > row[best]) best = k;
            }
            p.amplitude_uv = row[best];
            p.latency_ms = set.time_ms(best);
            p.mean_uv = sum / static_cast<double>(ks.size());
            p.snr_peak = std::abs(p.amplitude_uv) / ce.noise_uv;
            p.snr_mean = std::abs(p.mean_uv) / ce.noise_uv;
            return p;
        };
        if (std::find(o.n2_channels.begin(), o.n2_channels.end(), label) != o.n2_channels.end())
            ce.n2 = measure(n2_ks, true);
        ce.p3 = measure(p3_ks, false);
        m.channels.push_back(std::move(ce));
    }
    if (m.channels.empty()) throw EmptyDataError("none of the ERP channels are present");
    return m;
}

// --- statistics ----------------------------------------------------------------

PairedStats paired_stats(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size()) throw ArgumentError("paired samples differ in length");
    if (a.size() < 2) throw ArgumentError("paired test needs at least two pairs");
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    PairedStats s;
    s.df = static_cast<double>(n - 1);
    s.mean_diff = dsp::mean(d);
    double ss = 0.0;
    for (double v : d) ss += (v - s.mean_diff) * (v - s.mean_diff);
    s.sd_diff = std::sqrt(ss / s.df);
    if (s.sd_diff == 0.0) {
        if (s.mean_diff == 0.0) return s;
        throw DegenerateError("paired differences are constant and nonzero");
    }
    s.t = s.mean_diff / (s.sd_diff / std::sqrt(static_cast<double>(n)));
    s.cohen_d = s.mean_diff / s.sd_diff;
    const boost::math::students_t dist(s.df);
    s.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(s.t)));
    return s;
}

} // namespace appear
