#include "appear/cardiac.hpp"

#include "appear/dsp.hpp"
#include "appear/errors.hpp"
#include "appear/preclean.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace appear {

namespace {

constexpr double kMinRr = 0.25;
constexpr double kMaxRr = 3.0;

Recording single_row(const Eigen::RowVectorXd& row, double fs)
{
    Recording r;
    r.data = row;
    r.fs = fs;
    r.channels = {ChannelInfo{"x", {}, false}};
    return r;
}

double rr_cv(const std::vector<std::int64_t>& peaks)
{
    if (peaks.size() < 3) return std::numeric_limits<double>::infinity();
    std::vector<double> rr;
    for (std::size_t i = 1; i < peaks.size(); ++i) rr.push_back(static_cast<double>(peaks[i] - peaks[i - 1]));
    const double m = dsp::mean(rr);
    return m > 0 ? std::sqrt(dsp::variance(rr)) / m : std::numeric_limits<double>::infinity();
}

// Normalised symmetric Hann window with n (odd) nonzero taps.
std::vector<double> hann_kernel(int n)
{
    std::vector<double> w(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * (i + 1) / (n + 1));
        sum += w[static_cast<std::size_t>(i)];
    }
    for (double& v : w) v /= sum;
    return w;
}

std::vector<double> smooth(const std::vector<double>& x, const std::vector<double>& w)
{
    const auto n = static_cast<std::int64_t>(x.size());
    const auto h = static_cast<std::int64_t>(w.size()) / 2;
    std::vector<double> y(x.size(), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0.0, norm = 0.0;
        for (std::int64_t k = -h; k <= h; ++k) {
            const std::int64_t j = i + k;
            if (j < 0 || j >= n) continue;
            const double wk = w[static_cast<std::size_t>(k + h)];
            acc += wk * x[static_cast<std::size_t>(j)];
            norm += wk;
        }
        y[static_cast<std::size_t>(i)] = acc / norm;
    }
    return y;
}

// Samples equal to the maximum over +-half and above thr; plateaus keep their
// first sample.
std::vector<std::int64_t> window_maxima(const std::vector<double>& env, std::int64_t half, double thr)
{
    const auto n = static_cast<std::int64_t>(env.size());
    std::vector<std::int64_t> peaks;
    for (std::int64_t i = 0; i < n; ++i) {
        const double v = env[static_cast<std::size_t>(i)];
        if (!(v > thr)) continue;
        bool is_max = true;
        for (std::int64_t j = std::max<std::int64_t>(0, i - half); j <= std::min(n - 1, i + half) && is_max; ++j)
            if (env[static_cast<std::size_t>(j)] > v) is_max = false;
        if (!is_max) continue;
        if (!peaks.empty() && i - peaks.back() <= half) continue;
        peaks.push_back(i);
    }
    return peaks;
}

} // namespace

const char* to_string(CardiacMethod m)
{
    switch (m) {
    case CardiacMethod::ECG: return "ECG";
    case CardiacMethod::ICA: return "ICA";
    case CardiacMethod::Oximetry: return "Oximetry";
    }
    return "?";
}

void finalize_events(CardiacEvents& ev)
{
    if (!(ev.fs > 0)) throw ArgumentError("cardiac events need a positive sampling rate");
    std::sort(ev.peaks.begin(), ev.peaks.end());
    const auto min_gap = static_cast<std::int64_t>(std::ceil(kMinRr * ev.fs - 1e-9));
    std::vector<std::int64_t> kept;
    for (auto p : ev.peaks)
        if (kept.empty() || p - kept.back() >= min_gap) kept.push_back(p);
    ev.peaks = std::move(kept);

    std::vector<double> rr;
    for (std::size_t i = 1; i < ev.peaks.size(); ++i) {
        const double s = static_cast<double>(ev.peaks[i] - ev.peaks[i - 1]) / ev.fs;
        if (s >= kMinRr && s <= kMaxRr) rr.push_back(s);
    }
    if (rr.empty()) throw NoPeaksError("fewer than two beats with a plausible interval");
    const double m = dsp::mean(rr);
    ev.mean_hr_bpm = 60.0 / m;
    ev.rr_cv = std::sqrt(dsp::variance(rr)) / m;
}

CardiacEvents detect_r_peaks_ecg(const Recording& ecg, Index channel)
{
    if (channel < 0 || channel >= ecg.channel_count()) throw ArgumentError("ECG channel index out of range");
    if (ecg.fs < 250.0) throw ArgumentError("QRS detection needs at least 250 S/s");
    const Index n = ecg.sample_count();
    const double fs = ecg.fs;
    if (n < static_cast<Index>(2 * fs)) throw InsufficientDataError("ECG shorter than 2 s");

    const Eigen::RowVectorXd raw = ecg.data.row(channel);
    if (!raw.allFinite()) throw ArgumentError("ECG contains non-finite samples");
    const Eigen::RowVectorXd bp = fir_bandpass(single_row(raw, fs), 5.0, 15.0).data.row(0);

    // Five-point derivative, squaring, centred moving-window integration.
    std::vector<double> sq(static_cast<std::size_t>(n), 0.0);
    for (Index i = 2; i + 2 < n; ++i) {
        const double d = (2 * bp[i + 2] + bp[i + 1] - bp[i - 1] - 2 * bp[i - 2]) * fs / 8.0;
        sq[static_cast<std::size_t>(i)] = d * d;
    }
    const auto win = std::max<Index>(1, static_cast<Index>(std::lround(0.15 * fs)));
    std::vector<double> csum(static_cast<std::size_t>(n + 1), 0.0);
    for (Index i = 0; i < n; ++i) csum[static_cast<std::size_t>(i + 1)] = csum[static_cast<std::size_t>(i)] + sq[static_cast<std::size_t>(i)];
    std::vector<double> mwi(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const Index a = std::max<Index>(0, i - win / 2);
        const Index b = std::min<Index>(n, i - win / 2 + win);
        mwi[static_cast<std::size_t>(i)] = (csum[static_cast<std::size_t>(b)] - csum[static_cast<std::size_t>(a)]) / static_cast<double>(win);
    }
    const double top = *std::max_element(mwi.begin(), mwi.end());
    if (!(top > 0)) throw NoPeaksError("ECG has no QRS energy");

    std::vector<Index> cand;
    for (Index i = 1; i + 1 < n; ++i) {
        const double v = mwi[static_cast<std::size_t>(i)];
        if (v > mwi[static_cast<std::size_t>(i - 1)] && v >= mwi[static_cast<std::size_t>(i + 1)]) cand.push_back(i);
    }

    const auto learn = static_cast<std::size_t>(2 * fs);
    double spki = *std::max_element(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn)) / 3.0;
    double npki = std::accumulate(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn), 0.0) / learn / 2.0;
    double thr1 = npki + 0.25 * (spki - npki);
    const auto refractory = static_cast<Index>(std::lround(0.3 * fs));

    std::vector<Index> qrs;
    std::vector<double> rr_hist;
    std::size_t noise_from = 0;  // first candidate not yet considered for search-back
    auto rr_average = [&] {
        const std::size_t k = std::min<std::size_t>(8, rr_hist.size());
        return std::accumulate(rr_hist.end() - static_cast<std::ptrdiff_t>(k), rr_hist.end(), 0.0) / static_cast<double>(k);
    };
    auto accept = [&](Index i) {
        if (!qrs.empty()) rr_hist.push_back(static_cast<double>(i - qrs.back()));
        qrs.push_back(i);
    };

    for (std::size_t c = 0; c < cand.size(); ++c) {
        const Index i = cand[c];
        const double v = mwi[static_cast<std::size_t>(i)];

        if (!qrs.empty() && !rr_hist.empty() && static_cast<double>(i - qrs.back()) > 1.66 * rr_average()) {
            // Search back for a missed beat at half the threshold.
            const double thr2 = 0.5 * thr1;
            Index best = -1;
            for (std::size_t k = noise_from; k < c; ++k) {
                const Index j = cand[k];
                if (j - qrs.back() < refractory || i - j < refractory) continue;
                const double vj = mwi[static_cast<std::size_t>(j)];
                if (vj > thr2 && (best < 0 || vj > mwi[static_cast<std::size_t>(best)])) best = j;
            }
            if (best >= 0) {
                spki = 0.25 * mwi[static_cast<std::size_t>(best)] + 0.75 * spki;
                accept(best);
                thr1 = npki + 0.25 * (spki - npki);
            }
        }

        if (!qrs.empty() && i - qrs.back() < refractory) {
            if (v > mwi[static_cast<std::size_t>(qrs.back())] && v > thr1) qrs.back() = i;
            continue;
        }
        if (v > thr1) {
            spki = 0.125 * v + 0.875 * spki;
            accept(i);
            noise_from = c + 1;
        } else {
            npki = 0.125 * v + 0.875 * npki;
        }
        thr1 = npki + 0.25 * (spki - npki);
    }
    if (qrs.empty()) throw NoPeaksError("no QRS complex above threshold");

    // Polarity by majority vote, then the raw extremum within +-50 ms.
    const auto reach = static_cast<Index>(std::lround(0.05 * fs));
    int positive = 0;
    for (Index q : qrs) {
        const Index a = std::max<Index>(0, q - reach), b = std::min<Index>(n - 1, q + reach);
        const auto seg = raw.segment(a, b - a + 1);
        const double mu = seg.mean();
        if (seg.maxCoeff() - mu >= mu - seg.minCoeff()) ++positive;
    }
    const bool up = 2 * positive >= static_cast<int>(qrs.size());

    CardiacEvents ev;
    ev.fs = fs;
    ev.method = CardiacMethod::ECG;
    for (Index q : qrs) {
        const Index a = std::max<Index>(0, q - reach), b = std::min<Index>(n - 1, q + reach);
        Index arg = 0;
        if (up)
            raw.segment(a, b - a + 1).maxCoeff(&arg);
        else
            raw.segment(a, b - a + 1).minCoeff(&arg);
        ev.peaks.push_back(a + arg);
    }
    ev.peaks.erase(std::unique(ev.peaks.begin(), ev.peaks.end()), ev.peaks.end());
    finalize_events(ev);
    return ev;
}

CardiacEvents detect_pulse_peaks(const Recording& oxi)
{
    if (oxi.channel_count() < 1 || oxi.sample_count() < 3) throw EmptyDataError("oximetry trace is empty");
    if (!(oxi.fs > 0)) throw ArgumentError("oximetry needs a positive sampling rate");
    const double fs = oxi.fs;
    Eigen::RowVectorXd x = oxi.data.row(0);
    if (!x.allFinite()) throw ArgumentError("oximetry contains non-finite samples");

    // Pulse waveforms carry nothing of interest above a few hertz.
    const double lp = std::min(3.0, fs / 2.0 - 1.5);
    if (lp > 0.5 && oxi.sample_count() > static_cast<Index>(dsp::hamming_taps(fs, 2.0)))
        x = fir_bandpass(single_row(x, fs), 0.0, lp).data.row(0);

    const Index n = x.size();
    std::vector<double> v(x.data(), x.data() + n);
    const double iqr = dsp::percentile(v, 75.0) - dsp::percentile(v, 25.0);
    const double min_prom = 0.3 * iqr;

    struct Peak {
        Index at;
        double height;
    };
    std::vector<Peak> peaks;
    for (Index i = 1; i + 1 < n; ++i) {
        if (!(x[i] > x[i - 1])) continue;
        Index j = i;
        while (j + 1 < n && x[j + 1] == x[i]) ++j;
        if (j + 1 >= n || !(x[j + 1] < x[i])) {
            i = j;
            continue;
        }
        const Index at = (i + j) / 2;
        double left = x[i];
        for (Index k = i - 1; k >= 0 && x[k] <= x[i]; --k) left = std::min(left, x[k]);
        double right = x[i];
        for (Index k = j + 1; k < n && x[k] <= x[i]; ++k) right = std::min(right, x[k]);
        if (x[i] - std::max(left, right) >= min_prom && min_prom > 0) peaks.push_back({at, x[i]});
        i = j;
    }

    // Minimum spacing: higher peaks claim their neighbourhood first.
    const auto dist = static_cast<Index>(std::ceil(0.25 * fs));
    std::vector<std::size_t> order(peaks.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return peaks[a].height > peaks[b].height; });
    std::vector<bool> keep(peaks.size(), true);
    for (auto o : order) {
        if (!keep[o]) continue;
        for (std::size_t k = 0; k < peaks.size(); ++k)
            if (k != o && keep[k] && std::abs(peaks[k].at - peaks[o].at) < dist) keep[k] = false;
    }

    CardiacEvents ev;
    ev.fs = fs;
    ev.method = CardiacMethod::Oximetry;
    for (std::size_t k = 0; k < peaks.size(); ++k)
        if (keep[k]) ev.peaks.push_back(peaks[k].at);
    if (ev.peaks.size() < 2) throw NoPeaksError("no pulse peaks found");
    finalize_events(ev);
    return ev;
}

CardiacEvents detect_activation_peaks(const Eigen::RowVectorXd& activation, double fs)
{
    if (!(fs > 0)) throw ArgumentError("activation needs a positive sampling rate");
    if (activation.size() < 3) throw InsufficientDataError("activation too short");
    std::vector<double> mag(static_cast<std::size_t>(activation.size()));
    for (Index i = 0; i < activation.size(); ++i) mag[static_cast<std::size_t>(i)] = std::abs(activation[i]);

    CardiacEvents best;
    best.rr_cv = std::numeric_limits<double>::infinity();
    for (double scale : {0.05, 0.1, 0.2, 0.4}) {
        int w = std::max(3, static_cast<int>(std::lround(scale * fs)));
        if (w % 2 == 0) ++w;
        const auto env = smooth(mag, hann_kernel(w));
        const double med = dsp::median(env);
        const double thr = med + 0.3 * (dsp::percentile(env, 99.0) - med);
        auto peaks = window_maxima(env, w / 2, thr);
        const double cv = rr_cv(peaks);
        if (cv < best.rr_cv) {
            best.rr_cv = cv;
            best.peaks = std::move(peaks);
            best.scale_s = scale;
        }
    }
    if (!(best.rr_cv <= 0.5)) throw UnreliableError("RR intervals too irregular at every smoothing scale");
    best.fs = fs;
    best.method = CardiacMethod::ICA;
    const double scale = best.scale_s;
    finalize_events(best);
    best.scale_s = scale;
    return best;
}

CardiacEvents detect_r_peaks_ica(const IcaDecomposition& decomp, const std::vector<Index>& bcg_candidates)
{
    if (bcg_candidates.empty()) throw NoCandidateError("no BCG candidate component");
    const Index N = decomp.components();
    Index pick = -1;
    double score = -1.0;
    for (Index c : bcg_candidates) {
        if (c < 0 || c >= N) throw ArgumentError("candidate IC index out of range");
        const auto row = dsp::row_span(decomp.S_short, c);
        const double s = decomp.A.col(c).norm() * std::sqrt(dsp::variance(row));
        if (s > score) {
            score = s;
            pick = c;
        }
    }
    CardiacEvents ev = detect_activation_peaks(decomp.S_short.row(pick), decomp.fs);
    for (auto& p : ev.peaks) p = decomp.index_map.to_full(p);
    const double cv = ev.rr_cv, scale = ev.scale_s;
    finalize_events(ev);
    ev.rr_cv = cv;
    ev.scale_s = scale;
    return ev;
}

HrSelection select_cardiac_source(double hr_ecg, double hr_ica, double hr_oxi)
{
    for (double v : {hr_ecg, hr_ica, hr_oxi})
        if (!std::isfinite(v) || v <= 0) throw ArgumentError("heart rates must be finite and positive");
    HrSelection s{hr_ecg, hr_ica, hr_oxi, CardiacMethod::ICA};
    if (std::abs(hr_ecg - hr_oxi) < std::abs(hr_ica - hr_oxi)) s.chosen = CardiacMethod::ECG;
    return s;
}

Recording bcg_aas(const Recording& rec, const CardiacEvents& events, int n_template)
{
    if (n_template < 1) throw ArgumentError("template length must be positive");
    if (events.peaks.size() < 2) throw InsufficientEventsError("BCG subtraction needs at least two beats");
    if (std::abs(events.fs - rec.fs) > 1e-9 * rec.fs) throw ArgumentError("events and recording rates differ");

    std::vector<double> rr;
    for (std::size_t i = 1; i < events.peaks.size(); ++i) rr.push_back(static_cast<double>(events.peaks[i] - events.peaks[i - 1]));
    const double rr_med = dsp::median(rr);
    const auto pre = static_cast<Index>(std::lround(0.3 * rr_med));
    const auto post = static_cast<Index>(std::lround(0.7 * rr_med));
    const Index L = pre + post;
    const Index n = rec.sample_count();

    std::vector<Index> starts;
    for (auto p : events.peaks)
        if (p - pre >= 0 && p + post <= n) starts.push_back(p - pre);
    if (starts.size() < 2 || L < 1) throw InsufficientEventsError("fewer than two complete beat epochs");
    const auto E = static_cast<Index>(starts.size());
    const Index nt = std::min<Index>(n_template, E);

    Matrix out = rec.data;
    for (Index c = 0; c < rec.channel_count(); ++c) {
        if (c < static_cast<Index>(rec.channels.size()) && rec.channels[static_cast<std::size_t>(c)].is_ecg) continue;
        const auto x = rec.data.row(c);
        Eigen::RowVectorXd head = Eigen::RowVectorXd::Zero(L);
        for (Index e = 0; e < nt; ++e) head += x.segment(starts[static_cast<std::size_t>(e)], L);
        head /= static_cast<double>(nt);

        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(L);  // epochs e - nt .. e - 1
        for (Index e = 0; e < E; ++e) {
            const Index s = starts[static_cast<std::size_t>(e)];
            if (e < n_template) {
                out.row(c).segment(s, L) = x.segment(s, L) - head;
            } else {
                out.row(c).segment(s, L) = x.segment(s, L) - sum / static_cast<double>(n_template);
            }
            sum += x.segment(s, L);
            if (e >= n_template) sum -= x.segment(starts[static_cast<std::size_t>(e - n_template)], L);
        }
    }
    return rec.with_data(std::move(out));
}

IntervalSet detect_bad_intervals(const Recording& rec, const BadIntervalOptions& options)
{
    if (!(rec.fs > 0)) throw ArgumentError("recording needs a positive sampling rate");
    const Index n = rec.sample_count();
    std::vector<Index> eeg;
    for (Index c = 0; c < rec.channel_count(); ++c)
        if (c >= static_cast<Index>(rec.channels.size()) || !rec.channels[static_cast<std::size_t>(c)].is_ecg) eeg.push_back(c);
    if (eeg.empty() || n == 0) return {};

    const Recording sub = rec.select_channels(eeg);
    const Matrix band = fir_bandpass(sub, 20.0, 40.0).data;
    const auto len = std::min<Index>(n, std::max<Index>(1, static_cast<Index>(std::lround(options.window_s * rec.fs))));
    const auto step = std::max<Index>(1, static_cast<Index>(std::lround(options.step_s * rec.fs)));
    std::vector<Index> starts;
    for (Index s = 0; s + len <= n; s += step) starts.push_back(s);

    const auto C = static_cast<Index>(eeg.size());
    Matrix power(C, static_cast<Index>(starts.size()));
    for (Index c = 0; c < C; ++c)
        for (std::size_t w = 0; w < starts.size(); ++w)
            power(c, static_cast<Index>(w)) = band.row(c).segment(starts[w], len).squaredNorm() / static_cast<double>(len);

    const double ratio = std::pow(10.0, options.power_db / 10.0);
    const auto pad = static_cast<std::int64_t>(std::lround(options.pad_s * rec.fs));
    std::vector<Interval> raw;
    std::vector<double> med(static_cast<std::size_t>(C));
    for (Index c = 0; c < C; ++c) {
        const auto r = dsp::row_span(power, c);
        med[static_cast<std::size_t>(c)] = dsp::median({r.begin(), r.end()});
    }
    for (std::size_t w = 0; w < starts.size(); ++w) {
        bool bad = false;
        for (Index c = 0; c < C && !bad; ++c) {
            const double m = med[static_cast<std::size_t>(c)];
            const double p = power(c, static_cast<Index>(w));
            if (m > 0 ? p >= ratio * m : p > 0) bad = true;
            if (sub.data.row(c).segment(starts[w], len).cwiseAbs().maxCoeff() > options.amplitude_uv) bad = true;
        }
        if (bad) raw.push_back({starts[w] - pad, starts[w] + len + pad});
    }
    IntervalSet set = IntervalSet::merged(std::move(raw), n);
    if (static_cast<double>(set.total_length()) > options.max_fraction * static_cast<double>(n))
        throw ExcessiveArtifactError("more than " + std::to_string(static_cast<int>(options.max_fraction * 100)) +
                                     "% of the session is flagged");
    return set;
}

} // namespace appear
