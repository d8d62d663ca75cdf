#include "appear/synth.hpp"

#include "appear/dsp.hpp"
#include "appear/errors.hpp"
#include "appear/montage.hpp"
#include "appear/preclean.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

namespace appear {

namespace {

using json = nlohmann::json;
constexpr double kPi = std::numbers::pi;
constexpr double kNeuralModulation = 0.35;

enum Stream : std::uint64_t { kBeats = 1, kNeural, kGradient, kBcg, kBlink, kMuscle, kEcg, kOximetry, kStimuli };

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), 0x5eedu};
    return std::mt19937_64(seq);
}

double gauss(double t, double c, double s) { return std::exp(-0.5 * (t - c) * (t - c) / (s * s)); }

double blob(const Position& p, double cx, double cy, double s) { return gauss(p.x, cx, s) * gauss(p.y, cy, s); }

/// Unit-variance noise whose amplitude spectrum is `shape(f)`, drawn in the
/// frequency domain.
Eigen::RowVectorXd shaped_noise(std::mt19937_64& rng, Index n, double fs, const std::function<double(double)>& shape)
{
    const std::size_t L = dsp::next_pow2(static_cast<std::size_t>(n));
    std::normal_distribution<double> g;
    std::vector<dsp::Complex> spec(L / 2 + 1, 0.0);
    for (std::size_t k = 1; k < spec.size(); ++k) {
        const double f = static_cast<double>(k) * fs / static_cast<double>(L);
        const double a = shape(f);
        const double re = g(rng), im = g(rng);
        if (a > 0.0) spec[k] = dsp::Complex(re, im) * a;
    }
    dsp::RealFft fft(L);
    std::vector<double> out;
    fft.inverse(spec, out);
    Eigen::RowVectorXd x = Eigen::Map<const Eigen::RowVectorXd>(out.data(), n);
    x.array() -= x.mean();
    const double sd = std::sqrt(x.squaredNorm() / static_cast<double>(n));
    if (sd > 0.0) x /= sd;
    return x;
}

std::function<double(double)> pink_shape(double exponent, double lo = 0.5, double hi = 100.0)
{
    return [=](double f) { return f >= lo && f <= hi ? std::pow(f, -exponent / 2.0) : 0.0; };
}

std::function<double(double)> band_shape(double lo, double hi)
{
    return [=](double f) { return f >= lo && f <= hi ? 1.0 : 0.0; };
}

struct Layout {
    std::vector<ChannelInfo> channels;  // scalp then ECG
    Index scalp = 0;
};

Layout make_layout(const SynthSpec& s)
{
    std::vector<std::string> labels(default_scalp_labels().begin(), default_scalp_labels().begin() + s.n_channels);
    labels.push_back("ECG");
    Layout l;
    l.channels = make_channels(labels);
    l.scalp = s.n_channels;
    return l;
}

Index sample_count(const SynthSpec& s) { return static_cast<Index>(std::llround(s.duration_s * s.fs_raw)); }

struct ScanPlan {
    Index volume_length = 0;
    std::vector<Index> volume_starts;
};

ScanPlan scan_plan(const SynthSpec& s)
{
    ScanPlan p;
    p.volume_length = static_cast<Index>(std::llround(s.tr_s * s.fs_raw));
    const Index lead = static_cast<Index>(std::llround(s.scan_lead_s * s.fs_raw));
    const Index n = sample_count(s);
    for (Index start = lead; start + p.volume_length + static_cast<Index>(0.5 * s.fs_raw) <= n;
         start += p.volume_length)
        p.volume_starts.push_back(start);
    return p;
}

std::vector<std::int64_t> stimulus_samples(const SynthSpec& s)
{
    std::vector<std::int64_t> out;
    if (!s.task) return out;
    auto rng = stream_rng(s.seed, kStimuli);
    std::uniform_real_distribution<double> isi(s.isi_min_s, s.isi_max_s);
    for (double t = 2.0; t < s.duration_s - 1.5; t += isi(rng)) out.push_back(std::llround(t * s.fs_raw));
    return out;
}

// --- constituents ----------------------------------------------------------------

Matrix neural(const SynthSpec& s, const Layout& l)
{
    const Index n = sample_count(s);
    Matrix m = Matrix::Zero(static_cast<Index>(l.channels.size()), n);
    if (n == 0) return m;
    auto rng = stream_rng(s.seed, kNeural);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    const int k_sources = std::max(1, s.n_channels - 2 - static_cast<int>(s.muscle_channels.size()) - 1);
    Matrix gains(l.scalp, k_sources);
    for (int k = 0; k < k_sources; ++k) {
        double cx = 0, cy = 1;
        while (cy > 0.15 || cx * cx + cy * cy > 0.75 * 0.75) {
            cx = 1.5 * u(rng) - 0.75;
            cy = 1.5 * u(rng) - 0.75;
        }
        const double sd = 0.35 + 0.25 * u(rng);
        for (Index c = 0; c < l.scalp; ++c) gains(c, k) = blob(l.channels[static_cast<std::size_t>(c)].position, cx, cy, sd);
    }
    const double rms = gains.rowwise().norm().mean();
    if (rms > 0.0) gains *= 0.25 * s.neural_uv / rms;
    if (s.neural_uv > 0.0) {
        for (int k = 0; k < k_sources; ++k) {
            // Slow log-normal amplitude modulation makes the rhythms wax and
            // wane, which also keeps the sources separable by ICA.
            const auto env = shaped_noise(rng, n, s.fs_raw, band_shape(0.05, 0.5));
            Eigen::RowVectorXd src = shaped_noise(rng, n, s.fs_raw, pink_shape(s.one_over_f));
            src.array() *= (kNeuralModulation * env.array()).exp();
            src /= std::sqrt(src.squaredNorm() / static_cast<double>(n));
            for (Index c = 0; c < l.scalp; ++c) m.row(c) += gains(c, k) * src;
        }
    }
    if (s.alpha_uv > 0.0) {
        const double f0 = 9.5 + u(rng);
        const auto alpha = shaped_noise(rng, n, s.fs_raw, [f0](double f) { return gauss(f, f0, 0.8); });
        for (Index c = 0; c < l.scalp; ++c)
            m.row(c) += s.alpha_uv * blob(l.channels[static_cast<std::size_t>(c)].position, 0.0, -0.95, 0.45) * alpha;
    }
    if (s.task) {
        const Index half = static_cast<Index>(std::llround(0.7 * s.fs_raw));
        for (std::int64_t onset : stimulus_samples(s)) {
            for (Index k = 0; k <= half; ++k) {
                const Index idx = onset + k;
                if (idx >= n) break;
                const double t = static_cast<double>(k) / s.fs_raw;
                const double v = s.n2_uv * gauss(t, 0.2, 0.015) + s.p3_uv * gauss(t, 0.4, 0.05);
                for (Index c = 0; c < l.scalp; ++c) m(c, idx) += erp_gain(l.channels[static_cast<std::size_t>(c)].position) * v;
            }
        }
    }
    return m;
}

double slice_waveform(double tau, double ts)
{
    static const double centers[] = {0.04, 0.10, 0.16, 0.55, 0.62};
    static const double amps[] = {1.0, -0.8, 0.6, -0.9, 0.7};
    double v = 0.0;
    for (int j = 0; j < 5; ++j) v += amps[j] * gauss(tau, centers[j] * ts, 0.00035);
    const double a = 0.2 * ts, b = 0.9 * ts;
    if (tau > a && tau < b) {
        const double w = 0.5 * (1.0 - std::cos(2.0 * kPi * (tau - a) / (b - a)));
        v += 0.3 * w * std::sin(2.0 * kPi * 1250.0 * tau);
    }
    return v;
}

Matrix gradient(const SynthSpec& s, const Layout& l)
{
    const Index n = sample_count(s);
    const Index rows = static_cast<Index>(l.channels.size());
    Matrix m = Matrix::Zero(rows, n);
    if (s.gradient_uv <= 0.0) return m;
    auto rng = stream_rng(s.seed, kGradient);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector gain(rows);
    for (Index c = 0; c < rows; ++c) gain[c] = s.gradient_uv * (0.4 + 0.6 * u(rng)) * (u(rng) < 0.5 ? -1.0 : 1.0);
    const double phase = 2.0 * kPi * u(rng);

    const ScanPlan plan = scan_plan(s);
    const double ts = s.tr_s / s.n_slices;
    std::vector<double> buf(static_cast<std::size_t>(plan.volume_length));
    for (std::size_t v = 0; v < plan.volume_starts.size(); ++v) {
        const double amp = 1.0 + s.gradient_drift * std::sin(2.0 * kPi * static_cast<double>(v) / 37.0 + phase);
        const double shift = s.gradient_jitter_s * std::sin(2.0 * kPi * static_cast<double>(v) / 53.0);
        for (Index j = 0; j < plan.volume_length; ++j) {
            const double t = static_cast<double>(j) / s.fs_raw - shift;
            const double slice = std::floor(t / ts);
            buf[static_cast<std::size_t>(j)] = amp * slice_waveform(t - slice * ts, ts);
        }
        const Index start = plan.volume_starts[v];
        for (Index c = 0; c < rows; ++c) {
            double* dst = m.data() + c * n + start;
            for (Index j = 0; j < plan.volume_length; ++j) dst[j] = gain[c] * buf[static_cast<std::size_t>(j)];
        }
    }
    return m;
}

Matrix bcg(const SynthSpec& s, const Layout& l, const std::vector<double>& beats)
{
    const Index n = sample_count(s);
    Matrix m = Matrix::Zero(static_cast<Index>(l.channels.size()), n);
    if (s.bcg_uv <= 0.0) return m;
    auto rng = stream_rng(s.seed, kBcg);
    std::normal_distribution<double> g;
    Eigen::RowVectorXd src = Eigen::RowVectorXd::Zero(n);
    const Index span = static_cast<Index>(std::llround(1.0 * s.fs_raw));
    for (double tb : beats) {
        const double a = 1.0 + s.bcg_variability * g(rng);
        const double f = 4.5 * (1.0 + 0.05 * g(rng));
        const Index start = static_cast<Index>(std::llround((tb + s.bcg_delay_s) * s.fs_raw));
        for (Index k = 0; k < span && start + k < n; ++k) {
            if (start + k < 0) continue;
            const double tau = static_cast<double>(k) / s.fs_raw;
            src[start + k] += a * std::sin(2.0 * kPi * f * tau) * std::exp(-tau / 0.2) * (1.0 - std::exp(-tau / 0.02));
        }
    }
    Vector gain(l.scalp);
    for (Index c = 0; c < l.scalp; ++c) {
        const auto& p = l.channels[static_cast<std::size_t>(c)].position;
        gain[c] = std::tanh(3.0 * p.x) * (1.2 - 0.4 * p.y);
    }
    const double peak = gain.cwiseAbs().maxCoeff();
    if (peak > 0.0) gain *= s.bcg_uv / peak;
    for (Index c = 0; c < l.scalp; ++c) m.row(c) = gain[c] * src;
    return m;
}

std::vector<double> poisson_times(std::mt19937_64& rng, double per_min, double duration, double min_gap)
{
    std::vector<double> out;
    if (per_min <= 0.0) return out;
    std::exponential_distribution<double> e(per_min / 60.0);
    for (double t = 1.0 + e(rng); t < duration - 2.0; t += std::max(min_gap, e(rng))) out.push_back(t);
    return out;
}

Matrix blink(const SynthSpec& s, const Layout& l)
{
    const Index n = sample_count(s);
    Matrix m = Matrix::Zero(static_cast<Index>(l.channels.size()), n);
    if (s.blink_uv <= 0.0 || s.blink_per_min <= 0.0) return m;
    auto rng = stream_rng(s.seed, kBlink);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::RowVectorXd src = Eigen::RowVectorXd::Zero(n);
    const Index len = static_cast<Index>(std::llround(0.3 * s.fs_raw));
    for (double t : poisson_times(rng, s.blink_per_min, s.duration_s, 1.0)) {
        const double a = 0.8 + 0.4 * u(rng);
        const Index start = static_cast<Index>(std::llround(t * s.fs_raw));
        for (Index k = 0; k <= len && start + k < n; ++k)
            src[start + k] += a * 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(k) / static_cast<double>(len)));
    }
    Vector gain(l.scalp);
    for (Index c = 0; c < l.scalp; ++c) gain[c] = blob(l.channels[static_cast<std::size_t>(c)].position, 0.0, 0.95, 0.35);
    gain *= s.blink_uv / gain.maxCoeff();
    for (Index c = 0; c < l.scalp; ++c) m.row(c) = gain[c] * src;
    return m;
}

Matrix muscle(const SynthSpec& s, const Layout& l)
{
    const Index n = sample_count(s);
    Matrix m = Matrix::Zero(static_cast<Index>(l.channels.size()), n);
    if (s.muscle_uv <= 0.0 || s.muscle_per_min <= 0.0) return m;
    auto rng = stream_rng(s.seed, kMuscle);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& label : s.muscle_channels) {
        Index row = -1;
        for (Index c = 0; c < l.scalp; ++c)
            if (l.channels[static_cast<std::size_t>(c)].label == label) row = c;
        if (row < 0) continue;
        for (double t : poisson_times(rng, s.muscle_per_min, s.duration_s, 2.0)) {
            const Index len = static_cast<Index>(std::llround((0.5 + u(rng)) * s.fs_raw));
            const Index start = static_cast<Index>(std::llround(t * s.fs_raw));
            const auto burst = shaped_noise(rng, len, s.fs_raw, band_shape(30.0, 60.0));
            for (Index k = 0; k < len && start + k < n; ++k) {
                const double w = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(k) / static_cast<double>(len - 1)));
                m(row, start + k) += s.muscle_uv * w * burst[k];
            }
        }
    }
    return m;
}

double pqrst(double t)
{
    return 0.12 * gauss(t, -0.2, 0.025) - 0.12 * gauss(t, -0.03, 0.008) + 1.0 * gauss(t, 0.0, 0.01) -
           0.25 * gauss(t, 0.03, 0.008) + 0.3 * gauss(t, 0.25, 0.04);
}

Matrix ecg_matrix(const SynthSpec& s, const Layout& l, const std::vector<double>& beats)
{
    const Index n = sample_count(s);
    Matrix m = Matrix::Zero(static_cast<Index>(l.channels.size()), n);
    const Index row = l.scalp;
    const Index before = static_cast<Index>(std::llround(0.35 * s.fs_raw));
    const Index after = static_cast<Index>(std::llround(0.5 * s.fs_raw));
    for (double tb : beats) {
        const Index centre = static_cast<Index>(std::llround(tb * s.fs_raw));
        for (Index k = std::max<Index>(0, centre - before); k < std::min(n, centre + after); ++k)
            m(row, k) += s.ecg_uv * pqrst(static_cast<double>(k) / s.fs_raw - tb);
    }
    return m;
}

double pulse_wave(double tau)
{
    if (tau < 0.0) return 0.0;
    return (1.0 - std::exp(-tau / 0.06)) * std::exp(-tau / 0.45) + 0.1 * gauss(tau, 0.4, 0.05);
}

Matrix constituent_matrix(const SynthSpec& s, const Layout& l, const std::string& name)
{
    if (name == "neural") return neural(s, l);
    if (name == "gradient") return gradient(s, l);
    if (name == "bcg") return bcg(s, l, beat_times(s));
    if (name == "blink") return blink(s, l);
    if (name == "muscle") return muscle(s, l);
    if (name == "ecg") return ecg_matrix(s, l, beat_times(s));
    throw ArgumentError("unknown constituent '" + name + "'");
}

MarkerList session_markers(const SynthSpec& s)
{
    MarkerList out;
    const ScanPlan plan = scan_plan(s);
    for (Index start : plan.volume_starts)
        for (int sl = 0; sl < s.n_slices; ++sl)
            out.push_back({s.slice_marker,
                           start + std::llround(static_cast<double>(sl) * static_cast<double>(plan.volume_length) / s.n_slices),
                           "Response"});
    for (std::int64_t t : stimulus_samples(s)) out.push_back({s.stimulus_marker, t, "Stimulus"});
    sort_markers(out);
    return out;
}

Recording wrap(const SynthSpec& s, const Layout& l, Matrix data, const MarkerList& markers)
{
    Recording r;
    r.data = std::move(data);
    r.fs = s.fs_raw;
    r.channels = l.channels;
    r.markers = markers;
    return r;
}

} // namespace

// --- spec ------------------------------------------------------------------------

void SynthSpec::validate() const
{
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ArgumentError("invalid synthesis spec: " + what);
    };
    require(duration_s >= 10.0, "duration must be at least 10 s");
    require(n_channels >= 1 && n_channels <= static_cast<int>(default_scalp_labels().size()),
            "channel count must lie in [1, 31]");
    require(fs_raw > 0.0, "sampling rate must be positive");
    require(tr_s > 0.0 && n_slices >= 1, "TR and slice count must be positive");
    require(scan_lead_s >= 0.0, "scan lead must be non-negative");
    require(hr_bpm > 0.0 && hr_bpm <= 240.0, "heart rate must lie in (0, 240]");
    require(oximetry_fs > 0.0, "oximetry rate must be positive");
    require(isi_min_s > 0.0 && isi_max_s >= isi_min_s, "inter-stimulus interval range is invalid");
    for (double v : {gradient_uv, gradient_drift, gradient_jitter_s, rr_jitter, bcg_uv, bcg_variability, bcg_delay_s,
                     ecg_uv, oximetry_delay_s, blink_per_min, blink_uv, muscle_per_min, muscle_uv, neural_uv, alpha_uv,
                     one_over_f})
        require(std::isfinite(v) && v >= 0.0, "rates and amplitudes must be non-negative");
    require(rr_jitter < 0.5, "RR jitter must be below 0.5");
    const auto& labels = default_scalp_labels();
    for (const auto& ch : muscle_channels) {
        const auto it = std::find(labels.begin(), labels.begin() + n_channels, ch);
        require(it != labels.begin() + n_channels, "muscle channel '" + ch + "' is not in the montage");
    }
}

std::string spec_to_json(const SynthSpec& s)
{
    json j;
    j["duration_s"] = s.duration_s;
    j["n_channels"] = s.n_channels;
    j["fs_raw"] = s.fs_raw;
    j["seed"] = s.seed;
    j["tr_s"] = s.tr_s;
    j["n_slices"] = s.n_slices;
    j["scan_lead_s"] = s.scan_lead_s;
    j["gradient_uv"] = s.gradient_uv;
    j["gradient_drift"] = s.gradient_drift;
    j["gradient_jitter_s"] = s.gradient_jitter_s;
    j["slice_marker"] = s.slice_marker;
    j["hr_bpm"] = s.hr_bpm;
    j["rr_jitter"] = s.rr_jitter;
    j["bcg_uv"] = s.bcg_uv;
    j["bcg_variability"] = s.bcg_variability;
    j["bcg_delay_s"] = s.bcg_delay_s;
    j["ecg_uv"] = s.ecg_uv;
    j["oximetry_fs"] = s.oximetry_fs;
    j["oximetry_delay_s"] = s.oximetry_delay_s;
    j["blink_per_min"] = s.blink_per_min;
    j["blink_uv"] = s.blink_uv;
    j["muscle_per_min"] = s.muscle_per_min;
    j["muscle_uv"] = s.muscle_uv;
    j["muscle_channels"] = s.muscle_channels;
    j["neural_uv"] = s.neural_uv;
    j["alpha_uv"] = s.alpha_uv;
    j["one_over_f"] = s.one_over_f;
    j["task"] = s.task;
    j["isi_min_s"] = s.isi_min_s;
    j["isi_max_s"] = s.isi_max_s;
    j["n2_uv"] = s.n2_uv;
    j["p3_uv"] = s.p3_uv;
    j["stimulus_marker"] = s.stimulus_marker;
    return j.dump(2);
}

SynthSpec spec_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("synthesis spec is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("synthesis spec must be a JSON object");
    SynthSpec s;
    const std::map<std::string, std::function<void(const json&)>> fields = {
        {"duration_s", [&](const json& v) { s.duration_s = v.get<double>(); }},
        {"n_channels", [&](const json& v) { s.n_channels = v.get<int>(); }},
        {"fs_raw", [&](const json& v) { s.fs_raw = v.get<double>(); }},
        {"seed", [&](const json& v) { s.seed = v.get<std::uint64_t>(); }},
        {"tr_s", [&](const json& v) { s.tr_s = v.get<double>(); }},
        {"n_slices", [&](const json& v) { s.n_slices = v.get<int>(); }},
        {"scan_lead_s", [&](const json& v) { s.scan_lead_s = v.get<double>(); }},
        {"gradient_uv", [&](const json& v) { s.gradient_uv = v.get<double>(); }},
        {"gradient_drift", [&](const json& v) { s.gradient_drift = v.get<double>(); }},
        {"gradient_jitter_s", [&](const json& v) { s.gradient_jitter_s = v.get<double>(); }},
        {"slice_marker", [&](const json& v) { s.slice_marker = v.get<std::string>(); }},
        {"hr_bpm", [&](const json& v) { s.hr_bpm = v.get<double>(); }},
        {"rr_jitter", [&](const json& v) { s.rr_jitter = v.get<double>(); }},
        {"bcg_uv", [&](const json& v) { s.bcg_uv = v.get<double>(); }},
        {"bcg_variability", [&](const json& v) { s.bcg_variability = v.get<double>(); }},
        {"bcg_delay_s", [&](const json& v) { s.bcg_delay_s = v.get<double>(); }},
        {"ecg_uv", [&](const json& v) { s.ecg_uv = v.get<double>(); }},
        {"oximetry_fs", [&](const json& v) { s.oximetry_fs = v.get<double>(); }},
        {"oximetry_delay_s", [&](const json& v) { s.oximetry_delay_s = v.get<double>(); }},
        {"blink_per_min", [&](const json& v) { s.blink_per_min = v.get<double>(); }},
        {"blink_uv", [&](const json& v) { s.blink_uv = v.get<double>(); }},
        {"muscle_per_min", [&](const json& v) { s.muscle_per_min = v.get<double>(); }},
        {"muscle_uv", [&](const json& v) { s.muscle_uv = v.get<double>(); }},
        {"muscle_channels", [&](const json& v) { s.muscle_channels = v.get<std::vector<std::string>>(); }},
        {"neural_uv", [&](const json& v) { s.neural_uv = v.get<double>(); }},
        {"alpha_uv", [&](const json& v) { s.alpha_uv = v.get<double>(); }},
        {"one_over_f", [&](const json& v) { s.one_over_f = v.get<double>(); }},
        {"task", [&](const json& v) { s.task = v.get<bool>(); }},
        {"isi_min_s", [&](const json& v) { s.isi_min_s = v.get<double>(); }},
        {"isi_max_s", [&](const json& v) { s.isi_max_s = v.get<double>(); }},
        {"n2_uv", [&](const json& v) { s.n2_uv = v.get<double>(); }},
        {"p3_uv", [&](const json& v) { s.p3_uv = v.get<double>(); }},
        {"stimulus_marker", [&](const json& v) { s.stimulus_marker = v.get<std::string>(); }},
    };
    for (const auto& [key, value] : j.items()) {
        const auto it = fields.find(key);
        if (it == fields.end()) throw ParseError("unknown synthesis spec key '" + key + "'");
        try {
            it->second(value);
        } catch (const json::exception& e) {
            throw ParseError("synthesis spec key '" + key + "' has the wrong type");
        }
    }
    return s;
}

const std::vector<std::string>& constituent_names()
{
    static const std::vector<std::string> names = {"neural", "gradient", "bcg", "blink", "muscle", "ecg"};
    return names;
}

double erp_gain(const Position& p) { return gauss(p.x, 0.0, 0.35); }

std::vector<double> beat_times(const SynthSpec& s)
{
    auto rng = stream_rng(s.seed, kBeats);
    std::normal_distribution<double> g;
    const double rr = 60.0 / s.hr_bpm;
    std::vector<double> out;
    for (double t = 0.3; t < s.duration_s - 0.05;) {
        out.push_back(t);
        t += rr * std::clamp(1.0 + s.rr_jitter * g(rng), 0.5, 1.5);
    }
    return out;
}

SynthSession generate(const SynthSpec& spec, const std::set<std::string>& keep)
{
    spec.validate();
    for (const auto& k : keep)
        if (std::find(constituent_names().begin(), constituent_names().end(), k) == constituent_names().end())
            throw ArgumentError("unknown constituent '" + k + "'");
    const Layout layout = make_layout(spec);
    const MarkerList markers = session_markers(spec);

    SynthSession s;
    s.spec = spec;
    const auto beats = beat_times(spec);
    for (double t : beats) s.r_peaks.push_back(std::llround(t * spec.fs_raw));
    for (const auto& m : markers)
        if (m.label == spec.stimulus_marker && m.type == "Stimulus") s.stimuli.push_back(m);

    Matrix raw;
    for (const auto& name : constituent_names()) {
        Matrix part = constituent_matrix(spec, layout, name);
        if (raw.size() == 0) raw = part;
        else raw += part;
        if (name == "ecg") {
            s.ecg.data = part.bottomRows(1);
            s.ecg.fs = spec.fs_raw;
            s.ecg.channels = {layout.channels.back()};
            s.ecg.kind = SignalKind::ECG;
        }
        if (keep.empty() || keep.count(name)) s.truth[name] = wrap(spec, layout, std::move(part), markers);
    }
    s.raw = wrap(spec, layout, std::move(raw), markers);

    s.oximetry.fs = spec.oximetry_fs;
    s.oximetry.kind = SignalKind::Oximetry;
    s.oximetry.channels = {{"Pleth", {}, false}};
    const Index n_oxi = static_cast<Index>(std::floor(spec.duration_s * spec.oximetry_fs));
    s.oximetry.data = Matrix::Zero(1, n_oxi);
    auto rng = stream_rng(spec.seed, kOximetry);
    std::normal_distribution<double> g;
    for (Index k = 0; k < n_oxi; ++k) {
        const double t = static_cast<double>(k) / spec.oximetry_fs;
        double v = 0.0;
        for (double tb : beats) {
            const double tau = t - tb - spec.oximetry_delay_s;
            if (tau < -0.01) break;
            if (tau < 3.0) v += pulse_wave(tau);
        }
        s.oximetry.data(0, k) = v + 0.01 * g(rng);
    }
    return s;
}

Recording synth_constituent(const SynthSpec& spec, const std::string& name)
{
    spec.validate();
    const Layout layout = make_layout(spec);
    return wrap(spec, layout, constituent_matrix(spec, layout, name), session_markers(spec));
}

// --- scoring -------------------------------------------------------------------

RecoveryMetrics score_recovery(const Recording& cleaned, const Recording& truth_neural, const IntervalSet& bad,
                               double slice_hz)
{
    if (cleaned.channel_count() != truth_neural.channel_count() ||
        cleaned.sample_count() != truth_neural.sample_count() || std::abs(cleaned.fs - truth_neural.fs) > 1e-9)
        throw ArgumentError("cleaned and truth recordings differ in shape or rate");
    for (Index c = 0; c < cleaned.channel_count(); ++c)
        if (cleaned.channels[static_cast<std::size_t>(c)].label != truth_neural.channels[static_cast<std::size_t>(c)].label)
            throw ArgumentError("cleaned and truth recordings differ in channel order");
    std::vector<Index> scalp;
    for (Index c = 0; c < cleaned.channel_count(); ++c)
        if (!cleaned.channels[static_cast<std::size_t>(c)].is_ecg) scalp.push_back(c);
    if (scalp.empty()) throw ArgumentError("no scalp channels to score");

    const Recording a = fir_bandpass(excise_intervals(cleaned.select_channels(scalp), bad).first, 1.0, 70.0);
    const Recording b = fir_bandpass(excise_intervals(truth_neural.select_channels(scalp), bad).first, 1.0, 70.0);

    RecoveryMetrics m;
    for (std::size_t i = 0; i < scalp.size(); ++i) {
        const Index c = static_cast<Index>(i);
        m.channels.push_back(a.channels[i].label);
        const double va = dsp::variance(dsp::row_span(a.data, c));
        const double vb = dsp::variance(dsp::row_span(b.data, c));
        m.correlation.push_back(va > 0.0 && vb > 0.0 ? dsp::pearson(dsp::row_span(a.data, c), dsp::row_span(b.data, c))
                                                     : 0.0);
    }
    m.mean_correlation = dsp::mean(m.correlation);
    m.median_correlation = dsp::median(m.correlation);

    const Recording residual = a.with_data(a.data - b.data);
    m.residual_rms_uv = std::sqrt(residual.data.squaredNorm() / static_cast<double>(std::max<Index>(1, residual.data.size())));
    if (residual.duration() >= 4.096) {
        const PsdEstimate psd = compute_psd(residual);
        double slice = 0.0, band = 0.0;
        const double df = psd.resolution();
        for (Index k = 0; k < psd.freqs.size(); ++k) {
            const double f = psd.freqs[k];
            const double p = psd.power_linear.col(k).mean() * df;
            if (f >= 2.0 && f < 7.0) band += p;
            const double h = std::round(f / slice_hz);
            if (h >= 1.0 && std::abs(f - h * slice_hz) <= 0.5) slice += p;
        }
        m.residual_slice_db = 10.0 * std::log10(std::max(slice, 1e-30));
        m.residual_bcg_band_db = 10.0 * std::log10(std::max(band, 1e-30));
    }
    return m;
}

double locked_power(const Recording& rec, const std::vector<std::int64_t>& events, double pre_s, double post_s)
{
    const Index pre = static_cast<Index>(std::llround(pre_s * rec.fs));
    const Index len = pre + static_cast<Index>(std::llround(post_s * rec.fs));
    std::vector<Index> scalp;
    for (Index c = 0; c < rec.channel_count(); ++c)
        if (!rec.channels[static_cast<std::size_t>(c)].is_ecg) scalp.push_back(c);
    Matrix acc = Matrix::Zero(static_cast<Index>(scalp.size()), len);
    int used = 0;
    for (std::int64_t e : events) {
        const Index start = e - pre;
        if (start < 0 || start + len > rec.sample_count()) continue;
        for (std::size_t i = 0; i < scalp.size(); ++i) acc.row(static_cast<Index>(i)) += rec.data.row(scalp[i]).segment(start, len);
        ++used;
    }
    if (used == 0) throw InsufficientEventsError("no event has a complete window");
    acc /= used;
    return acc.squaredNorm() / static_cast<double>(acc.size());
}

// --- planted-IC benchmark -----------------------------------------------------

PlantedScene planted_ic_scene(std::uint64_t seed, double duration_s)
{
    const double fs = 250.0;
    const Index n = static_cast<Index>(std::llround(duration_s * fs));
    const auto& labels = default_scalp_labels();
    const Index N = static_cast<Index>(labels.size());
    std::vector<Position> pos;
    for (const auto& l : labels) pos.push_back(*standard_position(l));
    auto rng = stream_rng(seed, 0xb3u);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g;
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    auto channel = [&](const std::string& l) {
        return static_cast<Index>(std::find(labels.begin(), labels.end(), l) - labels.begin());
    };
    auto map_of = [&](const std::function<double(const Position&)>& fn) {
        Vector v(N);
        for (Index c = 0; c < N; ++c) v[c] = fn(pos[static_cast<std::size_t>(c)]);
        return v;
    };
    auto normalise = [](Eigen::RowVectorXd x) {
        x.array() -= x.mean();
        const double sd = std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
        return sd > 0.0 ? Eigen::RowVectorXd(x / sd) : x;
    };

    PlantedScene sc;
    Eigen::MatrixXd A(N, N);
    sc.S.resize(N, n);

    // BCG: damped oscillation per beat, left/right antisymmetric map.
    {
        Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(n);
        const double rr = 60.0 / uni(55.0, 85.0);
        const double f0 = uni(3.5, 5.5);
        for (double t = 0.3; t < duration_s; t += rr * (1.0 + 0.04 * g(rng))) {
            const double a = 1.0 + 0.2 * g(rng);
            const double f = f0 * (1.0 + 0.05 * g(rng));
            const Index start = static_cast<Index>(std::llround(t * fs));
            for (Index k = 0; k < static_cast<Index>(fs) && start + k < n; ++k) {
                const double tau = static_cast<double>(k) / fs;
                s[start + k] += a * std::sin(2.0 * kPi * f * tau) * std::exp(-tau / 0.2) * (1.0 - std::exp(-tau / 0.02));
            }
        }
        for (Index k = 0; k < n; ++k) s[k] += 0.05 * g(rng);
        sc.S.row(0) = normalise(s);
        const double th = uni(-0.3, 0.3), k3 = uni(2.5, 4.0), d = uni(-0.15, 0.15);
        A.col(0) = 2.0 * map_of([&](const Position& p) {
            return std::tanh(k3 * (p.x * std::cos(th) - p.y * std::sin(th)) + d) * (1.2 - 0.4 * p.y);
        });
        sc.expected.push_back("BCG");
    }
    // Blink: 300 ms raised-cosine pulses on a frontal map.
    {
        Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(n);
        const Index len = static_cast<Index>(0.3 * fs);
        std::exponential_distribution<double> e(15.0 / 60.0);
        for (double t = 1.0 + e(rng); t < duration_s - 1.0; t += std::max(1.0, e(rng))) {
            const Index start = static_cast<Index>(std::llround(t * fs));
            const double a = uni(0.7, 1.3);
            for (Index k = 0; k <= len && start + k < n; ++k)
                s[start + k] += a * 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(k) / static_cast<double>(len)));
        }
        for (Index k = 0; k < n; ++k) s[k] += 0.02 * g(rng);
        sc.S.row(1) = normalise(s);
        const double cx = uni(-0.15, 0.15), cy = uni(0.85, 1.0), sd = uni(0.3, 0.4);
        A.col(1) = 3.0 * map_of([&](const Position& p) { return blob(p, cx, cy, sd); });
        sc.expected.push_back("Blink");
    }
    // Saccade: piecewise-constant gaze with short ramps, frontal left/right pair.
    {
        Eigen::RowVectorXd s(n);
        double level = 0.0, target = 0.0;
        Index next = 0;
        for (Index k = 0; k < n; ++k) {
            if (k == next) {
                target = g(rng);
                next = k + static_cast<Index>(uni(0.5, 3.0) * fs);
            }
            level += 0.25 * (target - level);
            s[k] = level + 0.02 * g(rng);
        }
        sc.S.row(2) = normalise(s);
        const Position f7 = pos[static_cast<std::size_t>(channel("F7"))];
        const Position f8 = pos[static_cast<std::size_t>(channel("F8"))];
        const double jx = uni(-0.05, 0.05), jy = uni(-0.05, 0.1), sd = uni(0.25, 0.35);
        A.col(2) = 2.0 * map_of([&](const Position& p) {
            return blob(p, f7.x + jx, f7.y + jy, sd) - blob(p, f8.x - jx, f8.y + jy, sd);
        });
        sc.expected.push_back("Saccade");
    }
    // Single channel: impulsive high-frequency bursts on one lateral lead.
    {
        Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(n);
        double prev = 0.0;
        const Index period = static_cast<Index>(uni(4.0, 7.0) * fs);
        for (Index b = static_cast<Index>(uni(0.2, 2.0) * fs); b + 50 < n; b += period)
            for (Index k = 0; k < 50; ++k) {
                const double w = g(rng);
                s[b + k] = 20.0 * (w - prev) * std::exp(-0.05 * static_cast<double>(k));
                prev = w;
            }
        s += 0.8 * shaped_noise(rng, n, fs, pink_shape(2.0, 0.2, 100.0));
        sc.S.row(3) = normalise(s);
        static const char* leads[] = {"T7", "T8", "TP9", "TP10", "F7", "F8"};
        const Index c0 = channel(leads[static_cast<int>(u(rng) * 6) % 6]);
        Vector col(N);
        for (Index c = 0; c < N; ++c) col[c] = 0.02 * g(rng);
        col[c0] = 3.0;
        A.col(3) = col;
        sc.expected.push_back("SingleChannel");
    }
    // Muscle: 30-60 Hz bursts over a temporal patch.
    {
        const auto carrier = shaped_noise(rng, n, fs, band_shape(30.0, 60.0));
        Eigen::RowVectorXd env = Eigen::RowVectorXd::Constant(n, 0.1);
        for (double t = uni(0.5, 2.0); t < duration_s - 2.0; t += uni(3.0, 8.0)) {
            const Index start = static_cast<Index>(t * fs), len = static_cast<Index>(uni(0.5, 1.5) * fs);
            for (Index k = 0; k < len && start + k < n; ++k)
                env[start + k] += 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(k) / static_cast<double>(len)));
        }
        sc.S.row(4) = normalise(carrier.cwiseProduct(env));
        const double side = u(rng) < 0.5 ? -1.0 : 1.0;
        const double cy = uni(-0.3, 0.1), sd = uni(0.3, 0.4);
        A.col(4) = 1.5 * map_of([&](const Position& p) { return blob(p, side * 0.85, cy, sd); });
        sc.expected.push_back("Muscle");
    }
    // Occipital alpha. Every other seed uses a posterior/anterior dipole that
    // also satisfies the BCG topography rule.
    {
        const double f0 = uni(9.0, 11.0), bw = uni(0.5, 1.0);
        Eigen::RowVectorXd s = shaped_noise(rng, n, fs, [=](double f) { return gauss(f, f0, bw); });
        s += 0.3 * shaped_noise(rng, n, fs, pink_shape(1.0));
        sc.S.row(5) = normalise(s);
        if (seed % 2 == 0) {
            const double tilt = uni(0.3, 0.9) * (u(rng) < 0.5 ? -1.0 : 1.0), off = uni(0.1, 0.4);
            A.col(5) = 1.5 * map_of([&](const Position& p) { return std::tanh(2.0 * (off - p.y - tilt * p.x)); });
        } else {
            const double cx = uni(-0.15, 0.15), sd = uni(0.35, 0.5);
            A.col(5) = 1.5 * map_of([&](const Position& p) { return blob(p, cx, -0.95, sd); });
        }
        sc.alpha_ic = 5;
        sc.expected.push_back("Neural");
    }
    // Neural background.
    for (Index ic = 6; ic < N; ++ic) {
        sc.S.row(ic) = shaped_noise(rng, n, fs, pink_shape(1.0));
        double cx = 0, cy = 1;
        while (cy > 0.15 || cx * cx + cy * cy > 0.7 * 0.7) {
            cx = uni(-0.7, 0.7);
            cy = uni(-0.7, 0.7);
        }
        const double sd = uni(0.35, 0.6);
        A.col(ic) = map_of([&](const Position& p) { return blob(p, cx, cy, sd); });
        sc.expected.push_back("Neural");
    }

    sc.decomp.A = A;
    sc.decomp.unmixing = A.inverse();
    sc.decomp.S_short = sc.S;
    sc.decomp.fs = fs;
    sc.decomp.index_map = IndexMap::identity(n);
    sc.x.fs = fs;
    sc.x.channels = make_channels(labels);
    sc.x.data = A * sc.S;
    return sc;
}

} // namespace appear
