#include "appear/dsp.hpp"

#include "appear/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>
#include <numeric>

namespace appear::dsp {

namespace {

std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

constexpr double kPi = std::numbers::pi;

double sinc(double x)
{
    if (std::abs(x) < 1e-12)
        return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

std::vector<double> hamming(std::size_t n)
{
    std::vector<double> w(n, 1.0);
    if (n == 1)
        return w;
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1));
    return w;
}

} // namespace

// --- FFT wrappers -------------------------------------------------------------

struct RealFft::Impl {
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

RealFft::RealFft(std::size_t n) : n_(n), impl_(std::make_unique<Impl>())
{
    if (n == 0)
        throw ArgumentError("FFT length must be positive");
    std::lock_guard lock(planner_mutex());
    impl_->real = fftw_alloc_real(n);
    impl_->spec = fftw_alloc_complex(n / 2 + 1);
    const int len = static_cast<int>(n);
    impl_->fwd = fftw_plan_dft_r2c_1d(len, impl_->real, impl_->spec, FFTW_ESTIMATE);
    impl_->inv = fftw_plan_dft_c2r_1d(len, impl_->spec, impl_->real, FFTW_ESTIMATE);
}

RealFft::~RealFft()
{
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(impl_->fwd);
    fftw_destroy_plan(impl_->inv);
    fftw_free(impl_->real);
    fftw_free(impl_->spec);
}

void RealFft::forward(std::span<const double> in, std::vector<Complex>& out)
{
    const std::size_t m = std::min(in.size(), n_);
    std::copy_n(in.begin(), m, impl_->real);
    std::fill(impl_->real + m, impl_->real + n_, 0.0);
    fftw_execute(impl_->fwd);
    out.resize(bins());
    for (std::size_t k = 0; k < bins(); ++k)
        out[k] = {impl_->spec[k][0], impl_->spec[k][1]};
}

void RealFft::inverse(const std::vector<Complex>& in, std::vector<double>& out)
{
    for (std::size_t k = 0; k < bins(); ++k) {
        impl_->spec[k][0] = in[k].real();
        impl_->spec[k][1] = in[k].imag();
    }
    fftw_execute(impl_->inv);
    out.assign(impl_->real, impl_->real + n_);
}

struct ComplexFft::Impl {
    fftw_complex* buf = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

ComplexFft::ComplexFft(std::size_t n) : n_(n), impl_(std::make_unique<Impl>())
{
    if (n == 0)
        throw ArgumentError("FFT length must be positive");
    std::lock_guard lock(planner_mutex());
    impl_->buf = fftw_alloc_complex(n);
    const int len = static_cast<int>(n);
    impl_->fwd = fftw_plan_dft_1d(len, impl_->buf, impl_->buf, FFTW_FORWARD, FFTW_ESTIMATE);
    impl_->bwd = fftw_plan_dft_1d(len, impl_->buf, impl_->buf, FFTW_BACKWARD, FFTW_ESTIMATE);
}

ComplexFft::~ComplexFft()
{
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(impl_->fwd);
    fftw_destroy_plan(impl_->bwd);
    fftw_free(impl_->buf);
}

void ComplexFft::forward(std::vector<Complex>& data)
{
    data.resize(n_);
    std::memcpy(impl_->buf, data.data(), n_ * sizeof(fftw_complex));
    fftw_execute(impl_->fwd);
    std::memcpy(static_cast<void*>(data.data()), impl_->buf, n_ * sizeof(fftw_complex));
}

void ComplexFft::backward(std::vector<Complex>& data)
{
    data.resize(n_);
    std::memcpy(impl_->buf, data.data(), n_ * sizeof(fftw_complex));
    fftw_execute(impl_->bwd);
    std::memcpy(static_cast<void*>(data.data()), impl_->buf, n_ * sizeof(fftw_complex));
}

std::size_t next_pow2(std::size_t n)
{
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

// --- FIR design ------------------------------------------------------------------

std::size_t hamming_taps(double fs, double transition_hz)
{
    if (!(transition_hz > 0.0))
        throw ArgumentError("transition width must be positive");
    auto order = static_cast<std::size_t>(std::ceil(3.3 * fs / transition_hz - 1e-9));
    if (order % 2 == 1)
        ++order;
    return std::max<std::size_t>(order, 2) + 1;
}

Vector fir_lowpass(double cutoff_hz, double fs, std::size_t taps)
{
    if (taps % 2 == 0)
        ++taps;
    const auto w = hamming(taps);
    const double fc = cutoff_hz / fs;
    const double mid = static_cast<double>(taps - 1) / 2.0;
    Vector h(static_cast<Index>(taps));
    for (std::size_t i = 0; i < taps; ++i)
        h[static_cast<Index>(i)] = 2.0 * fc * sinc(2.0 * fc * (static_cast<double>(i) - mid)) * w[i];
    h /= h.sum();
    return h;
}

Vector fir_highpass(double cutoff_hz, double fs, std::size_t taps)
{
    Vector h = -fir_lowpass(cutoff_hz, fs, taps);
    h[h.size() / 2] += 1.0;
    return h;
}

Vector fir_bandpass(double lo_hz, double hi_hz, double fs, std::size_t taps)
{
    return fir_lowpass(hi_hz, fs, taps) - fir_lowpass(lo_hz, fs, taps);
}

double fir_magnitude(const Vector& taps, double freq_hz, double fs)
{
    Complex acc{0.0, 0.0};
    const double w = 2.0 * kPi * freq_hz / fs;
    for (Index i = 0; i < taps.size(); ++i)
        acc += taps[i] * std::polar(1.0, -w * static_cast<double>(i));
    return std::abs(acc);
}

// --- zero-phase FIR ---------------------------------------------------------------

ZeroPhaseFir::ZeroPhaseFir(const Vector& taps, std::size_t samples) : samples_(samples)
{
    if (samples == 0)
        throw ArgumentError("cannot filter an empty signal");
    const std::size_t len = static_cast<std::size_t>(taps.size());
    std::vector<double> kernel(2 * len - 1, 0.0);
    for (std::size_t i = 0; i < len; ++i)
        for (std::size_t j = 0; j < len; ++j)
            kernel[i + j] += taps[static_cast<Index>(i)] * taps[static_cast<Index>(len - 1 - j)];
    half_ = len - 1;
    pad_ = std::min(half_, samples - 1);
    const std::size_t n = next_pow2(samples + 2 * pad_ + kernel.size());
    fft_ = std::make_unique<RealFft>(n);
    fft_->forward(kernel, kernel_spectrum_);
    buffer_.assign(n, 0.0);
}

ZeroPhaseFir::~ZeroPhaseFir() = default;

void ZeroPhaseFir::apply(std::span<const double> in, std::span<double> out)
{
    if (in.size() != samples_ || out.size() != samples_)
        throw ArgumentError("filter was planned for a different signal length");
    const std::size_t n = fft_->size();
    std::fill(buffer_.begin(), buffer_.end(), 0.0);
    for (std::size_t k = 1; k <= pad_; ++k) {
        buffer_[pad_ - k] = 2.0 * in[0] - in[k];
        buffer_[pad_ + samples_ - 1 + k] = 2.0 * in[samples_ - 1] - in[samples_ - 1 - k];
    }
    std::copy(in.begin(), in.end(), buffer_.begin() + static_cast<std::ptrdiff_t>(pad_));
    fft_->forward(buffer_, spectrum_);
    for (std::size_t k = 0; k < spectrum_.size(); ++k)
        spectrum_[k] *= kernel_spectrum_[k];
    fft_->inverse(spectrum_, buffer_);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < samples_; ++i)
        out[i] = buffer_[i + pad_ + half_] * scale;
}

void ZeroPhaseFir::apply_rows(const Matrix& in, Matrix& out)
{
    out.resize(in.rows(), in.cols());
    for (Index r = 0; r < in.rows(); ++r)
        apply(row_span(in, r), row_span(out, r));
}

Matrix zero_phase_fir(const Matrix& in, const Vector& taps)
{
    Matrix out;
    if (in.cols() == 0) {
        out.resize(in.rows(), 0);
        return out;
    }
    ZeroPhaseFir filter(taps, static_cast<std::size_t>(in.cols()));
    filter.apply_rows(in, out);
    return out;
}

// --- IIR ------------------------------------------------------------------------

std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double fs)
{
    if (order < 1)
        throw ArgumentError("filter order must be positive");
    if (!(cutoff_hz > 0.0) || cutoff_hz >= fs / 2.0)
        throw ArgumentError("low-pass cutoff must lie in (0, fs/2)");
    const double k = 2.0 * fs;
    const double wc = k * std::tan(kPi * cutoff_hz / fs);
    std::vector<Biquad> sos;
    for (int i = 0; i < order / 2; ++i) {
        // Analog pole pair at angle theta from the negative real axis.
        const double theta = kPi * (2.0 * i + 1.0) / (2.0 * order);
        const double re = -std::sin(theta) * wc;
        const double a0 = k * k - 2.0 * re * k + wc * wc;
        Biquad q{};
        q.b0 = wc * wc / a0;
        q.b1 = 2.0 * wc * wc / a0;
        q.b2 = wc * wc / a0;
        q.a1 = (2.0 * wc * wc - 2.0 * k * k) / a0;
        q.a2 = (k * k + 2.0 * re * k + wc * wc) / a0;
        sos.push_back(q);
    }
    if (order % 2 == 1) {
        const double a0 = k + wc;
        sos.push_back({wc / a0, wc / a0, 0.0, (wc - k) / a0, 0.0});
    }
    return sos;
}

double sos_magnitude(const std::vector<Biquad>& sos, double freq_hz, double fs)
{
    const Complex z = std::polar(1.0, -2.0 * kPi * freq_hz / fs);
    Complex h{1.0, 0.0};
    for (const auto& q : sos)
        h *= (q.b0 + q.b1 * z + q.b2 * z * z) / (1.0 + q.a1 * z + q.a2 * z * z);
    return std::abs(h);
}

namespace {

void sos_run(const std::vector<Biquad>& sos, std::vector<double>& x)
{
    if (x.empty())
        return;
    double level = x.front();
    for (const auto& q : sos) {
        const double gain = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
        // Transposed direct form II, started in its steady state for `level`.
        double z1 = level * (gain - q.b0);
        double z2 = level * (q.b2 - q.a2 * gain);
        for (double& v : x) {
            const double in = v;
            const double y = q.b0 * in + z1;
            z1 = q.b1 * in - q.a1 * y + z2;
            z2 = q.b2 * in - q.a2 * y;
            v = y;
        }
        level *= gain;
    }
}

} // namespace

void sos_filtfilt(const std::vector<Biquad>& sos, std::span<const double> in, std::span<double> out)
{
    const std::size_t n = in.size();
    if (n == 0)
        return;
    const std::size_t pad = std::min<std::size_t>(6 * (sos.size() * 2 + 1), n - 1);
    std::vector<double> x(n + 2 * pad);
    for (std::size_t k = 1; k <= pad; ++k) {
        x[pad - k] = 2.0 * in[0] - in[k];
        x[pad + n - 1 + k] = 2.0 * in[n - 1] - in[n - 1 - k];
    }
    std::copy(in.begin(), in.end(), x.begin() + static_cast<std::ptrdiff_t>(pad));
    sos_run(sos, x);
    std::reverse(x.begin(), x.end());
    sos_run(sos, x);
    std::reverse(x.begin(), x.end());
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(pad), n, out.begin());
}

// --- spectra ---------------------------------------------------------------------

std::size_t welch_segment(double fs, double window_s)
{
    return static_cast<std::size_t>(std::llround(window_s * fs));
}

Vector psd_frequencies(double fs, std::size_t segment)
{
    const std::size_t bins = segment / 2 + 1;
    Vector f(static_cast<Index>(bins));
    for (std::size_t k = 0; k < bins; ++k)
        f[static_cast<Index>(k)] = static_cast<double>(k) * fs / static_cast<double>(segment);
    return f;
}

Vector welch_psd(std::span<const double> x, double fs, std::size_t segment, double overlap)
{
    if (segment < 2)
        throw ArgumentError("PSD segment must hold at least two samples");
    if (x.size() < segment)
        throw InsufficientDataError("signal of " + std::to_string(x.size()) +
                                    " samples is shorter than one PSD window of " +
                                    std::to_string(segment));
    const std::size_t step =
        std::max<std::size_t>(1, segment - static_cast<std::size_t>(std::llround(overlap * segment)));
    std::vector<double> w(segment);
    double wsum2 = 0.0;
    for (std::size_t i = 0; i < segment; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(segment - 1)));
        wsum2 += w[i] * w[i];
    }
    RealFft fft(segment);
    std::vector<double> buf(segment);
    std::vector<Complex> spec;
    const std::size_t bins = segment / 2 + 1;
    Vector acc = Vector::Zero(static_cast<Index>(bins));
    std::size_t count = 0;
    for (std::size_t start = 0; start + segment <= x.size(); start += step) {
        for (std::size_t i = 0; i < segment; ++i)
            buf[i] = x[start + i] * w[i];
        fft.forward(buf, spec);
        for (std::size_t k = 0; k < bins; ++k)
            acc[static_cast<Index>(k)] += std::norm(spec[k]);
        ++count;
    }
    acc /= static_cast<double>(count) * fs * wsum2;
    for (std::size_t k = 1; k < bins; ++k) {
        if (!(segment % 2 == 0 && k == bins - 1))
            acc[static_cast<Index>(k)] *= 2.0;
    }
    return acc;
}

// --- misc ------------------------------------------------------------------------

double mean(std::span<const double> x)
{
    if (x.empty())
        return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x)
{
    if (x.size() < 2)
        return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x)
        s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

double pearson(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw ArgumentError("correlation needs equal-length inputs");
    const double ma = mean(a);
    const double mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0)
        return 0.0;
    return sab / std::sqrt(saa * sbb);
}

double kurtosis(std::span<const double> x)
{
    const double m = mean(x);
    double m2 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = (v - m) * (v - m);
        m2 += d;
        m4 += d * d;
    }
    if (m2 <= 0.0)
        return 0.0;
    const double n = static_cast<double>(x.size());
    m2 /= n;
    m4 /= n;
    return m4 / (m2 * m2);
}

double percentile(std::vector<double> values, double p)
{
    if (values.empty())
        return 0.0;
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

double median(std::vector<double> values)
{
    return percentile(std::move(values), 50.0);
}

} // namespace appear::dsp
