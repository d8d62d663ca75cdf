#pragma once

#include "appear/recording.hpp"

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace appear::dsp {

using Complex = std::complex<double>;

/// Real-to-complex FFT of a fixed length backed by FFTW. Plans are created
/// under a global lock, so instances may be built from worker threads.
class RealFft {
public:
    explicit RealFft(std::size_t n);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t size() const { return n_; }
    std::size_t bins() const { return n_ / 2 + 1; }

    /// `in` must hold size() samples (shorter input is zero-padded).
    void forward(std::span<const double> in, std::vector<Complex>& out);
    /// Unnormalised inverse; divide by size() to undo forward().
    void inverse(const std::vector<Complex>& in, std::vector<double>& out);

private:
    struct Impl;
    std::size_t n_;
    std::unique_ptr<Impl> impl_;
};

/// Complex FFT of a fixed length, forward and unnormalised backward.
class ComplexFft {
public:
    explicit ComplexFft(std::size_t n);
    ~ComplexFft();
    ComplexFft(const ComplexFft&) = delete;
    ComplexFft& operator=(const ComplexFft&) = delete;

    std::size_t size() const { return n_; }
    void forward(std::vector<Complex>& data);
    void backward(std::vector<Complex>& data);

private:
    struct Impl;
    std::size_t n_;
    std::unique_ptr<Impl> impl_;
};

std::size_t next_pow2(std::size_t n);

// --- FIR design (Hamming windowed sinc, odd length, linear phase) ----------

/// Smallest even order >= 3.3 * fs / transition_hz, returned as a tap count.
std::size_t hamming_taps(double fs, double transition_hz);

Vector fir_lowpass(double cutoff_hz, double fs, std::size_t taps);
Vector fir_highpass(double cutoff_hz, double fs, std::size_t taps);
Vector fir_bandpass(double lo_hz, double hi_hz, double fs, std::size_t taps);

/// Magnitude of the FIR response at `freq_hz` (single pass).
double fir_magnitude(const Vector& taps, double freq_hz, double fs);

/// Forward-backward application of a linear-phase FIR: the effective kernel is
/// taps convolved with itself, applied without delay. Edges are extended by
/// odd reflection. One instance can be reused for many equal-length rows.
class ZeroPhaseFir {
public:
    ZeroPhaseFir(const Vector& taps, std::size_t samples);
    ~ZeroPhaseFir();

    void apply(std::span<const double> in, std::span<double> out);
    void apply_rows(const Matrix& in, Matrix& out);

private:
    std::size_t samples_;
    std::size_t half_;    // kernel half-length
    std::size_t pad_;     // reflected samples on each side
    std::unique_ptr<RealFft> fft_;
    std::vector<Complex> kernel_spectrum_;
    std::vector<double> buffer_;
    std::vector<Complex> spectrum_;
};

Matrix zero_phase_fir(const Matrix& in, const Vector& taps);

// --- IIR --------------------------------------------------------------------

struct Biquad {
    double b0, b1, b2, a1, a2;
};

/// Digital Butterworth low-pass (bilinear transform with pre-warping) as
/// second-order sections.
std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double fs);

/// Magnitude of a cascade at `freq_hz` (single pass).
double sos_magnitude(const std::vector<Biquad>& sos, double freq_hz, double fs);

/// Zero-phase forward-backward filtering with odd-reflection padding and
/// steady-state initial conditions.
void sos_filtfilt(const std::vector<Biquad>& sos, std::span<const double> in, std::span<double> out);

// --- spectra ------------------------------------------------------------------

/// Averaged periodogram with a symmetric Hann taper. Returns the one-sided
/// linear PSD (units^2/Hz) on the grid k * fs / segment for k = 0..segment/2.
Vector welch_psd(std::span<const double> x, double fs, std::size_t segment, double overlap);

std::size_t welch_segment(double fs, double window_s);

Vector psd_frequencies(double fs, std::size_t segment);

// --- misc -----------------------------------------------------------------------

double mean(std::span<const double> x);
double variance(std::span<const double> x);
double pearson(std::span<const double> a, std::span<const double> b);
/// Plain (non-excess) kurtosis: 3 for a Gaussian.
double kurtosis(std::span<const double> x);
double percentile(std::vector<double> values, double p);
double median(std::vector<double> values);

inline std::span<const double> row_span(const Matrix& m, Index r)
{
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<double> row_span(Matrix& m, Index r)
{
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

} // namespace appear::dsp
