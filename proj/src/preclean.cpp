#include "appear/preclean.hpp"

#include "appear/dsp.hpp"
#include "appear/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <memory>

namespace appear {

MarkerList derive_volume_triggers(const MarkerList& markers, int n_slices, const std::string& slice_label)
{
    if (n_slices < 1)
        throw ArgumentError("n_slices must be at least 1");
    MarkerList slices = slice_label.empty() ? markers : markers_with_label(markers, slice_label);
    sort_markers(slices);
    const auto n = static_cast<std::size_t>(n_slices);
    if (slices.empty() || slices.size() % n != 0)
        throw TriggerCountError(slices.size(), n);
    MarkerList out;
    for (std::size_t i = 0; i < slices.size(); i += n)
        out.push_back({kVolumeLabel, slices[i].sample, "Volume"});
    return out;
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Index median_spacing(const MarkerList& volumes)
{
    std::vector<double> d;
    for (std::size_t i = 1; i < volumes.size(); ++i)
        d.push_back(static_cast<double>(volumes[i].sample - volumes[i - 1].sample));
    return static_cast<Index>(std::llround(dsp::median(d)));
}

} // namespace

std::vector<int> gradient_alignment(const Recording& rec, const MarkerList& volumes, Index epoch_length,
                                    int max_shift)
{
    std::vector<int> shifts(volumes.size(), 0);
    if (max_shift <= 0 || volumes.empty() || rec.channel_count() == 0)
        return shifts;
    Index ref = 0;
    double best_var = -1.0;
    for (Index c = 0; c < rec.channel_count(); ++c) {
        const double v = dsp::variance(dsp::row_span(rec.data, c));
        if (v > best_var) {
            best_var = v;
            ref = c;
        }
    }
    const auto row = rec.data.row(ref);
    const Eigen::VectorXd first = row.segment(volumes[0].sample, epoch_length).transpose();
    for (std::size_t i = 1; i < volumes.size(); ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (int s = -max_shift; s <= max_shift; ++s) {
            const Index start = volumes[i].sample + s;
            if (start < 0 || start + epoch_length > rec.sample_count())
                continue;
            const double score = row.segment(start, epoch_length).dot(first.transpose());
            if (score > best) {
                best = score;
                shifts[i] = s;
            }
        }
    }
    return shifts;
}

Recording gradient_subtract(const Recording& rec, const MarkerList& volumes_in, const GradientOptions& opt)
{
    MarkerList volumes = volumes_in;
    sort_markers(volumes);
    if (volumes.size() < 2)
        throw InsufficientEpochsError("need at least 2 volume epochs, got " + std::to_string(volumes.size()));
    if (opt.half_width < 1)
        throw ArgumentError("template half-width must be at least 1");
    if (opt.components < 0)
        throw ArgumentError("OBS component count must be non-negative");

    const Index L = opt.epoch_length > 0 ? opt.epoch_length : median_spacing(volumes);
    if (L < 1)
        throw ArgumentError("volume epochs must be at least one sample long");
    const auto shifts = gradient_alignment(rec, volumes, L, opt.max_shift);

    const auto n = static_cast<Index>(volumes.size());
    std::vector<Index> starts(volumes.size());
    for (std::size_t i = 0; i < volumes.size(); ++i) {
        starts[i] = volumes[i].sample + shifts[i];
        if (starts[i] < 0 || starts[i] + L > rec.sample_count())
            throw ArgumentError("volume epoch " + std::to_string(i) + " at sample " +
                                std::to_string(starts[i]) + " runs past the end of the data");
    }

    // Template windows: 2W+1 epochs, slid inward at the ends.
    const Index span = std::min<Index>(2 * opt.half_width + 1, n);
    std::vector<Index> first(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
        first[static_cast<std::size_t>(i)] = std::clamp<Index>(i - opt.half_width, 0, n - span);

    const bool use_obs = opt.method == GradientMethod::OBS && opt.components > 0;
    std::unique_ptr<dsp::ZeroPhaseFir> hp_filter;
    RowMat hp;
    if (use_obs) {
        const double nyq = rec.fs / 2.0;
        if (!(opt.obs_highpass_hz > 0 && opt.obs_highpass_hz < nyq))
            throw ArgumentError("OBS high-pass edge must lie in (0, fs/2)");
        const double tw = std::min(10.0, opt.obs_highpass_hz);
        hp_filter = std::make_unique<dsp::ZeroPhaseFir>(
            dsp::fir_highpass(opt.obs_highpass_hz - tw / 2.0, rec.fs, dsp::hamming_taps(rec.fs, tw)),
            static_cast<std::size_t>(rec.sample_count()));
        hp.resize(n, L);
    }

    Matrix out = rec.data;
    RowMat epochs(n, L);
    RowMat residual(n, L);
    Eigen::RowVectorXd sum(L);

    for (Index c = 0; c < rec.channel_count(); ++c) {
        for (Index i = 0; i < n; ++i)
            epochs.row(i) = rec.data.row(c).segment(starts[static_cast<std::size_t>(i)], L);

        Index lo = first[0];
        sum = epochs.middleRows(lo, span).colwise().sum();
        for (Index i = 0; i < n; ++i) {
            const Index want = first[static_cast<std::size_t>(i)];
            while (lo < want) {
                sum -= epochs.row(lo);
                sum += epochs.row(lo + span);
                ++lo;
            }
            residual.row(i) = epochs.row(i) - sum / static_cast<double>(span);
        }

        if (use_obs) {
            // High-passed copy of the residual epochs, filtered as one continuous row.
            Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(rec.sample_count());
            for (Index i = 0; i < n; ++i)
                row.segment(starts[static_cast<std::size_t>(i)], L) = residual.row(i);
            std::vector<double> filtered(static_cast<std::size_t>(rec.sample_count()));
            hp_filter->apply({row.data(), filtered.size()}, filtered);
            for (Index i = 0; i < n; ++i)
                hp.row(i) = Eigen::Map<const Eigen::RowVectorXd>(filtered.data() + starts[static_cast<std::size_t>(i)], L);

            const Index k = std::min<Index>(opt.components, n - 1);
            const Eigen::MatrixXd gram = hp * hp.transpose();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
            // Eigenvalues ascend, so the leading components are the last columns.
            Eigen::MatrixXd hp_basis(L, k);
            Eigen::MatrixXd full_basis(L, k);
            Index used = 0;
            const double top = eig.eigenvalues()(n - 1);
            for (Index j = 0; j < k; ++j) {
                const double lambda = eig.eigenvalues()(n - 1 - j);
                if (!(lambda > 1e-12 * top))
                    break;
                const auto u = eig.eigenvectors().col(n - 1 - j);
                hp_basis.col(used) = hp.transpose() * u / std::sqrt(lambda);
                full_basis.col(used) = residual.transpose() * u / std::sqrt(lambda);
                ++used;
            }
            if (used > 0) {
                // hp_basis is orthonormal, so least squares reduces to projection.
                const Eigen::MatrixXd coef = hp * hp_basis.leftCols(used);
                residual.noalias() -= coef * full_basis.leftCols(used).transpose();
            }
        }

        for (Index i = 0; i < n; ++i)
            out.row(c).segment(starts[static_cast<std::size_t>(i)], L) = residual.row(i);
    }
    return rec.with_data(std::move(out));
}

Recording decimate(const Recording& rec, int factor)
{
    if (factor < 1)
        throw ArgumentError("decimation factor must be positive");
    const double new_fs = rec.fs / factor;
    if (std::abs(new_fs * factor - rec.fs) > 1e-9 * rec.fs || std::abs(new_fs - std::round(new_fs)) > 1e-9)
        throw ArgumentError("sampling rate " + std::to_string(rec.fs) + " is not divisible by " +
                            std::to_string(factor));
    if (factor == 1)
        return rec;

    const double pass = 0.4 * new_fs;
    const double stop = 0.5 * new_fs;
    const auto taps = dsp::fir_lowpass(0.5 * (pass + stop), rec.fs, dsp::hamming_taps(rec.fs, stop - pass));

    const Index m = rec.sample_count();
    const Index kept = (m + factor - 1) / factor;
    Matrix data(rec.channel_count(), kept);
    if (m > 0) {
        dsp::ZeroPhaseFir filter(taps, static_cast<std::size_t>(m));
        std::vector<double> row(static_cast<std::size_t>(m));
        for (Index c = 0; c < rec.channel_count(); ++c) {
            filter.apply(dsp::row_span(rec.data, c), row);
            for (Index k = 0; k < kept; ++k)
                data(c, k) = row[static_cast<std::size_t>(k * factor)];
        }
    }
    Recording out = rec.with_data(std::move(data));
    out.fs = new_fs;
    for (auto& mk : out.markers)
        mk.sample /= factor;
    return out;
}

Recording fir_bandpass(const Recording& rec, double lo_hz, double hi_hz)
{
    const double nyq = rec.fs / 2.0;
    if (!(lo_hz >= 0 && lo_hz < hi_hz && hi_hz < nyq))
        throw ArgumentError("band edges must satisfy 0 <= lo < hi < fs/2");
    const double tw = lo_hz > 0 ? std::min(lo_hz, 2.0) : 2.0;
    const double hi_cut = hi_hz + tw / 2.0;
    if (hi_cut >= nyq)
        throw ArgumentError("upper edge leaves no room for the transition band below fs/2");
    const auto n = dsp::hamming_taps(rec.fs, tw);
    const Vector taps = lo_hz > 0 ? dsp::fir_bandpass(lo_hz - tw / 2.0, hi_cut, rec.fs, n)
                                  : dsp::fir_lowpass(hi_cut, rec.fs, n);
    return rec.with_data(dsp::zero_phase_fir(rec.data, taps));
}

Recording band_reject(const Recording& rec, const std::vector<double>& centers, double bw)
{
    if (!(bw > 0))
        throw ArgumentError("band-reject width must be positive");
    const double nyq = rec.fs / 2.0;
    for (double c : centers) {
        if (!(c - bw / 2.0 > 0 && c + bw / 2.0 < nyq))
            throw ArgumentError("reject band around " + std::to_string(c) + " Hz leaves (0, fs/2)");
    }
    if (centers.empty())
        return rec;
    const double tw = bw / 2.0;
    const auto n = dsp::hamming_taps(rec.fs, tw);
    Vector taps = Vector::Zero(static_cast<Index>(n));
    taps[taps.size() / 2] = 1.0;
    for (double c : centers)
        taps -= dsp::fir_bandpass(c - bw / 2.0, c + bw / 2.0, rec.fs, n);
    return rec.with_data(dsp::zero_phase_fir(rec.data, taps));
}

std::vector<double> reject_centers(double slice_hz, const std::vector<double>& extra_hz, double fs, double bw,
                                   double harmonic_limit_hz)
{
    std::vector<double> out;
    const double top = std::min(harmonic_limit_hz, fs / 2.0 - bw);
    if (slice_hz > 0) {
        for (int k = 1; k * slice_hz <= top + 1e-9; ++k)
            out.push_back(k * slice_hz);
    }
    for (double f : extra_hz) {
        if (f > bw / 2.0 && f + bw / 2.0 < fs / 2.0 &&
            std::none_of(out.begin(), out.end(), [&](double g) { return std::abs(g - f) < 1e-9; }))
            out.push_back(f);
    }
    return out;
}

PsdEstimate compute_psd(const Recording& rec, double win_s, double overlap)
{
    const auto segment = dsp::welch_segment(rec.fs, win_s);
    if (static_cast<Index>(segment) > rec.sample_count())
        throw InsufficientDataError("recording of " + std::to_string(rec.duration()) +
                                    " s is shorter than one " + std::to_string(win_s) + " s PSD window");
    PsdEstimate psd;
    psd.window_s = win_s;
    psd.overlap = overlap;
    psd.freqs = dsp::psd_frequencies(rec.fs, segment);
    const Index bins = psd.freqs.size();
    psd.power_linear.resize(rec.channel_count(), bins);
    psd.power_db.resize(rec.channel_count(), bins);
    for (Index c = 0; c < rec.channel_count(); ++c) {
        const Vector p = dsp::welch_psd(dsp::row_span(rec.data, c), rec.fs, segment, overlap);
        psd.power_linear.row(c) = p.transpose();
        for (Index k = 0; k < bins; ++k)
            psd.power_db(c, k) = p[k] > 0 ? std::max(10.0 * std::log10(p[k]), kPsdFloorDb) : kPsdFloorDb;
    }
    return psd;
}

PsdEstimate compute_psd(const Vector& signal, double fs, double win_s, double overlap)
{
    Recording r;
    r.fs = fs;
    r.data = signal.transpose();
    return compute_psd(r, win_s, overlap);
}

Vector band_average(const PsdEstimate& psd, double lo_hz, double hi_hz)
{
    std::vector<Index> bins;
    for (Index k = 0; k < psd.freqs.size(); ++k) {
        if (psd.freqs[k] >= lo_hz && psd.freqs[k] < hi_hz)
            bins.push_back(k);
    }
    if (bins.empty())
        throw ArgumentError("band [" + std::to_string(lo_hz) + ", " + std::to_string(hi_hz) +
                            ") contains no PSD bins");
    Vector out = Vector::Zero(psd.power_db.rows());
    for (Index c = 0; c < psd.power_db.rows(); ++c) {
        for (Index k : bins)
            out[c] += psd.power_db(c, k);
        out[c] /= static_cast<double>(bins.size());
    }
    return out;
}

} // namespace appear
