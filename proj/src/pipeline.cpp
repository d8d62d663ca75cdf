#include "appear/pipeline.hpp"

#include "appear/classify.hpp"
#include "appear/errors.hpp"
#include "appear/preclean.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace appear {

namespace {

class StageClock {
public:
    explicit StageClock(RunReport& report) : report_(report), start_(now()), last_(start_) {}

    void lap(const std::string& stage)
    {
        const auto t = now();
        report_.stage_times.push_back({stage, seconds(last_, t)});
        last_ = t;
    }

    double total() const { return seconds(start_, now()); }

private:
    using Clock = std::chrono::steady_clock;
    static Clock::time_point now() { return Clock::now(); }
    static double seconds(Clock::time_point a, Clock::time_point b)
    {
        return std::chrono::duration<double>(b - a).count();
    }

    RunReport& report_;
    Clock::time_point start_;
    Clock::time_point last_;
};

std::string fmt_hr(double v)
{
    std::ostringstream os;
    os.precision(2);
    os << std::fixed << v;
    return os.str();
}

IcRecord to_record(const IcVerdict& v)
{
    IcRecord r;
    r.index = static_cast<int>(v.ic);
    r.label = to_string(v.label);
    r.trace = v.trace;
    r.diagnostics = v.diagnostics;
    return r;
}

IcaOptions ica_options(const PipelineConfig& c)
{
    IcaOptions o;
    o.block = c.ica_block;
    o.max_sweeps = c.ica_max_sweeps;
    o.tolerance = c.ica_tolerance;
    o.min_samples_factor = c.ica_min_samples_factor;
    return o;
}

BadIntervalOptions bad_options(const PipelineConfig& c)
{
    BadIntervalOptions o;
    o.window_s = c.bad_window_s;
    o.step_s = c.bad_step_s;
    o.power_db = c.bad_power_db;
    o.amplitude_uv = c.bad_amplitude_uv;
    o.pad_s = c.bad_pad_s;
    o.max_fraction = c.bad_max_fraction;
    return o;
}

} // namespace

std::vector<Index> eeg_rows(const Recording& rec, const std::string& ecg_label)
{
    std::vector<Index> rows;
    for (Index c = 0; c < rec.channel_count(); ++c) {
        const auto& ch = rec.channels[static_cast<std::size_t>(c)];
        if (!ch.is_ecg && ch.label != ecg_label) rows.push_back(c);
    }
    return rows;
}

PipelineResult run_pipeline(Recording raw, const std::optional<Recording>& oximetry, const PipelineConfig& cfg,
                            bool keep_intermediates)
{
    cfg.validate();
    if (raw.sample_count() == 0 || raw.channel_count() == 0) throw EmptyDataError("recording holds no data");

    PipelineResult out;
    RunReport& rep = out.report;
    rep.mode = to_string(cfg.mode);
    rep.seed = cfg.seed;
    rep.config = cfg.to_map();
    rep.band_lo_hz = cfg.band_lo_hz();
    rep.band_hi_hz = cfg.band_hi_hz();
    StageClock clock(rep);

    const double ratio = raw.fs / cfg.target_fs;
    const int factor = static_cast<int>(std::lround(ratio));
    if (factor < 1 || std::abs(ratio - factor) > 1e-9)
        throw ArgumentError("sampling rate " + std::to_string(raw.fs) + " Hz is not an integer multiple of the target rate");

    // Gradient artifact.
    const MarkerList volumes = derive_volume_triggers(raw.markers, cfg.n_slices, cfg.slice_marker);
    clock.lap("volume_triggers");
    GradientOptions gopt;
    gopt.method = cfg.gradient_method;
    gopt.half_width = cfg.aas_half_width;
    gopt.components = cfg.obs_components;
    gopt.max_shift = cfg.gradient_align ? std::max(1, factor) : 0;
    Recording grad = gradient_subtract(raw, volumes, gopt);
    raw = Recording{};
    clock.lap("gradient");

    Recording rec = decimate(grad, factor);
    if (keep_intermediates) out.intermediates.emplace_back("gradient", std::move(grad));
    grad = Recording{};
    clock.lap("decimate");

    rec = fir_bandpass(rec, cfg.band_lo_hz(), cfg.band_hi_hz());
    clock.lap("bandpass");
    rep.reject_centers_hz = reject_centers(cfg.slice_freq_hz, {cfg.vibration_freq_hz, cfg.line_freq_hz}, rec.fs,
                                           cfg.reject_bw_hz, cfg.harmonic_limit_hz);
    rec = band_reject(rec, rep.reject_centers_hz, cfg.reject_bw_hz);
    clock.lap("band_reject");
    if (keep_intermediates) out.intermediates.emplace_back("filtered", rec);

    const std::vector<Index> eeg = eeg_rows(rec, cfg.ecg_label);
    if (eeg.empty()) throw LayoutError("recording has no EEG channels");
    const std::optional<Index> ecg_row = rec.channel_index(cfg.ecg_label);

    // Cardiac events.
    std::optional<CardiacEvents> ev_ecg, ev_ica, ev_oxi;
    if (ecg_row) {
        try {
            ev_ecg = detect_r_peaks_ecg(rec.select_channels({*ecg_row}));
            rep.hr_ecg = ev_ecg->mean_hr_bpm;
        } catch (const NoPeaksError& e) {
            rep.notes.push_back(std::string("ECG QRS detection failed: ") + e.what());
        }
    } else {
        rep.notes.push_back("no channel labelled '" + cfg.ecg_label + "'; ECG QRS detection skipped");
    }
    clock.lap("qrs_ecg");

    bool ica_forced_out = false;
    try {
        const Recording x = rec.select_channels(eeg);
        const IcaDecomposition pre = infomax_decompose(x, cfg.seed, ica_options(cfg), IndexMap::identity(x.sample_count()));
        std::vector<Index> candidates;
        for (const auto& v : classify_ics(x, pre, pre.S_short, classify_options(cfg)))
            if (v.label == IcLabel::BCG) candidates.push_back(v.ic);
        ev_ica = detect_r_peaks_ica(pre, candidates);
        rep.hr_ica = ev_ica->mean_hr_bpm;
        rep.notes.push_back("ICA cardiac detection uses a fixed-scale simplification of the multi-scale method");
    } catch (const NoCandidateError& e) {
        ica_forced_out = true;
        rep.notes.push_back(std::string("ICA cardiac detection unavailable: ") + e.what());
    } catch (const UnreliableError& e) {
        ica_forced_out = true;
        rep.notes.push_back(std::string("ICA cardiac detection unreliable: ") + e.what());
    } catch (const NoPeaksError& e) {
        ica_forced_out = true;
        rep.notes.push_back(std::string("ICA cardiac detection found no peaks: ") + e.what());
    }
    clock.lap("qrs_ica");

    if (oximetry) {
        try {
            ev_oxi = detect_pulse_peaks(*oximetry);
            rep.hr_oximetry = ev_oxi->mean_hr_bpm;
        } catch (const NoPeaksError& e) {
            rep.notes.push_back(std::string("oximetry peak detection failed: ") + e.what());
        }
    } else {
        rep.notes.push_back("no oximetry supplied");
    }
    clock.lap("oximetry");

    if (ev_ecg && ev_ica && ev_oxi) {
        const HrSelection sel = select_cardiac_source(ev_ecg->mean_hr_bpm, ev_ica->mean_hr_bpm, ev_oxi->mean_hr_bpm);
        out.events = sel.chosen == CardiacMethod::ECG ? *ev_ecg : *ev_ica;
        rep.notes.push_back("heart rate ECG " + fmt_hr(sel.hr_ecg) + ", ICA " + fmt_hr(sel.hr_ica) + ", oximetry " +
                            fmt_hr(sel.hr_oxi) + " bpm");
    } else if (ev_ecg) {
        out.events = *ev_ecg;
        rep.notes.push_back(ica_forced_out ? "ECG forced: ICA detection did not succeed"
                                           : "ECG chosen without an oximetry reference");
    } else if (ev_ica) {
        out.events = *ev_ica;
        rep.notes.push_back("ICA chosen: no usable ECG");
    } else {
        throw NoPeaksError("no cardiac events from ECG or ICA");
    }
    rep.selected_qrs_method = to_string(out.events.method);
    clock.lap("select");

    rec = bcg_aas(rec, out.events, cfg.bcg_template);
    clock.lap("bcg_aas");
    if (keep_intermediates) out.intermediates.emplace_back("bcg", rec);

    // Screening and ICA.
    const Recording eeg_full = rec.select_channels(eeg);
    out.bad = detect_bad_intervals(eeg_full, bad_options(cfg));
    rep.bad_intervals = out.bad.intervals();
    clock.lap("bad_intervals");

    auto [x_short, index_map] = excise_intervals(eeg_full, out.bad);
    clock.lap("excise");

    out.decomp = infomax_decompose(x_short, cfg.seed, ica_options(cfg), index_map);
    rep.ica_iterations = out.decomp.iterations;
    rep.ica_converged = out.decomp.converged;
    if (!out.decomp.converged) rep.notes.push_back("Infomax stopped at the sweep limit before converging");
    clock.lap("infomax");

    std::set<Index> removed;
    for (const auto& v : classify_ics(x_short, out.decomp, out.decomp.S_short, classify_options(cfg))) {
        rep.ics.push_back(to_record(v));
        if (v.label != IcLabel::Neural) {
            removed.insert(v.ic);
            rep.removed_ics.push_back(static_cast<int>(v.ic));
        }
    }
    clock.lap("classify");

    const Matrix s_full = project_full(out.decomp, eeg_full);
    clock.lap("project");
    const Recording cleaned = reconstruct_without(out.decomp, s_full, removed, eeg_full);
    out.corrected = rec;
    for (std::size_t i = 0; i < eeg.size(); ++i) out.corrected.data.row(eeg[i]) = cleaned.data.row(static_cast<Index>(i));
    clock.lap("reconstruct");

    rep.total_seconds = clock.total();
    return out;
}

} // namespace appear
