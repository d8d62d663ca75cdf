// Command-line front end: preprocess, synth and evaluate.

#include "appear/brainvision.hpp"
#include "appear/config.hpp"
#include "appear/errors.hpp"
#include "appear/evaluate.hpp"
#include "appear/pipeline.hpp"
#include "appear/preclean.hpp"
#include "appear/report.hpp"
#include "appear/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace appear;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitPipeline = 3;

std::mutex g_log_mutex;

void log_error(const std::string& context, const std::string& message)
{
    std::lock_guard lock(g_log_mutex);
    std::cerr << "appear: " << (context.empty() ? "" : context + ": ") << message << '\n';
}

template <class Fn>
int guarded(const std::string& context, Fn&& fn)
{
    try {
        return fn();
    } catch (const InputError& e) {
        log_error(context, e.what());
        return kExitInput;
    } catch (const PipelineError& e) {
        log_error(context, e.what());
        return kExitPipeline;
    } catch (const std::bad_alloc&) {
        log_error(context, "out of memory");
        return kExitPipeline;
    } catch (const std::exception& e) {
        log_error(context, e.what());
        return kExitPipeline;
    }
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

// --- preprocess --------------------------------------------------------------------

struct PreprocessArgs {
    std::vector<std::string> vhdr;
    std::vector<std::string> oximetry;
    std::string mode;
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    bool keep_intermediates = false;
    int jobs = 1;
};

int preprocess_one(const PreprocessArgs& a, const PipelineConfig& cfg, std::size_t i)
{
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    const fs::path header = a.vhdr[i];
    const std::string stem = header.stem().string();

    Recording raw = read_brainvision(header);
    std::optional<Recording> oxi;
    if (!a.oximetry.empty()) oxi = read_oximetry(a.oximetry[i], cfg.oximetry_fs);
    const double read_s = std::chrono::duration<double>(Clock::now() - t0).count();

    PipelineResult res = run_pipeline(std::move(raw), oxi, cfg, a.keep_intermediates);

    const auto tw = Clock::now();
    const fs::path out_dir = a.out;
    ensure_dir(out_dir);
    write_brainvision(res.corrected, out_dir, stem + "_corrected");
    if (a.keep_intermediates) {
        const fs::path inter = out_dir / (stem + "_intermediates");
        ensure_dir(inter);
        for (const auto& [name, rec] : res.intermediates) write_brainvision(rec, inter, name);
    }
    const auto t1 = Clock::now();

    RunReport& rep = res.report;
    rep.stage_times.insert(rep.stage_times.begin(), StageTime{"read", read_s});
    rep.stage_times.push_back({"write", std::chrono::duration<double>(t1 - tw).count()});
    rep.total_seconds = std::chrono::duration<double>(t1 - t0).count();
    write_report(rep, out_dir / (stem + "_report.json"));
    return kExitOk;
}

int cmd_preprocess(const PreprocessArgs& a)
{
    return guarded("preprocess", [&] {
        if (a.vhdr.empty()) throw ArgumentError("at least one --vhdr is required");
        if (!a.oximetry.empty() && a.oximetry.size() != a.vhdr.size())
            throw ArgumentError("give one --oximetry per --vhdr or none");
        if (a.jobs < 1) throw ArgumentError("--jobs must be positive");
        PipelineConfig cfg = resolve_config(a.config);
        if (!a.mode.empty()) cfg.mode = parse_mode(a.mode);
        if (a.seed) cfg.seed = *a.seed;
        cfg.validate();

        std::vector<int> codes(a.vhdr.size(), kExitOk);
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < a.vhdr.size(); i = next++)
                codes[i] = guarded(a.vhdr[i], [&] { return preprocess_one(a, cfg, i); });
        };
        const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(a.jobs), a.vhdr.size());
        std::vector<std::thread> pool;
        for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();
        return *std::max_element(codes.begin(), codes.end());
    });
}

// --- synth -------------------------------------------------------------------------

struct SynthArgs {
    std::string spec;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    bool task = false;
    std::string out = ".";
    std::vector<std::string> truth;
    bool no_truth = false;
};

json markers_json(const MarkerList& markers)
{
    json arr = json::array();
    for (const auto& m : markers) arr.push_back({{"label", m.label}, {"sample", m.sample}, {"type", m.type}});
    return arr;
}

int cmd_synth(const SynthArgs& a)
{
    return guarded("synth", [&] {
        SynthSpec spec = a.spec.empty() ? SynthSpec{} : spec_from_json(read_text(a.spec));
        if (a.seed) spec.seed = *a.seed;
        if (a.duration) spec.duration_s = *a.duration;
        if (a.task) spec.task = true;
        spec.validate();

        std::vector<std::string> truth = a.no_truth ? std::vector<std::string>{} : a.truth;
        if (!a.no_truth && truth.empty()) truth = constituent_names();
        for (const auto& t : truth)
            if (std::find(constituent_names().begin(), constituent_names().end(), t) == constituent_names().end())
                throw ArgumentError("unknown constituent '" + t + "'");

        const fs::path out = a.out;
        ensure_dir(out);
        // Keep only the ECG truth in memory; the other constituents are
        // regenerated one at a time below.
        SynthSession s = generate(spec, {"ecg"});
        write_brainvision(s.raw, out, "synth");
        write_oximetry(s.oximetry, out / "synth_oximetry.txt");
        const double fs_raw = s.raw.fs;
        const MarkerList markers = s.raw.markers;
        s.raw = Recording{};
        s.truth.clear();

        if (!truth.empty()) {
            const fs::path dir = out / "truth";
            ensure_dir(dir);
            for (const auto& name : truth) write_brainvision(synth_constituent(spec, name), dir, name);
        }

        json j;
        j["spec"] = json::parse(spec_to_json(spec));
        j["fs"] = fs_raw;
        j["r_peaks"] = s.r_peaks;
        j["markers"] = markers_json(markers);
        j["stimuli"] = markers_json(s.stimuli);
        j["truth"] = truth;
        write_text(out / "truth.json", j.dump(2));
        return kExitOk;
    });
}

// --- evaluate ----------------------------------------------------------------------

struct EvaluateArgs {
    std::string vhdr;
    std::string truth;
    std::string compare;
    std::string bad_report;
    std::string compare_bad_report;
    std::string mode;
    std::string config;
    std::string segment;
    std::string scalogram;
    std::string stimulus = "S  1";
    std::string out;
};

IntervalSet bad_from(const std::string& report_path, const Recording& rec)
{
    if (report_path.empty()) return {};
    const RunReport r = read_report(report_path);
    return IntervalSet::merged(r.bad_intervals, rec.sample_count());
}

std::pair<double, double> parse_segment(const std::string& text)
{
    const auto sep = text.find_first_of(",:");
    if (sep == std::string::npos) throw ArgumentError("--segment expects start,end in seconds");
    try {
        const double a = std::stod(text.substr(0, sep)), b = std::stod(text.substr(sep + 1));
        if (!(a >= 0 && b > a)) throw ArgumentError("--segment needs 0 <= start < end");
        return {a, b};
    } catch (const std::logic_error&) {
        throw ArgumentError("--segment expects numbers, got '" + text + "'");
    }
}

json band_json(const BandTable& t)
{
    json arr = json::array();
    for (std::size_t b = 0; b < t.bands.size(); ++b)
        arr.push_back({{"band", t.bands[b].name}, {"lo_hz", t.bands[b].lo_hz}, {"hi_hz", t.bands[b].hi_hz},
                       {"power", t.power[b]}});
    return arr;
}

void write_scalogram_csv(const Scalogram& sc, double t0, const fs::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "time_s";
    for (Index f = 0; f < sc.freqs.size(); ++f) out << ',' << sc.freqs[f];
    out << '\n';
    for (Index t = 0; t < sc.times.size(); ++t) {
        out << t0 + sc.times[t];
        for (Index f = 0; f < sc.freqs.size(); ++f) out << ',' << sc.magnitude(f, t);
        out << '\n';
    }
}

json peak_json(const PeakMeasure& p)
{
    return {{"amplitude_uv", p.amplitude_uv}, {"latency_ms", p.latency_ms}, {"mean_uv", p.mean_uv},
            {"snr_peak", p.snr_peak}, {"snr_mean", p.snr_mean}};
}

int cmd_evaluate(const EvaluateArgs& a)
{
    return guarded("evaluate", [&] {
        PipelineConfig cfg = resolve_config(a.config);
        if (!a.mode.empty()) cfg.mode = parse_mode(a.mode);
        const Recording full = read_brainvision(a.vhdr);
        const Recording rec = full.select_channels(eeg_rows(full, cfg.ecg_label));
        const IntervalSet bad = bad_from(a.bad_report, rec);

        json j;
        j["input"] = a.vhdr;
        j["mode"] = to_string(cfg.mode);
        const BandTable table = band_table(rec, bad, cfg.psd_window_s);
        j["bands"] = band_json(table);

        if (!a.scalogram.empty()) {
            double t0 = 0.0, t1 = rec.duration();
            if (!a.segment.empty()) std::tie(t0, t1) = parse_segment(a.segment);
            const Index k0 = static_cast<Index>(std::llround(t0 * rec.fs));
            const Index k1 = std::min(rec.sample_count(), static_cast<Index>(std::llround(t1 * rec.fs)));
            if (k0 >= k1) throw ArgumentError("--segment lies outside the recording");
            const Recording avg = channel_average(rec);
            const Scalogram sc = cwt_morse(avg.data.row(0).segment(k0, k1 - k0), rec.fs);
            write_scalogram_csv(sc, t0, a.scalogram);
            j["scalogram"] = a.scalogram;
        }

        if (cfg.mode == Mode::Task) {
            const MarkerList stimuli = markers_with_label(rec.markers, a.stimulus);
            const ErpSet set = reject_trials(erp_lowpass(baseline_correct(epoch_erp(rec, stimuli))));
            const ErpMeasures m = erp_measures(set);
            json chans = json::array();
            for (const auto& c : m.channels) {
                json cj = {{"channel", c.channel}, {"p3", peak_json(c.p3)}, {"noise_uv", c.noise_uv}};
                if (c.n2) cj["n2"] = peak_json(*c.n2);
                chans.push_back(cj);
            }
            std::size_t rejected = 0;
            for (unsigned r : set.reasons) rejected += r != RejectNone;
            j["erp"] = {{"trials", set.trial_count()}, {"accepted", m.accepted_trials}, {"rejected", rejected},
                        {"channels", chans}};
        }

        if (!a.truth.empty()) {
            Recording truth_full = read_brainvision(a.truth);
            const double ratio = truth_full.fs / full.fs;
            if (ratio > 1.0 && std::abs(ratio - std::round(ratio)) < 1e-9)
                truth_full = decimate(truth_full, static_cast<int>(std::lround(ratio)));
            const RecoveryMetrics m = score_recovery(full, truth_full, bad, cfg.slice_freq_hz);
            j["recovery"] = {{"mean_correlation", m.mean_correlation}, {"median_correlation", m.median_correlation},
                             {"residual_rms_uv", m.residual_rms_uv}, {"residual_slice_db", m.residual_slice_db},
                             {"residual_bcg_band_db", m.residual_bcg_band_db}, {"channels", m.channels},
                             {"correlation", m.correlation}};
        }

        if (!a.compare.empty()) {
            const Recording other_full = read_brainvision(a.compare);
            const Recording other = other_full.select_channels(eeg_rows(other_full, cfg.ecg_label));
            const BandTable t2 = band_table(other, bad_from(a.compare_bad_report, other), cfg.psd_window_s);
            json arr = json::array();
            for (std::size_t b = 0; b < table.bands.size(); ++b) {
                std::vector<double> x, y;
                for (Index c = 0; c < rec.channel_count(); ++c) {
                    const auto o = other.channel_index(rec.channels[static_cast<std::size_t>(c)].label);
                    if (!o) continue;
                    x.push_back(table.per_channel(c, static_cast<Index>(b)));
                    y.push_back(t2.per_channel(*o, static_cast<Index>(b)));
                }
                if (x.size() < 2) throw ArgumentError("the two recordings share fewer than two channels");
                const PairedStats p = paired_stats(x, y);
                arr.push_back({{"band", table.bands[b].name}, {"t", p.t}, {"df", p.df}, {"p", p.p},
                               {"cohen_d", p.cohen_d}, {"mean_diff", p.mean_diff}});
            }
            j["paired"] = arr;
        }

        const std::string text = j.dump(2);
        if (a.out.empty()) std::cout << text << '\n';
        else write_text(a.out, text);
        return kExitOk;
    });
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"EEG-fMRI artifact reduction"};
    app.require_subcommand(1);

    PreprocessArgs pre;
    auto* p = app.add_subcommand("preprocess", "Correct raw recordings and write the corrected data and a run report");
    p->add_option("--vhdr", pre.vhdr, "BrainVision header of a raw session (repeatable)")->required();
    p->add_option("--oximetry", pre.oximetry, "Pulse oximetry text file, one per --vhdr");
    p->add_option("--mode", pre.mode, "rest or task (overrides the config)");
    p->add_option("--config", pre.config, "key=value configuration file (falls back to $APPEAR_CONFIG)");
    p->add_option("--out", pre.out, "Output directory");
    p->add_option("--seed", pre.seed, "ICA seed (overrides the config)");
    p->add_flag("--keep-intermediates", pre.keep_intermediates, "Also write the gradient, filtered and BCG stages");
    p->add_option("--jobs", pre.jobs, "Sessions processed in parallel");

    SynthArgs syn;
    auto* s = app.add_subcommand("synth", "Generate a synthetic session with ground truth");
    s->add_option("--spec", syn.spec, "JSON synthesis spec");
    s->add_option("--seed", syn.seed, "Seed (overrides the spec)");
    s->add_option("--duration", syn.duration, "Duration in seconds (overrides the spec)");
    s->add_flag("--task", syn.task, "Add stimulus markers and planted ERPs");
    s->add_option("--out", syn.out, "Output directory");
    s->add_option("--truth", syn.truth, "Constituents to write as truth (default all)")->delimiter(',');
    s->add_flag("--no-truth", syn.no_truth, "Skip the truth recordings");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "Spectra, scalograms, ERPs and recovery metrics of a corrected recording");
    e->add_option("--vhdr", ev.vhdr, "Corrected recording")->required();
    e->add_option("--truth", ev.truth, "Neural truth recording for recovery metrics");
    e->add_option("--compare", ev.compare, "Second corrected recording for paired statistics");
    e->add_option("--bad-from", ev.bad_report, "Run report whose bad intervals are excluded");
    e->add_option("--compare-bad-from", ev.compare_bad_report, "Run report for the --compare recording");
    e->add_option("--mode", ev.mode, "rest or task (overrides the config)");
    e->add_option("--config", ev.config, "key=value configuration file (falls back to $APPEAR_CONFIG)");
    e->add_option("--segment", ev.segment, "Scalogram window start,end in seconds");
    e->add_option("--scalogram", ev.scalogram, "Write the channel-average scalogram to this CSV");
    e->add_option("--stimulus", ev.stimulus, "Stimulus marker label for ERPs");
    e->add_option("--out", ev.out, "Write the JSON result here instead of standard output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& err) {
        return app.exit(err);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return kExitInput;
    }

    if (*p) return cmd_preprocess(pre);
    if (*s) return cmd_synth(syn);
    if (*e) return cmd_evaluate(ev);
    return kExitInput;
}
