#include "appear/config.hpp"

#include "appear/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace appear {

const char* to_string(Mode mode)
{
    return mode == Mode::Rest ? "rest" : "task";
}

Mode parse_mode(const std::string& text)
{
    if (text == "rest")
        return Mode::Rest;
    if (text == "task")
        return Mode::Task;
    throw ArgumentError("mode must be 'rest' or 'task', got '" + text + "'");
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(const std::string& key, const std::string& v)
{
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
        throw ParseError("value '" + v + "' for '" + key + "' is not a number");
    return out;
}

long long to_integer(const std::string& key, const std::string& v)
{
    long long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ParseError("value '" + v + "' for '" + key + "' is not an integer");
    return out;
}

bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw ParseError("value '" + v + "' for '" + key + "' is not a boolean");
}

struct Field {
    std::string key;
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

#define DOUBLE_FIELD(name)                                                                        \
    Field { #name, [](PipelineConfig& c, const std::string& v) { c.name = to_double(#name, v); }, \
            [](const PipelineConfig& c) { return format_double(c.name); } }
#define INT_FIELD(name)                                                                                  \
    Field { #name,                                                                                       \
            [](PipelineConfig& c, const std::string& v) { c.name = static_cast<int>(to_integer(#name, v)); }, \
            [](const PipelineConfig& c) { return std::to_string(c.name); } }
#define STRING_FIELD(name)                                                        \
    Field { #name, [](PipelineConfig& c, const std::string& v) { c.name = v; }, \
            [](const PipelineConfig& c) { return c.name; } }

const std::vector<Field>& fields()
{
    static const std::vector<Field> f = {
        Field{"mode", [](PipelineConfig& c, const std::string& v) {
                  try {
                      c.mode = parse_mode(v);
                  } catch (const ArgumentError&) {
                      throw ParseError("mode must be rest or task, got '" + v + "'");
                  }
              },
              [](const PipelineConfig& c) { return std::string(to_string(c.mode)); }},
        INT_FIELD(n_slices),
        DOUBLE_FIELD(tr_seconds),
        DOUBLE_FIELD(slice_freq_hz),
        DOUBLE_FIELD(vibration_freq_hz),
        DOUBLE_FIELD(line_freq_hz),
        STRING_FIELD(slice_marker),
        STRING_FIELD(ecg_label),
        Field{"gradient_method", [](PipelineConfig& c, const std::string& v) {
                  if (v == "AAS" || v == "aas")
                      c.gradient_method = GradientMethod::AAS;
                  else if (v == "OBS" || v == "obs")
                      c.gradient_method = GradientMethod::OBS;
                  else
                      throw ParseError("gradient_method must be AAS or OBS, got '" + v + "'");
              },
              [](const PipelineConfig& c) {
                  return std::string(c.gradient_method == GradientMethod::AAS ? "AAS" : "OBS");
              }},
        INT_FIELD(aas_half_width),
        INT_FIELD(obs_components),
        Field{"gradient_align",
              [](PipelineConfig& c, const std::string& v) { c.gradient_align = to_bool("gradient_align", v); },
              [](const PipelineConfig& c) { return std::string(c.gradient_align ? "true" : "false"); }},
        DOUBLE_FIELD(target_fs),
        DOUBLE_FIELD(rest_lo_hz),
        DOUBLE_FIELD(rest_hi_hz),
        DOUBLE_FIELD(task_lo_hz),
        DOUBLE_FIELD(task_hi_hz),
        DOUBLE_FIELD(reject_bw_hz),
        DOUBLE_FIELD(harmonic_limit_hz),
        INT_FIELD(bcg_template),
        DOUBLE_FIELD(oximetry_fs),
        DOUBLE_FIELD(bad_window_s),
        DOUBLE_FIELD(bad_step_s),
        DOUBLE_FIELD(bad_power_db),
        DOUBLE_FIELD(bad_amplitude_uv),
        DOUBLE_FIELD(bad_pad_s),
        DOUBLE_FIELD(bad_max_fraction),
        Field{"seed",
              [](PipelineConfig& c, const std::string& v) {
                  c.seed = static_cast<std::uint64_t>(to_integer("seed", v));
              },
              [](const PipelineConfig& c) { return std::to_string(c.seed); }},
        INT_FIELD(ica_block),
        INT_FIELD(ica_max_sweeps),
        DOUBLE_FIELD(ica_tolerance),
        DOUBLE_FIELD(ica_min_samples_factor),
        DOUBLE_FIELD(psd_window_s),
        DOUBLE_FIELD(region_threshold),
        DOUBLE_FIELD(boundary_width),
        DOUBLE_FIELD(min_region_area),
        DOUBLE_FIELD(secondary_min_area),
        DOUBLE_FIELD(secondary_min_arc),
        DOUBLE_FIELD(frontal_y),
        DOUBLE_FIELD(blink_anterior_fraction),
        DOUBLE_FIELD(saccade_min_separation),
        DOUBLE_FIELD(alpha_overlap_unipolar),
        DOUBLE_FIELD(alpha_overlap_bipolar),
        DOUBLE_FIELD(occipital_radius),
        DOUBLE_FIELD(contribution_mean_ratio),
        DOUBLE_FIELD(contribution_min_ratio),
        DOUBLE_FIELD(single_channel_ratio2),
        DOUBLE_FIELD(single_channel_ratio3),
        DOUBLE_FIELD(single_channel_kurtosis),
        DOUBLE_FIELD(bcg_rn_factor),
        DOUBLE_FIELD(bcg_offset_db),
        DOUBLE_FIELD(bcg_cb_rise_factor),
    };
    return f;
}

#undef DOUBLE_FIELD
#undef INT_FIELD
#undef STRING_FIELD

} // namespace

void PipelineConfig::validate() const
{
    auto require = [](bool ok, const std::string& what) {
        if (!ok)
            throw ArgumentError(what);
    };
    require(n_slices >= 1, "n_slices must be at least 1");
    require(tr_seconds > 0, "tr_seconds must be positive");
    require(slice_freq_hz > 0, "slice_freq_hz must be positive");
    require(std::abs(slice_freq_hz - n_slices / tr_seconds) <= 1e-6 * slice_freq_hz,
            "slice_freq_hz disagrees with n_slices / tr_seconds");
    require(rest_lo_hz >= 0 && rest_lo_hz < rest_hi_hz, "rest band edges must be ordered");
    require(task_lo_hz >= 0 && task_lo_hz < task_hi_hz, "task band edges must be ordered");
    require(target_fs > 0, "target_fs must be positive");
    require(aas_half_width >= 1, "aas_half_width must be at least 1");
    require(obs_components >= 0, "obs_components must be non-negative");
    require(bcg_template >= 1, "bcg_template must be at least 1");
    require(reject_bw_hz > 0, "reject_bw_hz must be positive");
    require(bad_window_s > 0 && bad_step_s > 0, "bad-interval window and step must be positive");
    require(bad_max_fraction > 0 && bad_max_fraction <= 1, "bad_max_fraction must lie in (0, 1]");
    require(ica_block >= 1 && ica_max_sweeps >= 1, "ICA block and sweep limits must be positive");
    require(psd_window_s > 0, "psd_window_s must be positive");
}

std::map<std::string, std::string> PipelineConfig::to_map() const
{
    std::map<std::string, std::string> out;
    for (const auto& f : fields())
        out[f.key] = f.get(*this);
    return out;
}

PipelineConfig parse_config(const std::string& text)
{
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool slice_given = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(lineno) + ": expected key=value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto& fs = fields();
        auto it = std::find_if(fs.begin(), fs.end(), [&](const Field& f) { return f.key == key; });
        if (it == fs.end())
            throw ParseError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->set(cfg, value);
        if (key == "slice_freq_hz")
            slice_given = true;
    }
    if (!slice_given)
        cfg.slice_freq_hz = cfg.n_slices / cfg.tr_seconds;
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

PipelineConfig resolve_config(const std::filesystem::path& explicit_path)
{
    if (!explicit_path.empty())
        return load_config(explicit_path);
    if (const char* env = std::getenv("APPEAR_CONFIG"); env && *env)
        return load_config(env);
    return PipelineConfig{};
}

} // namespace appear
