#include "appear/report.hpp"

#include "appear/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace appear {

using nlohmann::json;

bool IcRecord::operator==(const IcRecord& other) const
{
    if (index != other.index || label != other.label || trace != other.trace ||
        diagnostics.size() != other.diagnostics.size())
        return false;
    for (const auto& [key, value] : diagnostics) {
        auto it = other.diagnostics.find(key);
        if (it == other.diagnostics.end())
            return false;
        if (std::isnan(value) && std::isnan(it->second))
            continue;
        if (value != it->second)
            return false;
    }
    return true;
}

void RunReport::validate() const
{
    for (const auto& s : stage_times) {
        if (!(s.seconds >= 0))
            throw ArgumentError("stage '" + s.stage + "' has a negative duration");
    }
    for (std::size_t i = 0; i < ics.size(); ++i) {
        if (ics[i].index != static_cast<int>(i))
            throw ArgumentError("IC records must be listed in index order");
    }
}

namespace {

json optional_number(const std::optional<double>& v)
{
    if (!v || !std::isfinite(*v))
        return nullptr;
    return *v;
}

std::optional<double> read_optional(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null())
        return std::nullopt;
    return j.at(key).get<double>();
}

} // namespace

std::string report_to_json(const RunReport& r, int indent)
{
    json j;
    j["schema_version"] = r.schema_version;
    j["mode"] = r.mode;
    j["qrs"] = {{"selected", r.selected_qrs_method},
                {"hr_ecg_bpm", optional_number(r.hr_ecg)},
                {"hr_ica_bpm", optional_number(r.hr_ica)},
                {"hr_oximetry_bpm", optional_number(r.hr_oximetry)}};
    j["notes"] = r.notes;
    j["band_hz"] = {r.band_lo_hz, r.band_hi_hz};
    j["reject_centers_hz"] = r.reject_centers_hz;
    json bad = json::array();
    for (const auto& iv : r.bad_intervals)
        bad.push_back({iv.start, iv.end});
    j["bad_intervals"] = bad;
    j["ica"] = {{"seed", r.seed},
                {"iterations", r.ica_iterations},
                {"converged", r.ica_converged},
                {"removed", r.removed_ics}};
    json ics = json::array();
    for (const auto& ic : r.ics) {
        json diag = json::object();
        for (const auto& [k, v] : ic.diagnostics)
            diag[k] = std::isfinite(v) ? json(v) : json(nullptr);
        ics.push_back({{"index", ic.index}, {"label", ic.label}, {"trace", ic.trace}, {"diagnostics", diag}});
    }
    j["ics"] = ics;
    json stages = json::array();
    for (const auto& s : r.stage_times)
        stages.push_back({{"stage", s.stage}, {"seconds", s.seconds}});
    j["stage_times"] = stages;
    j["total_seconds"] = r.total_seconds;
    j["config"] = r.config;
    return j.dump(indent);
}

RunReport report_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("report is not valid JSON: ") + e.what());
    }
    try {
        RunReport r;
        r.schema_version = j.at("schema_version").get<int>();
        if (r.schema_version != kReportSchemaVersion)
            throw FormatError("unsupported report schema version " + std::to_string(r.schema_version));
        r.mode = j.at("mode").get<std::string>();
        const auto& q = j.at("qrs");
        r.selected_qrs_method = q.at("selected").get<std::string>();
        r.hr_ecg = read_optional(q, "hr_ecg_bpm");
        r.hr_ica = read_optional(q, "hr_ica_bpm");
        r.hr_oximetry = read_optional(q, "hr_oximetry_bpm");
        r.notes = j.at("notes").get<std::vector<std::string>>();
        r.band_lo_hz = j.at("band_hz").at(0).get<double>();
        r.band_hi_hz = j.at("band_hz").at(1).get<double>();
        r.reject_centers_hz = j.at("reject_centers_hz").get<std::vector<double>>();
        for (const auto& iv : j.at("bad_intervals"))
            r.bad_intervals.push_back({iv.at(0).get<std::int64_t>(), iv.at(1).get<std::int64_t>()});
        const auto& ica = j.at("ica");
        r.seed = ica.at("seed").get<std::uint64_t>();
        r.ica_iterations = ica.at("iterations").get<int>();
        r.ica_converged = ica.at("converged").get<bool>();
        r.removed_ics = ica.at("removed").get<std::vector<int>>();
        for (const auto& ic : j.at("ics")) {
            IcRecord rec;
            rec.index = ic.at("index").get<int>();
            rec.label = ic.at("label").get<std::string>();
            rec.trace = ic.at("trace").get<std::vector<std::string>>();
            for (const auto& [k, v] : ic.at("diagnostics").items())
                rec.diagnostics[k] = v.is_null() ? std::nan("") : v.get<double>();
            r.ics.push_back(std::move(rec));
        }
        for (const auto& s : j.at("stage_times"))
            r.stage_times.push_back({s.at("stage").get<std::string>(), s.at("seconds").get<double>()});
        r.total_seconds = j.at("total_seconds").get<double>();
        r.config = j.at("config").get<std::map<std::string, std::string>>();
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("report is missing or mistypes a field: ") + e.what());
    }
}

void write_report(const RunReport& report, const std::filesystem::path& path)
{
    report.validate();
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write report " + path.string());
    out << report_to_json(report) << "\n";
    if (!out)
        throw IoError("failed writing report " + path.string());
}

RunReport read_report(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open report " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return report_from_json(buf.str());
}

} // namespace appear
