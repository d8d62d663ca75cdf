#include "appear/montage.hpp"

#include "appear/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace appear {

namespace {

struct Spherical {
    double theta; // degrees from the vertex
    double phi;   // degrees from the nose, positive towards the right ear
};

const std::unordered_map<std::string, Spherical>& table()
{
    static const std::unordered_map<std::string, Spherical> t = {
        {"Fp1", {90, -18}}, {"Fpz", {90, 0}},   {"Fp2", {90, 18}},
        {"AF7", {90, -36}}, {"AF3", {74, -25}}, {"AFz", {67, 0}},   {"AF4", {74, 25}},  {"AF8", {90, 36}},
        {"F7", {90, -54}},  {"F5", {75, -47}},  {"F3", {60, -39}},  {"F1", {50, -23}},  {"Fz", {45, 0}},
        {"F2", {50, 23}},   {"F4", {60, 39}},   {"F6", {75, 47}},   {"F8", {90, 54}},
        {"FT9", {112, -72}}, {"FT7", {90, -72}}, {"FC5", {72, -69}}, {"FC3", {54, -62}}, {"FC1", {34, -46}},
        {"FCz", {22.5, 0}}, {"FC2", {34, 46}},  {"FC4", {54, 62}},  {"FC6", {72, 69}},  {"FT8", {90, 72}},
        {"FT10", {112, 72}},
        {"T7", {90, -90}},  {"C5", {67.5, -90}}, {"C3", {45, -90}}, {"C1", {22.5, -90}}, {"Cz", {0, 0}},
        {"C2", {22.5, 90}}, {"C4", {45, 90}},   {"C6", {67.5, 90}}, {"T8", {90, 90}},
        {"TP9", {112, -115}}, {"TP7", {90, -108}}, {"CP5", {72, -111}}, {"CP3", {54, -118}},
        {"CP1", {34, -134}}, {"CPz", {22.5, 180}}, {"CP2", {34, 134}}, {"CP4", {54, 118}},
        {"CP6", {72, 111}}, {"TP8", {90, 108}}, {"TP10", {112, 115}},
        {"P7", {90, -126}}, {"P5", {75, -133}}, {"P3", {60, -141}}, {"P1", {50, -157}}, {"Pz", {45, 180}},
        {"P2", {50, 157}},  {"P4", {60, 141}},  {"P6", {75, 133}},  {"P8", {90, 126}},
        {"PO7", {90, -144}}, {"PO3", {74, -155}}, {"POz", {67, 180}}, {"PO4", {74, 155}}, {"PO8", {90, 144}},
        {"O1", {90, -162}}, {"Oz", {90, 180}},  {"O2", {90, 162}},
        // old 10-20 names
        {"T3", {90, -90}},  {"T4", {90, 90}},   {"T5", {90, -126}}, {"T6", {90, 126}},
    };
    return t;
}

std::string lowered(const std::string& s)
{
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

std::optional<Position> standard_position(const std::string& label)
{
    const auto& t = table();
    auto it = t.find(label);
    if (it == t.end()) {
        // Caps disagree on case ("FP1", "CZ"); fall back to a case-insensitive lookup.
        const auto key = lowered(label);
        it = std::find_if(t.begin(), t.end(), [&](const auto& kv) { return lowered(kv.first) == key; });
        if (it == t.end())
            return std::nullopt;
    }
    const double r = std::min(it->second.theta / 90.0, 1.0);
    const double phi = it->second.phi * std::numbers::pi / 180.0;
    return Position{r * std::sin(phi), r * std::cos(phi)};
}

bool is_ecg_label(const std::string& label)
{
    const auto l = lowered(label);
    return l == "ecg" || l == "ekg";
}

const std::vector<std::string>& default_scalp_labels()
{
    static const std::vector<std::string> labels = {
        "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "FC5", "FC1", "FCz", "FC2",
        "FC6", "T7", "C3", "Cz", "C4", "T8", "TP9", "CP5", "CP1", "CP2", "CP6",
        "TP10", "P7", "P3", "Pz", "P4", "P8", "O1", "Oz", "O2"};
    return labels;
}

std::vector<ChannelInfo> make_channels(const std::vector<std::string>& labels)
{
    std::vector<ChannelInfo> out;
    out.reserve(labels.size());
    for (const auto& label : labels) {
        if (is_ecg_label(label)) {
            out.push_back({label, {}, true});
            continue;
        }
        auto pos = standard_position(label);
        if (!pos)
            throw FormatError("channel '" + label + "' has no standard 10-20 position");
        out.push_back({label, *pos, false});
    }
    return out;
}

} // namespace appear
