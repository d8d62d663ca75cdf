#include "appear/recording.hpp"

#include "appear/errors.hpp"

#include <algorithm>
#include <set>

namespace appear {

const char* to_string(SignalKind kind)
{
    switch (kind) {
    case SignalKind::EEG: return "EEG";
    case SignalKind::ECG: return "ECG";
    case SignalKind::Oximetry: return "Oximetry";
    }
    return "EEG";
}

std::optional<Index> Recording::channel_index(const std::string& label) const
{
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (channels[i].label == label)
            return static_cast<Index>(i);
    }
    return std::nullopt;
}

Index Recording::require_channel(const std::string& label) const
{
    auto idx = channel_index(label);
    if (!idx)
        throw ArgumentError("no channel labelled '" + label + "'");
    return *idx;
}

Recording Recording::with_data(Matrix new_data) const
{
    Recording out;
    out.data = std::move(new_data);
    out.fs = fs;
    out.channels = channels;
    out.markers = markers;
    out.kind = kind;
    return out;
}

Recording Recording::select_channels(const std::vector<Index>& rows) const
{
    Recording out;
    out.fs = fs;
    out.markers = markers;
    out.kind = kind;
    out.data.resize(static_cast<Index>(rows.size()), data.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= data.rows())
            throw BoundsError("channel row " + std::to_string(rows[i]) + " out of range");
        out.data.row(static_cast<Index>(i)) = data.row(rows[i]);
        if (static_cast<std::size_t>(rows[i]) < channels.size())
            out.channels.push_back(channels[static_cast<std::size_t>(rows[i])]);
    }
    return out;
}

void Recording::validate() const
{
    if (!(fs > 0.0))
        throw ArgumentError("sampling rate must be positive");
    if (static_cast<std::size_t>(data.rows()) != channels.size())
        throw ArgumentError("channel list has " + std::to_string(channels.size()) +
                            " entries but data has " + std::to_string(data.rows()) + " rows");
    std::set<std::string> labels;
    for (const auto& ch : channels) {
        if (!labels.insert(ch.label).second)
            throw ArgumentError("duplicate channel label '" + ch.label + "'");
    }
    std::int64_t prev = 0;
    for (const auto& m : markers) {
        if (m.sample < 0 || m.sample >= data.cols())
            throw ArgumentError("marker '" + m.label + "' at " + std::to_string(m.sample) +
                                " lies outside the recording");
        if (m.sample < prev)
            throw ArgumentError("markers are not sorted by sample");
        prev = m.sample;
    }
}

void sort_markers(MarkerList& markers)
{
    std::stable_sort(markers.begin(), markers.end(),
                     [](const Marker& a, const Marker& b) { return a.sample < b.sample; });
}

MarkerList markers_with_label(const MarkerList& markers, const std::string& label)
{
    MarkerList out;
    std::copy_if(markers.begin(), markers.end(), std::back_inserter(out),
                 [&](const Marker& m) { return m.label == label; });
    return out;
}

// ---------------------------------------------------------------------------

IntervalSet::IntervalSet(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {}

IntervalSet IntervalSet::merged(std::vector<Interval> raw, std::int64_t total)
{
    std::vector<Interval> clipped;
    for (auto iv : raw) {
        iv.start = std::max<std::int64_t>(iv.start, 0);
        iv.end = std::min<std::int64_t>(iv.end, total);
        if (iv.end > iv.start)
            clipped.push_back(iv);
    }
    std::sort(clipped.begin(), clipped.end(),
              [](const Interval& a, const Interval& b) { return a.start < b.start; });
    std::vector<Interval> out;
    for (const auto& iv : clipped) {
        if (!out.empty() && iv.start <= out.back().end)
            out.back().end = std::max(out.back().end, iv.end);
        else
            out.push_back(iv);
    }
    return IntervalSet(std::move(out));
}

std::int64_t IntervalSet::total_length() const
{
    std::int64_t n = 0;
    for (const auto& iv : intervals_)
        n += iv.length();
    return n;
}

bool IntervalSet::contains(std::int64_t sample) const
{
    auto it = std::upper_bound(intervals_.begin(), intervals_.end(), sample,
                               [](std::int64_t s, const Interval& iv) { return s < iv.start; });
    if (it == intervals_.begin())
        return false;
    --it;
    return sample < it->end;
}

void IntervalSet::validate(std::int64_t total) const
{
    std::int64_t prev_end = 0;
    for (const auto& iv : intervals_) {
        if (iv.start < 0 || iv.end > total || iv.start >= iv.end)
            throw BoundsError("interval [" + std::to_string(iv.start) + ", " +
                              std::to_string(iv.end) + ") invalid for " +
                              std::to_string(total) + " samples");
        if (iv.start < prev_end)
            throw BoundsError("intervals overlap or are unsorted");
        prev_end = iv.end;
    }
}

// ---------------------------------------------------------------------------

IndexMap::IndexMap(std::vector<KeptRange> ranges) : ranges_(std::move(ranges)) {}

IndexMap IndexMap::identity(std::int64_t samples)
{
    if (samples <= 0)
        return IndexMap{};
    return IndexMap({KeptRange{0, 0, samples}});
}

std::int64_t IndexMap::short_length() const
{
    return ranges_.empty() ? 0 : ranges_.back().short_start + ranges_.back().length;
}

std::int64_t IndexMap::to_full(std::int64_t k) const
{
    if (k < 0 || k >= short_length())
        throw BoundsError("short index " + std::to_string(k) + " outside [0, " +
                          std::to_string(short_length()) + ")");
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), k,
                               [](std::int64_t s, const KeptRange& r) { return s < r.short_start; });
    --it;
    return it->full_start + (k - it->short_start);
}

std::int64_t map_short_to_full(const IndexMap& map, std::int64_t k)
{
    return map.to_full(k);
}

std::pair<Recording, IndexMap> excise_intervals(const Recording& rec, const IntervalSet& bad)
{
    const std::int64_t total = rec.sample_count();
    bad.validate(total);

    std::vector<KeptRange> kept;
    std::int64_t cursor = 0;
    std::int64_t short_pos = 0;
    auto keep = [&](std::int64_t from, std::int64_t to) {
        if (to > from) {
            kept.push_back({short_pos, from, to - from});
            short_pos += to - from;
        }
    };
    for (const auto& iv : bad.intervals()) {
        keep(cursor, iv.start);
        cursor = iv.end;
    }
    keep(cursor, total);

    if (short_pos == 0)
        throw EmptyDataError("every sample lies inside a bad interval");

    Matrix data(rec.channel_count(), short_pos);
    for (const auto& r : kept)
        data.middleCols(r.short_start, r.length) = rec.data.middleCols(r.full_start, r.length);

    Recording out = rec.with_data(std::move(data));
    out.markers.clear();
    for (const auto& m : rec.markers) {
        for (const auto& r : kept) {
            if (m.sample >= r.full_start && m.sample < r.full_start + r.length) {
                Marker moved = m;
                moved.sample = r.short_start + (m.sample - r.full_start);
                out.markers.push_back(moved);
                break;
            }
        }
    }
    return {std::move(out), IndexMap(std::move(kept))};
}

} // namespace appear
