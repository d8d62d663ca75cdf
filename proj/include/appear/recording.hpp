#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace appear {

// Channels x samples, one contiguous row per channel.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class SignalKind { EEG, ECG, Oximetry };

const char* to_string(SignalKind kind);

/// Head-disc coordinates: x to the right ear, y to the nose, unit radius.
struct Position {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Position&) const = default;
};

struct ChannelInfo {
    std::string label;
    Position position;
    bool is_ecg = false;

    bool operator==(const ChannelInfo&) const = default;
};

struct Marker {
    std::string label;
    std::int64_t sample = 0;
    std::string type = "Stimulus";

    bool operator==(const Marker&) const = default;
};

using MarkerList = std::vector<Marker>;

/// A multichannel recording in microvolts.
///
/// Values are treated as immutable once built: every processing stage takes a
/// const reference and returns a new Recording. `validate()` checks the
/// structural invariants (positive rate, unique labels, markers sorted and in
/// range) and throws ArgumentError when one is violated.
struct Recording {
    Matrix data;
    double fs = 0.0;
    std::vector<ChannelInfo> channels;
    MarkerList markers;
    SignalKind kind = SignalKind::EEG;

    Index channel_count() const { return data.rows(); }
    Index sample_count() const { return data.cols(); }
    double duration() const { return fs > 0 ? static_cast<double>(data.cols()) / fs : 0.0; }

    std::optional<Index> channel_index(const std::string& label) const;
    Index require_channel(const std::string& label) const;

    /// Copy of this recording with `new_data`, keeping rate, layout and markers.
    Recording with_data(Matrix new_data) const;
    /// Subset of channels (in the given order); markers are kept.
    Recording select_channels(const std::vector<Index>& rows) const;

    void validate() const;
};

void sort_markers(MarkerList& markers);
MarkerList markers_with_label(const MarkerList& markers, const std::string& label);

struct Interval {
    std::int64_t start = 0;
    std::int64_t end = 0;

    std::int64_t length() const { return end - start; }
    bool operator==(const Interval&) const = default;
};

/// Half-open [start, end) sample ranges, sorted and non-overlapping.
class IntervalSet {
public:
    IntervalSet() = default;
    explicit IntervalSet(std::vector<Interval> intervals);

    /// Sorts, clips to [0, total) and merges touching/overlapping ranges.
    static IntervalSet merged(std::vector<Interval> raw, std::int64_t total);

    const std::vector<Interval>& intervals() const { return intervals_; }
    bool empty() const { return intervals_.empty(); }
    std::size_t size() const { return intervals_.size(); }
    std::int64_t total_length() const;
    bool contains(std::int64_t sample) const;

    /// Throws BoundsError unless every interval lies in [0, total) and the
    /// set is sorted and disjoint.
    void validate(std::int64_t total) const;

    bool operator==(const IntervalSet&) const = default;

private:
    std::vector<Interval> intervals_;
};

struct KeptRange {
    std::int64_t short_start = 0;
    std::int64_t full_start = 0;
    std::int64_t length = 0;

    bool operator==(const KeptRange&) const = default;
};

/// Maps sample indices of an excised (shortened) recording back to the
/// original full-length recording.
class IndexMap {
public:
    IndexMap() = default;
    explicit IndexMap(std::vector<KeptRange> ranges);
    static IndexMap identity(std::int64_t samples);

    const std::vector<KeptRange>& ranges() const { return ranges_; }
    std::int64_t short_length() const;
    std::int64_t to_full(std::int64_t k) const;

    bool operator==(const IndexMap&) const = default;

private:
    std::vector<KeptRange> ranges_;
};

/// Removes the bad intervals, concatenating what remains in order. Markers
/// inside removed spans are dropped; the rest are re-indexed.
std::pair<Recording, IndexMap> excise_intervals(const Recording& rec, const IntervalSet& bad);

std::int64_t map_short_to_full(const IndexMap& map, std::int64_t k);

} // namespace appear
