#pragma once

#include "appear/recording.hpp"

#include <filesystem>
#include <string>

namespace appear {

enum class BinaryFormat { Int16, Float32 };

struct BrainVisionHeader {
    std::size_t channel_count = 0;
    double sampling_interval_us = 0.0;
    BinaryFormat format = BinaryFormat::Int16;
    std::vector<std::string> labels;
    std::vector<double> resolution_uv;  // per channel, microvolts per count
    std::string data_file;
    std::string marker_file;
};

/// Parses the text of a .vhdr file. Throws ParseError on malformed content
/// and FormatError when the channel table disagrees with NumberOfChannels.
BrainVisionHeader parse_vhdr(const std::string& text);

/// Reads a header/data/marker triplet. Data and marker paths are resolved
/// relative to the header's directory. Channel positions come from the
/// standard montage; an unknown scalp label raises FormatError.
Recording read_brainvision(const std::filesystem::path& header_path);

struct BrainVisionPaths {
    std::filesystem::path header;
    std::filesystem::path data;
    std::filesystem::path markers;
};

struct WriteOptions {
    BinaryFormat format = BinaryFormat::Float32;
    double resolution_uv = 0.1;  // int16 only
};

/// Writes `<out_dir>/<stem>.vhdr/.eeg/.vmrk`. Marker positions are stored
/// 1-based as the format requires. Throws IoError when a file cannot be
/// written.
BrainVisionPaths write_brainvision(const Recording& rec, const std::filesystem::path& out_dir,
                                   const std::string& stem, const WriteOptions& options = {});

/// One decimal sample per line. Empty input raises EmptyDataError and any
/// non-numeric line raises ParseError.
Recording read_oximetry(const std::filesystem::path& path, double fs = 40.0);
void write_oximetry(const Recording& oxi, const std::filesystem::path& path);

} // namespace appear
