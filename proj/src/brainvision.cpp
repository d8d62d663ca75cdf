#include "appear/brainvision.hpp"

#include "appear/errors.hpp"
#include "appear/montage.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace appear {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

using Sections = std::map<std::string, std::vector<std::pair<std::string, std::string>>>;

Sections parse_ini(const std::string& text, const std::string& what)
{
    Sections sections;
    std::istringstream in(text);
    std::string line;
    std::string current;
    bool first = true;
    while (std::getline(in, line)) {
        line = trim(line);
        if (first) {
            first = false;
            if (line.find("Brain Vision") == std::string::npos && line.find("BrainVision") == std::string::npos)
                throw ParseError(what + " does not start with a BrainVision identification line");
            continue;
        }
        if (line.empty() || line[0] == ';')
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError(what + ": unterminated section '" + line + "'");
            current = line.substr(1, line.size() - 2);
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || current.empty())
            throw ParseError(what + ": unexpected line '" + line + "'");
        sections[current].emplace_back(trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return sections;
}

std::string lookup(const Sections& s, const std::string& section, const std::string& key)
{
    auto it = s.find(section);
    if (it == s.end())
        return {};
    for (const auto& [k, v] : it->second) {
        if (k == key)
            return trim(v);
    }
    return {};
}

double parse_number(const std::string& text, const std::string& what)
{
    double v = 0.0;
    const auto t = trim(text);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
        throw ParseError(what + ": '" + text + "' is not a number");
    return v;
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

double unit_scale(const std::string& unit)
{
    if (unit.empty() || unit == "µV" || unit == "uV" || unit == "\xB5V")
        return 1.0;
    if (unit == "mV")
        return 1000.0;
    if (unit == "nV")
        return 1e-3;
    if (unit == "V")
        return 1e6;
    throw FormatError("unsupported unit '" + unit + "'");
}

MarkerList read_markers(const fs::path& path)
{
    const auto sections = parse_ini(read_text(path), path.filename().string());
    MarkerList markers;
    auto it = sections.find("Marker Infos");
    if (it == sections.end())
        return markers;
    for (const auto& [key, value] : it->second) {
        if (key.rfind("Mk", 0) != 0)
            continue;
        const auto parts = split(value, ',');
        if (parts.size() < 3)
            throw ParseError("marker entry '" + key + "' has fewer than three fields");
        const double pos = parse_number(parts[2], key);
        if (pos < 1 || pos != std::floor(pos))
            throw ParseError("marker entry '" + key + "' has invalid position " + parts[2]);
        Marker m;
        m.type = parts[0];
        m.label = parts[1];
        m.sample = static_cast<std::int64_t>(pos) - 1;
        markers.push_back(std::move(m));
    }
    sort_markers(markers);
    return markers;
}

} // namespace

BrainVisionHeader parse_vhdr(const std::string& text)
{
    const auto s = parse_ini(text, "header");
    BrainVisionHeader h;
    h.data_file = lookup(s, "Common Infos", "DataFile");
    h.marker_file = lookup(s, "Common Infos", "MarkerFile");
    if (h.data_file.empty())
        throw ParseError("header has no DataFile entry");

    const auto orient = lookup(s, "Common Infos", "DataOrientation");
    if (!orient.empty() && orient != "MULTIPLEXED")
        throw FormatError("only MULTIPLEXED data orientation is supported, got " + orient);
    const auto kind = lookup(s, "Common Infos", "DataFormat");
    if (!kind.empty() && kind != "BINARY")
        throw FormatError("only BINARY data is supported, got " + kind);

    const auto nch = lookup(s, "Common Infos", "NumberOfChannels");
    if (nch.empty())
        throw ParseError("header has no NumberOfChannels entry");
    const double n = parse_number(nch, "NumberOfChannels");
    if (n < 1 || n != std::floor(n))
        throw ParseError("NumberOfChannels must be a positive integer");
    h.channel_count = static_cast<std::size_t>(n);

    const auto interval = lookup(s, "Common Infos", "SamplingInterval");
    if (interval.empty())
        throw ParseError("header has no SamplingInterval entry");
    h.sampling_interval_us = parse_number(interval, "SamplingInterval");
    if (!(h.sampling_interval_us > 0))
        throw ParseError("SamplingInterval must be positive");

    const auto bin = lookup(s, "Binary Infos", "BinaryFormat");
    if (bin == "INT_16" || bin.empty())
        h.format = BinaryFormat::Int16;
    else if (bin == "IEEE_FLOAT_32")
        h.format = BinaryFormat::Float32;
    else
        throw FormatError("unsupported BinaryFormat " + bin);

    h.labels.assign(h.channel_count, {});
    h.resolution_uv.assign(h.channel_count, 1.0);
    std::vector<bool> seen(h.channel_count, false);
    auto it = s.find("Channel Infos");
    if (it == s.end())
        throw ParseError("header has no [Channel Infos] section");
    for (const auto& [key, value] : it->second) {
        if (key.rfind("Ch", 0) != 0)
            continue;
        const double idx = parse_number(key.substr(2), key);
        if (idx < 1 || idx != std::floor(idx) || idx > static_cast<double>(h.channel_count))
            throw FormatError("channel entry " + key + " exceeds NumberOfChannels=" +
                              std::to_string(h.channel_count));
        const auto i = static_cast<std::size_t>(idx) - 1;
        const auto parts = split(value, ',');
        h.labels[i] = trim(parts[0]);
        const auto res = parts.size() > 2 ? trim(parts[2]) : std::string{};
        double r = res.empty() ? 1.0 : parse_number(res, key + " resolution");
        if (!(r > 0))
            throw ParseError(key + ": resolution must be positive");
        if (parts.size() > 3)
            r *= unit_scale(trim(parts[3]));
        h.resolution_uv[i] = r;
        seen[i] = true;
    }
    if (std::count(seen.begin(), seen.end(), true) != static_cast<std::ptrdiff_t>(h.channel_count))
        throw FormatError("channel table lists fewer entries than NumberOfChannels=" +
                          std::to_string(h.channel_count));
    return h;
}

Recording read_brainvision(const fs::path& header_path)
{
    const auto h = parse_vhdr(read_text(header_path));
    const auto dir = header_path.parent_path();

    const auto data_path = dir / h.data_file;
    std::ifstream in(data_path, std::ios::binary);
    if (!in)
        throw IoError("cannot open data file " + data_path.string());
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    const std::size_t width = h.format == BinaryFormat::Int16 ? 2 : 4;
    const std::size_t frame = width * h.channel_count;
    if (bytes % frame != 0)
        throw FormatError("data file size " + std::to_string(bytes) + " is not a multiple of " +
                          std::to_string(h.channel_count) + " channels x " + std::to_string(width) +
                          " bytes");
    const auto samples = static_cast<Index>(bytes / frame);
    const auto nch = static_cast<Index>(h.channel_count);

    Recording rec;
    rec.fs = 1e6 / h.sampling_interval_us;
    rec.channels = make_channels(h.labels);
    rec.data.resize(nch, samples);

    // Read in blocks of frames; the file is little-endian like the hosts we build for.
    const std::size_t block_frames = 65536;
    std::vector<char> buf(block_frames * frame);
    Index col = 0;
    while (col < samples) {
        const auto take = std::min<std::size_t>(block_frames, static_cast<std::size_t>(samples - col));
        in.read(buf.data(), static_cast<std::streamsize>(take * frame));
        if (!in)
            throw IoError("short read from " + data_path.string());
        for (std::size_t t = 0; t < take; ++t) {
            for (Index c = 0; c < nch; ++c) {
                const char* p = buf.data() + t * frame + static_cast<std::size_t>(c) * width;
                double v;
                if (h.format == BinaryFormat::Int16) {
                    std::int16_t x;
                    std::memcpy(&x, p, 2);
                    v = x;
                } else {
                    float x;
                    std::memcpy(&x, p, 4);
                    v = x;
                }
                rec.data(c, col + static_cast<Index>(t)) = v * h.resolution_uv[static_cast<std::size_t>(c)];
            }
        }
        col += static_cast<Index>(take);
    }

    if (!h.marker_file.empty()) {
        rec.markers = read_markers(dir / h.marker_file);
        for (const auto& m : rec.markers) {
            if (m.sample >= samples)
                throw FormatError("marker '" + m.label + "' at " + std::to_string(m.sample + 1) +
                                  " lies beyond the data");
        }
    }
    if (std::any_of(rec.channels.begin(), rec.channels.end(), [](const ChannelInfo& c) { return c.is_ecg; }) &&
        nch == 1)
        rec.kind = SignalKind::ECG;
    return rec;
}

BrainVisionPaths write_brainvision(const Recording& rec, const fs::path& out_dir, const std::string& stem,
                                   const WriteOptions& options)
{
    rec.validate();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    BrainVisionPaths paths{out_dir / (stem + ".vhdr"), out_dir / (stem + ".eeg"), out_dir / (stem + ".vmrk")};

    const bool int16 = options.format == BinaryFormat::Int16;
    if (int16 && !(options.resolution_uv > 0))
        throw ArgumentError("int16 resolution must be positive");

    {
        std::ofstream h(paths.header);
        if (!h)
            throw IoError("cannot write " + paths.header.string());
        h << "Brain Vision Data Exchange Header File Version 1.0\n\n"
          << "[Common Infos]\n"
          << "Codepage=UTF-8\n"
          << "DataFile=" << paths.data.filename().string() << "\n"
          << "MarkerFile=" << paths.markers.filename().string() << "\n"
          << "DataFormat=BINARY\n"
          << "DataOrientation=MULTIPLEXED\n"
          << "NumberOfChannels=" << rec.channel_count() << "\n";
        h.precision(17);
        h << "SamplingInterval=" << 1e6 / rec.fs << "\n\n"
          << "[Binary Infos]\n"
          << "BinaryFormat=" << (int16 ? "INT_16" : "IEEE_FLOAT_32") << "\n\n"
          << "[Channel Infos]\n";
        for (std::size_t i = 0; i < rec.channels.size(); ++i) {
            h << "Ch" << (i + 1) << "=" << rec.channels[i].label << ",,";
            if (int16)
                h << options.resolution_uv;
            h << ",µV\n";
        }
        if (!h)
            throw IoError("failed writing " + paths.header.string());
    }

    {
        std::ofstream d(paths.data, std::ios::binary);
        if (!d)
            throw IoError("cannot write " + paths.data.string());
        const Index nch = rec.channel_count();
        const std::size_t width = int16 ? 2 : 4;
        const Index block = 65536;
        std::vector<char> buf(static_cast<std::size_t>(block * nch) * width);
        for (Index start = 0; start < rec.sample_count(); start += block) {
            const Index take = std::min(block, rec.sample_count() - start);
            char* p = buf.data();
            for (Index t = 0; t < take; ++t) {
                for (Index c = 0; c < nch; ++c) {
                    const double v = rec.data(c, start + t);
                    if (int16) {
                        const double q = std::clamp(std::round(v / options.resolution_uv), -32768.0, 32767.0);
                        const auto x = static_cast<std::int16_t>(q);
                        std::memcpy(p, &x, 2);
                    } else {
                        const auto x = static_cast<float>(v);
                        std::memcpy(p, &x, 4);
                    }
                    p += width;
                }
            }
            d.write(buf.data(), p - buf.data());
        }
        if (!d)
            throw IoError("failed writing " + paths.data.string());
    }

    {
        std::ofstream m(paths.markers);
        if (!m)
            throw IoError("cannot write " + paths.markers.string());
        m << "Brain Vision Data Exchange Marker File, Version 1.0\n\n"
          << "[Common Infos]\n"
          << "Codepage=UTF-8\n"
          << "DataFile=" << paths.data.filename().string() << "\n\n"
          << "[Marker Infos]\n";
        for (std::size_t i = 0; i < rec.markers.size(); ++i) {
            const auto& mk = rec.markers[i];
            m << "Mk" << (i + 1) << "=" << mk.type << "," << mk.label << "," << (mk.sample + 1) << ",1,0\n";
        }
        if (!m)
            throw IoError("failed writing " + paths.markers.string());
    }
    return paths;
}

Recording read_oximetry(const fs::path& path, double fs)
{
    if (!(fs > 0))
        throw ArgumentError("oximetry sampling rate must be positive");
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open oximetry file " + path.string());
    std::vector<double> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty())
            continue;
        try {
            values.push_back(parse_number(line, "oximetry"));
        } catch (const ParseError&) {
            throw ParseError("oximetry line " + std::to_string(lineno) + " is not numeric: '" + line + "'");
        }
    }
    if (values.empty())
        throw EmptyDataError("oximetry file " + path.string() + " has no samples");
    Recording rec;
    rec.fs = fs;
    rec.kind = SignalKind::Oximetry;
    rec.channels = {ChannelInfo{"PLETH", {}, false}};
    rec.data = Eigen::Map<const Eigen::RowVectorXd>(values.data(), static_cast<Index>(values.size()));
    return rec;
}

void write_oximetry(const Recording& oxi, const fs::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out.precision(10);
    for (Index i = 0; i < oxi.sample_count(); ++i)
        out << oxi.data(0, i) << "\n";
    if (!out)
        throw IoError("failed writing " + path.string());
}

} // namespace appear
