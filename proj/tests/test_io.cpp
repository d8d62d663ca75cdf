#include <doctest.h>

#include "appear/brainvision.hpp"
#include "appear/config.hpp"
#include "appear/errors.hpp"
#include "appear/montage.hpp"
#include "appear/report.hpp"

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

using namespace appear;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("appear_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

Recording random_recording(Index channels, Index samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 30.0);
    Recording rec;
    rec.fs = 250.0;
    std::vector<std::string> labels(default_scalp_labels().begin(), default_scalp_labels().begin() + channels);
    rec.channels = make_channels(labels);
    rec.data.resize(channels, samples);
    for (Index c = 0; c < channels; ++c)
        for (Index i = 0; i < samples; ++i)
            rec.data(c, i) = g(rng);
    return rec;
}

} // namespace

TEST_CASE("int16 fixture scales counts by the resolution")
{
    auto dir = scratch("fixture");
    write_text(dir / "a.vhdr",
               "Brain Vision Data Exchange Header File Version 1.0\n"
               "; written by hand\n"
               "[Common Infos]\nDataFile=a.eeg\nMarkerFile=a.vmrk\nDataFormat=BINARY\n"
               "DataOrientation=MULTIPLEXED\nNumberOfChannels=2\nSamplingInterval=200\n\n"
               "[Binary Infos]\nBinaryFormat=INT_16\n\n"
               "[Channel Infos]\nCh1=Fz,,0.1,µV\nCh2=Cz,,0.1,µV\n");
    {
        std::ofstream d(dir / "a.eeg", std::ios::binary);
        for (int i = 0; i < 5000; ++i) {
            std::int16_t a = 100, b = static_cast<std::int16_t>(-i % 300);
            d.write(reinterpret_cast<const char*>(&a), 2);
            d.write(reinterpret_cast<const char*>(&b), 2);
        }
    }
    write_text(dir / "a.vmrk", "Brain Vision Data Exchange Marker File, Version 1.0\n[Marker Infos]\n");
    auto rec = read_brainvision(dir / "a.vhdr");
    CHECK(rec.fs == doctest::Approx(5000.0));
    CHECK(rec.sample_count() == 5000);
    CHECK(rec.channel_count() == 2);
    CHECK(rec.data(0, 17) == doctest::Approx(10.0));
    CHECK(rec.data(1, 7) == doctest::Approx(-0.7));
    CHECK(rec.markers.empty());
}

TEST_CASE("malformed headers")
{
    const std::string good =
        "Brain Vision Data Exchange Header File Version 1.0\n"
        "[Common Infos]\nDataFile=a.eeg\nNumberOfChannels=2\nSamplingInterval=200\n"
        "[Binary Infos]\nBinaryFormat=INT_16\n[Channel Infos]\nCh1=Fz,,0.1,µV\nCh2=Cz,,0.1,µV\n";
    CHECK_NOTHROW(parse_vhdr(good));
    CHECK_THROWS_AS(parse_vhdr("hello\n"), ParseError);
    auto no_rate = good;
    no_rate.replace(no_rate.find("SamplingInterval=200"), 20, "SamplingInterval=xx");
    CHECK_THROWS_AS(parse_vhdr(no_rate), ParseError);
    auto three = good;
    three.replace(three.find("NumberOfChannels=2"), 18, "NumberOfChannels=3");
    CHECK_THROWS_AS(parse_vhdr(three), FormatError);
    auto one = good;
    one.replace(one.find("NumberOfChannels=2"), 18, "NumberOfChannels=1");
    CHECK_THROWS_AS(parse_vhdr(one), FormatError);
}

TEST_CASE("float32 round trip is exact after quantisation")
{
    auto dir = scratch("roundtrip");
    auto rec = random_recording(5, 3000, 1);
    rec.markers = {{"R128", 0, "Response"}, {"S  1", 1234, "Stimulus"}, {"R128", 2999, "Response"}};
    const auto paths = write_brainvision(rec, dir, "sess");
    auto back = read_brainvision(paths.header);
    CHECK(back.fs == doctest::Approx(rec.fs));
    REQUIRE(back.data.rows() == rec.data.rows());
    REQUIRE(back.data.cols() == rec.data.cols());
    for (Index c = 0; c < rec.channel_count(); ++c)
        for (Index i = 0; i < rec.sample_count(); ++i)
            REQUIRE(back.data(c, i) == static_cast<double>(static_cast<float>(rec.data(c, i))));
    CHECK(back.markers == rec.markers);
    CHECK(back.channels == rec.channels);

    // second trip is bit-identical
    const auto again = write_brainvision(back, dir, "sess2");
    CHECK(read_brainvision(again.header).data == back.data);
}

TEST_CASE("int16 round trip within half a count")
{
    auto dir = scratch("int16");
    auto rec = random_recording(3, 1000, 2);
    const auto paths = write_brainvision(rec, dir, "q", {BinaryFormat::Int16, 0.1});
    auto back = read_brainvision(paths.header);
    CHECK((back.data - rec.data).cwiseAbs().maxCoeff() <= 0.05 + 1e-9);
}

TEST_CASE("data file size follows channels x samples x 4")
{
    auto dir = scratch("size");
    Recording rec = random_recording(31, 120000, 3);
    const auto paths = write_brainvision(rec, dir, "big");
    CHECK(fs::file_size(paths.data) == 31u * 120000u * 4u);
}

TEST_CASE("missing marker file is an input error")
{
    auto dir = scratch("nomarker");
    auto rec = random_recording(2, 100, 4);
    const auto paths = write_brainvision(rec, dir, "x");
    fs::remove(paths.markers);
    CHECK_THROWS_AS(read_brainvision(paths.header), IoError);
    CHECK_THROWS_AS(read_brainvision(dir / "absent.vhdr"), IoError);
}

TEST_CASE("oximetry text")
{
    auto dir = scratch("oxi");
    {
        std::ofstream f(dir / "p.txt");
        for (int i = 0; i < 2400; ++i)
            f << std::sin(i * 0.1) << "\n";
    }
    auto oxi = read_oximetry(dir / "p.txt");
    CHECK(oxi.kind == SignalKind::Oximetry);
    CHECK(oxi.sample_count() == 2400);
    CHECK(oxi.duration() == doctest::Approx(60.0));
    write_text(dir / "empty.txt", "");
    CHECK_THROWS_AS(read_oximetry(dir / "empty.txt"), EmptyDataError);
    write_text(dir / "bad.txt", "1.0\nabc\n");
    CHECK_THROWS_AS(read_oximetry(dir / "bad.txt"), ParseError);
}

TEST_CASE("config parsing")
{
    auto cfg = parse_config("");
    CHECK(cfg.slice_freq_hz == doctest::Approx(19.5));
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.band_lo_hz() == 1.0);

    cfg = parse_config("# comment\nmode = task\nn_slices=30 # inline\ntr_seconds=1.5\n");
    CHECK(cfg.mode == Mode::Task);
    CHECK(cfg.band_lo_hz() == doctest::Approx(0.1));
    CHECK(cfg.slice_freq_hz == doctest::Approx(20.0));

    CHECK_THROWS_AS(parse_config("nonsense=1\n"), ParseError);
    CHECK_THROWS_AS(parse_config("n_slices=abc\n"), ParseError);
    CHECK_THROWS_AS(parse_config("novalue\n"), ParseError);
    CHECK_THROWS_AS(parse_config("slice_freq_hz=30\n").validate(), ArgumentError);
    CHECK_THROWS_AS(parse_config("rest_lo_hz=80\n").validate(), ArgumentError);

    // the flat map parses back to the same values
    cfg = parse_config("mode=task\ngradient_method=AAS\nseed=99\n");
    std::string text;
    for (const auto& [k, v] : cfg.to_map())
        text += k + "=" + v + "\n";
    CHECK(parse_config(text).to_map() == cfg.to_map());
}

TEST_CASE("config file falls back to the environment")
{
    auto dir = scratch("cfg");
    write_text(dir / "c.cfg", "seed=123\n");
    setenv("APPEAR_CONFIG", (dir / "c.cfg").c_str(), 1);
    CHECK(resolve_config({}).seed == 123);
    write_text(dir / "d.cfg", "seed=7\n");
    CHECK(resolve_config(dir / "d.cfg").seed == 7);
    unsetenv("APPEAR_CONFIG");
    CHECK(resolve_config({}).seed == PipelineConfig{}.seed);
    CHECK_THROWS_AS(load_config(dir / "none.cfg"), IoError);
}

TEST_CASE("report round trip")
{
    RunReport r;
    r.mode = "rest";
    r.selected_qrs_method = "ICA";
    r.hr_ecg = 62.79;
    r.hr_ica = 63.18;
    r.hr_oximetry = 63.17;
    r.bad_intervals = {{10, 20}, {400, 512}};
    r.seed = 42;
    r.ica_iterations = 311;
    r.ica_converged = true;
    r.removed_ics = {0, 4};
    for (int i = 0; i < 31; ++i) {
        IcRecord ic;
        ic.index = i;
        ic.label = i == 0 ? "BCG" : "Neural";
        if (i == 0)
            ic.trace = {"bcg_spectral", "bcg_topo", "bcg_contribution"};
        ic.diagnostics = {{"kurtosis", 3.0 + i * 0.1}, {"f_lmin", std::nan("")}};
        r.ics.push_back(ic);
    }
    r.stage_times = {{"read", 0.5}, {"ica", 30.25}};
    r.total_seconds = 31.0;
    r.config = PipelineConfig{}.to_map();

    auto dir = scratch("report");
    write_report(r, dir / "r.json");
    auto back = read_report(dir / "r.json");
    CHECK(back == r);
    CHECK(back.ics.size() == 31);
    CHECK(std::isnan(back.ics[3].diagnostics.at("f_lmin")));

    RunReport minimal;
    CHECK(report_from_json(report_to_json(minimal)) == minimal);

    CHECK_THROWS_AS(report_from_json("{"), ParseError);
    CHECK_THROWS_AS(report_from_json("{\"schema_version\": 1}"), ParseError);

    r.stage_times.push_back({"bad", -1.0});
    CHECK_THROWS_AS(write_report(r, dir / "bad.json"), ArgumentError);
}
