#include <doctest.h>

#include "appear/brainvision.hpp"
#include "appear/report.hpp"
#include "appear/synth.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace appear;

namespace {

const fs::path kWork = fs::temp_directory_path() / "appear_cli_test";

int run(const std::string& args)
{
    const std::string cmd = std::string(APPEAR_CLI) + " " + args + " >" + (kWork / "stdout.txt").string() + " 2>" +
                            (kWork / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text)
{
    std::ofstream out(p);
    out << text;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Short sessions with a capped ICA budget keep the command-line tests quick.
struct Fixture {
    fs::path session = kWork / "session";
    fs::path config = kWork / "fast.cfg";

    Fixture()
    {
        static bool made = false;
        if (made) return;
        fs::remove_all(kWork);
        fs::create_directories(kWork);
        spit(config, "ica_max_sweeps = 48\n");
        spit(kWork / "spec.json", "{\"duration_s\": 60, \"seed\": 5}");
        REQUIRE(run("synth --spec " + q(kWork / "spec.json") + " --truth neural --out " + q(session)) == 0);
        made = true;
    }
};

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

} // namespace

TEST_CASE("synth command")
{
    Fixture f;
    SUBCASE("files exist and re-ingest")
    {
        CHECK(fs::exists(f.session / "synth.vhdr"));
        CHECK(fs::exists(f.session / "synth_oximetry.txt"));
        CHECK(fs::exists(f.session / "truth" / "neural.vhdr"));
        CHECK_FALSE(fs::exists(f.session / "truth" / "gradient.vhdr"));
        const Recording back = read_brainvision(f.session / "synth.vhdr");
        SynthSpec spec;
        spec.duration_s = 60;
        spec.seed = 5;
        const SynthSession s = generate(spec, {"ecg"});
        REQUIRE(back.channel_count() == s.raw.channel_count());
        REQUIRE(back.sample_count() == s.raw.sample_count());
        CHECK(back.fs == doctest::Approx(5000.0));
        const double scale = s.raw.data.cwiseAbs().maxCoeff();
        CHECK((back.data - s.raw.data).cwiseAbs().maxCoeff() <= 1e-6 * scale);
        CHECK(back.markers.size() == s.raw.markers.size());
        const json truth = load_json(f.session / "truth.json");
        CHECK(truth["r_peaks"].size() == s.r_peaks.size());
        CHECK(truth["spec"]["seed"] == 5);
    }
    SUBCASE("same seed twice gives identical files")
    {
        REQUIRE(run("synth --duration 12 --seed 42 --truth bcg --out " + q(kWork / "s42a")) == 0);
        REQUIRE(run("synth --duration 12 --seed 42 --truth bcg --out " + q(kWork / "s42b")) == 0);
        for (const auto* name : {"synth.eeg", "synth.vmrk", "synth_oximetry.txt", "truth.json", "truth/bcg.eeg"})
            CHECK(slurp(kWork / "s42a" / name) == slurp(kWork / "s42b" / name));
    }
    SUBCASE("bad specs exit 2")
    {
        CHECK(run("synth --duration 5 --out " + q(kWork / "short")) == 2);
        spit(kWork / "bad.json", "{\"bogus\": 1}");
        CHECK(run("synth --spec " + q(kWork / "bad.json") + " --out " + q(kWork / "bad")) == 2);
        CHECK(run("synth --duration 12 --truth noise --out " + q(kWork / "bad")) == 2);
        CHECK(run("synth --spec " + q(kWork / "missing.json")) == 2);
    }
    SUBCASE("usage errors exit 2")
    {
        CHECK(run("") == 2);
        CHECK(run("synth --no-such-flag") == 2);
        CHECK(run("--help") == 0);
    }
}

TEST_CASE("preprocess command")
{
    Fixture f;
    const std::string in = "--vhdr " + q(f.session / "synth.vhdr") + " --oximetry " + q(f.session / "synth_oximetry.txt") +
                           " --config " + q(f.config);
    const fs::path out = kWork / "pre";
    REQUIRE(run("preprocess " + in + " --out " + q(out)) == 0);
    CHECK(fs::exists(out / "synth_corrected.vhdr"));
    const RunReport rep = read_report(out / "synth_report.json");
    CHECK(rep.band_lo_hz == doctest::Approx(1.0));
    CHECK(rep.band_hi_hz == doctest::Approx(70.0));
    CHECK(rep.mode == "rest");
    CHECK(rep.ics.size() == 31);
    CHECK_FALSE(rep.selected_qrs_method.empty());
    CHECK(rep.hr_oximetry.has_value());
    double sum = 0;
    for (const auto& st : rep.stage_times) sum += st.seconds;
    CHECK(std::abs(sum - rep.total_seconds) <= 0.05 * rep.total_seconds);
    REQUIRE(rep.stage_times.size() >= 3);
    CHECK(rep.stage_times.front().stage == "read");
    CHECK(rep.stage_times.back().stage == "write");

    const Recording corrected = read_brainvision(out / "synth_corrected.vhdr");
    CHECK(corrected.fs == doctest::Approx(250.0));
    CHECK(corrected.channel_count() == 32);

    SUBCASE("re-running gives identical output")
    {
        REQUIRE(run("preprocess " + in + " --out " + q(kWork / "pre2")) == 0);
        CHECK(slurp(out / "synth_corrected.eeg") == slurp(kWork / "pre2" / "synth_corrected.eeg"));
        RunReport a = rep, b = read_report(kWork / "pre2" / "synth_report.json");
        a.stage_times.clear();
        b.stage_times.clear();
        a.total_seconds = b.total_seconds = 0;
        CHECK(a == b);
    }
    SUBCASE("task mode records the 0.1 Hz lower edge")
    {
        REQUIRE(run("preprocess " + in + " --mode task --out " + q(kWork / "task")) == 0);
        const RunReport t = read_report(kWork / "task" / "synth_report.json");
        CHECK(t.band_lo_hz == doctest::Approx(0.1));
        CHECK(t.mode == "task");
    }
    SUBCASE("missing marker file exits 2")
    {
        const fs::path broken = kWork / "broken";
        fs::create_directories(broken);
        for (const auto* ext : {".vhdr", ".eeg"})
            fs::copy_file(f.session / (std::string("synth") + ext), broken / (std::string("synth") + ext),
                          fs::copy_options::overwrite_existing);
        CHECK(run("preprocess --vhdr " + q(broken / "synth.vhdr") + " --out " + q(kWork / "broken_out")) == 2);
        CHECK(slurp(kWork / "stderr.txt").find("appear:") != std::string::npos);
    }
    SUBCASE("bad arguments exit 2")
    {
        CHECK(run("preprocess " + in + " --mode sleep --out " + q(kWork / "x")) == 2);
        CHECK(run("preprocess --vhdr " + q(f.session / "synth.vhdr") + " --oximetry a --oximetry b") == 2);
        CHECK(run("preprocess --vhdr " + q(kWork / "nothing.vhdr")) == 2);
    }
    SUBCASE("corrected output scored against the truth")
    {
        REQUIRE(run("evaluate --vhdr " + q(out / "synth_corrected.vhdr") + " --truth " +
                    q(f.session / "truth" / "neural.vhdr") + " --bad-from " + q(out / "synth_report.json") +
                    " --scalogram " + q(kWork / "scal.csv") + " --segment 10,20 --out " + q(kWork / "eval.json")) == 0);
        const json j = load_json(kWork / "eval.json");
        CHECK(j["recovery"]["mean_correlation"].get<double>() > 0.3);
        CHECK(j["bands"].size() == 4);
        CHECK(fs::exists(kWork / "scal.csv"));
        std::ifstream csv(kWork / "scal.csv");
        std::string header;
        std::getline(csv, header);
        CHECK(header.rfind("time_s,", 0) == 0);

        REQUIRE(run("evaluate --vhdr " + q(out / "synth_corrected.vhdr") + " --compare " +
                    q(kWork / "pre2" / "synth_corrected.vhdr")) == 0);
        const json p = load_json(kWork / "stdout.txt");
        REQUIRE(p["paired"].size() == 4);
    }
}

TEST_CASE("preprocess fans out over sessions and honours APPEAR_CONFIG")
{
    Fixture f;
    fs::create_directories(kWork / "two");
    for (const auto* stem : {"a", "b"}) {
        SynthSpec spec;
        spec.duration_s = 40;
        spec.seed = stem[0] == 'a' ? 11 : 12;
        write_brainvision(generate(spec, {"ecg"}).raw, kWork / "two", stem);
    }
    spit(kWork / "env.cfg", "ica_max_sweeps = 48\nmode = task\n");
    REQUIRE(setenv("APPEAR_CONFIG", (kWork / "env.cfg").c_str(), 1) == 0);
    const int code = run("preprocess --vhdr " + q(kWork / "two" / "a.vhdr") + " --vhdr " + q(kWork / "two" / "b.vhdr") +
                         " --jobs 2 --keep-intermediates --out " + q(kWork / "two_out"));
    unsetenv("APPEAR_CONFIG");
    REQUIRE(code == 0);
    for (const auto* stem : {"a", "b"}) {
        const RunReport r = read_report(kWork / "two_out" / (std::string(stem) + "_report.json"));
        CHECK(r.band_lo_hz == doctest::Approx(0.1));
        CHECK(fs::exists(kWork / "two_out" / (std::string(stem) + "_intermediates") / "bcg.vhdr"));
    }
}

TEST_CASE("evaluate rejects unusable input")
{
    Fixture f;
    Recording tiny;
    tiny.fs = 250;
    tiny.channels = {{"Cz", {}, false}, {"Pz", {}, false}};
    tiny.data = Matrix::Random(2, 500);
    write_brainvision(tiny, kWork / "tiny", "tiny");
    CHECK(run("evaluate --vhdr " + q(kWork / "tiny" / "tiny.vhdr")) == 2);

    Recording other = tiny;
    other.data = Matrix::Random(2, 5000);
    write_brainvision(other, kWork / "tiny", "other");
    other.data = Matrix::Random(2, 4000);
    write_brainvision(other, kWork / "tiny", "shorter");
    CHECK(run("evaluate --vhdr " + q(kWork / "tiny" / "other.vhdr") + " --truth " + q(kWork / "tiny" / "shorter.vhdr")) ==
          2);
}
