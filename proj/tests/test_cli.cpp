#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "neat/cli.hpp"
#include "support.hpp"

using namespace neat;
using neat::test::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// Spawns the real executable; returns its exit status.
int spawn(const std::string& args, const fs::path& err_file, const std::string& env = "") {
    const std::string cmd = env + " '" + std::string(NEAT_CLI_PATH) + "' " + args + " >/dev/null 2>'" +
                            err_file.string() + "'";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const std::regex kErrorLine(R"(^error: code=(\d) kind=[a-z_]+ message=".*"\n$)");

void expect_error(const Run& r, int code) {
    EXPECT_EQ(r.code, code) << r.err;
    std::smatch m;
    ASSERT_TRUE(std::regex_match(r.err, m, kErrorLine)) << r.err;
    EXPECT_EQ(m[1], std::to_string(code));
}

}  // namespace

TEST(Cli, CutoffGridWritesSevenRowsAndManifest) {
    TempDir dir("cli");
    const auto r = run({"cutoff", "--vg", "0.7:1.0:0.05", "--tm", "0.025", "--vsupply", "0.5", "--out", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = read_all(dir / "cutoff_table.csv");
    EXPECT_EQ(count_lines(csv), 8u);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "v_g,g_m_cutoff");

    const auto manifest = nlohmann::json::parse(read_all(dir / "run_manifest.json"));
    EXPECT_EQ(manifest["command"], "cutoff");
    EXPECT_EQ(manifest["tool"], "neat_cli");
    EXPECT_FALSE(manifest["version"].get<std::string>().empty());
    EXPECT_TRUE(manifest["config"].contains("tm"));
    EXPECT_TRUE(manifest["resolved_argv"].is_array());
    EXPECT_TRUE(manifest["device"].is_object());
    EXPECT_FALSE(fs::exists(dir / ".neat.lock"));
}

TEST(Cli, UnknownFlagIsUsageError) {
    TempDir dir("cli");
    expect_error(run({"cutoff", "--bogus", "1", "--out", dir.path().string()}), kExitUsage);
    expect_error(run({"frobnicate"}), kExitUsage);
    expect_error(run({}), kExitUsage);
}

TEST(Cli, UnreadableInputIsIoError) {
    TempDir dir("cli");
    expect_error(run({"eval", "--model", (dir / "nope.json").string(), "--out", dir.path().string()}), kExitIo);
    expect_error(run({"train", "--train-data", (dir / "nope.csv").string(), "--out", dir.path().string()}), kExitIo);
    expect_error(run({"cutoff", "--device", (dir / "nope.json").string(), "--out", dir.path().string()}), kExitIo);
}

TEST(Cli, InvalidNumericRangeIsDomainError) {
    TempDir dir("cli");
    expect_error(run({"cutoff", "--tm", "-1", "--out", dir.path().string()}), kExitDomain);
    expect_error(run({"power-mc", "--samples", "0", "--out", dir.path().string()}), kExitDomain);
    expect_error(run({"cutoff", "--vg", "1.0:0.7:0.05", "--out", dir.path().string()}), kExitDomain);
}

TEST(Cli, ExecutableExitCodesAndSingleErrorLine) {
    TempDir dir("cli");
    const fs::path err = dir / "stderr.txt";
    EXPECT_EQ(spawn("cutoff --nope --out '" + (dir / "o").string() + "'", err), 2);
    EXPECT_EQ(count_lines(read_all(err)), 1u);
    EXPECT_EQ(spawn("eval --model /nonexistent/m.json --out '" + (dir / "o").string() + "'", err), 3);
    EXPECT_TRUE(std::regex_match(read_all(err), kErrorLine));
    EXPECT_EQ(spawn("cutoff --tm 0 --out '" + (dir / "o").string() + "'", err), 4);
    EXPECT_TRUE(std::regex_match(read_all(err), kErrorLine));
    EXPECT_EQ(spawn("--help", err), 0);
}

TEST(Cli, DeviceFileFromEnvironment) {
    TempDir dir("cli");
    const fs::path err = dir / "stderr.txt";
    const std::string out = " --out '" + (dir / "o").string() + "'";
    EXPECT_EQ(spawn("cutoff --vg 1.3" + out, err, "NEAT_DEVICE_FILE='" + std::string(NEAT_LEAKAGE_DEVICE) + "'"), 0);
    const std::string csv = read_all(dir / "o" / "cutoff_table.csv");
    EXPECT_NE(csv.find("1.3,none"), std::string::npos) << csv;
    const auto manifest = nlohmann::json::parse(read_all(dir / "o" / "run_manifest.json"));
    EXPECT_EQ(manifest["device"]["vth"], 1.35);

    EXPECT_EQ(spawn("cutoff --vg 0.8" + out, err, "NEAT_DEVICE_FILE=/nonexistent/device.json"), 3);
}

TEST(Cli, ExistingLockRefusesToRun) {
    TempDir dir("cli");
    std::ofstream(dir / ".neat.lock") << "123\n";
    expect_error(run({"cutoff", "--vg", "0.8", "--out", dir.path().string()}), kExitIo);
    EXPECT_TRUE(fs::exists(dir / ".neat.lock"));
    EXPECT_FALSE(fs::exists(dir / "cutoff_table.csv"));
}

TEST(Cli, TrainLeavesInputsUntouched) {
    TempDir dir("cli");
    const std::string csv = "a,b,label\n0,1,0\n1,0,1\n0.1,0.9,0\n0.9,0.2,1\n";
    std::ofstream(dir / "d.csv") << csv;
    const auto r = run({"train", "--train-data", (dir / "d.csv").string(), "--epochs", "3", "--hidden", "4", "--out",
                        (dir / "o").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_all(dir / "d.csv"), csv);
    EXPECT_TRUE(fs::exists(dir / "o" / "checkpoint.json"));
    EXPECT_EQ(count_lines(read_all(dir / "o" / "train_log.csv")), 4u);
}

TEST(Cli, NeatRunsAreByteIdentical) {
    TempDir dir("cli");
    for (const char* name : {"a", "b"}) {
        const auto r = run({"neat", "--schedule", "heterogeneous", "--iters", "30", "--seed", "1", "--out", (dir / name).string()});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    for (const char* f : {"checkpoint.json", "neat_history.csv", "cutoff_table.csv", "metrics.json"}) {
        const std::string a = read_all(dir / "a" / f);
        EXPECT_FALSE(a.empty()) << f;
        EXPECT_EQ(a, read_all(dir / "b" / f)) << f;
    }
    EXPECT_EQ(count_lines(read_all(dir / "a" / "neat_history.csv")), 31u);
    const auto ckpt = nlohmann::json::parse(read_all(dir / "a" / "checkpoint.json"));
    EXPECT_EQ(ckpt["schedule"]["mode"], "heterogeneous");

    // The manifest alone reproduces the run.
    const auto r = run({"replay", (dir / "a" / "run_manifest.json").string(), "--out", (dir / "c").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_all(dir / "a" / "checkpoint.json"), read_all(dir / "c" / "checkpoint.json"));
}

TEST(Cli, ReportShowsPositiveEnergyGain) {
    TempDir dir("cli");
    const auto r = run({"report", "--baseline-vg", "1.0", "--compare-vg", "0.8", "--n-test", "100", "--out",
                        dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(read_all(dir / "report.json"));
    ASSERT_EQ(j["rows"].size(), 2u);
    EXPECT_EQ(j["rows"][0]["gain_pct"], 0.0);
    EXPECT_GT(j["rows"][1]["gain_pct"].get<double>(), 0.0);
    const std::string csv = read_all(dir / "report.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "schedule,v_g,energy_J,gain_pct,crossbar_accuracy");
}

TEST(Cli, CharacterizeAndPowerOutputs) {
    TempDir dir("cli");
    ASSERT_EQ(run({"characterize", "--gm", "3.3e-5", "--vg", "0.8", "--out", (dir / "c").string()}).code, 0);
    EXPECT_EQ(count_lines(read_all(dir / "c" / "geff_curve.csv")), 65u);
    const auto ch = nlohmann::json::parse(read_all(dir / "c" / "characterize.json"));
    EXPECT_GT(ch["tm"].get<double>(), 0.025);

    ASSERT_EQ(run({"power-mc", "--vg", "0.8,0.9,1.0", "--samples", "50", "--out", (dir / "p").string()}).code, 0);
    EXPECT_EQ(count_lines(read_all(dir / "p" / "power.csv")), 4u);
    EXPECT_EQ(count_lines(read_all(dir / "p" / "power_normalized.csv")), 4u);
}
