#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "scrap/io.hpp"

namespace fs = std::filesystem;
using scrap::io::json;

namespace {

struct CliRun {
    int status = -1;
    std::string output;
};

CliRun run(const std::string& args, const std::string& env = "")
{
    const std::string cmd = env + " " + SCRAP_CLI_PATH + " " + args + " 2>&1";
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("scrap-cli-") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string out(const std::string& name) const { return (dir_ / name).string(); }
    static std::string preset(const std::string& name) { return std::string(SCRAP_CONFIG_DIR) + "/" + name; }

    fs::path dir_;
};

} // namespace

TEST_F(CliTest, SimulateWritesTrajectoryAndManifest)
{
    const auto r = run("simulate --config " + preset("fig3-simulate-x.json") + " --out " + out("x"));
    ASSERT_EQ(r.status, 0) << r.output;
    const auto csv = slurp(dir_ / "x/trajectory.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,r1,r2,r3,delta,omega,rad1,rad2,rad3,na1,na2,na3,AD");
    const auto summary = json::parse(slurp(dir_ / "x/summary.json"));
    EXPECT_LE(summary.at("max_abs_na1").get<double>(), 0.25);
    EXPECT_LE(summary.at("max_abs_na3").get<double>(), 0.25);
    const auto manifest = json::parse(slurp(dir_ / "x/manifest.json"));
    EXPECT_EQ(manifest.at("command"), "simulate");
    EXPECT_EQ(manifest.at("files").size(), 3u);
    for (const auto& f : manifest.at("files")) EXPECT_EQ(f.at("sha256").get<std::string>().size(), 64u);
}

TEST_F(CliTest, ResolvedConfigIsEchoed)
{
    const auto r = run("simulate --out " + out("s") + " --tau 0.07 --sigma 1.2 --set pulse.S0=1.5");
    ASSERT_EQ(r.status, 0) << r.output;
    const auto cfg = json::parse(slurp(dir_ / "s/config.json"));
    EXPECT_EQ(cfg.at("pulse").at("S0").get<double>(), 1.5);
    EXPECT_NEAR(cfg.at("simulate").at("tau").get<double>(), 0.07, 1e-12);
    EXPECT_EQ(cfg.at("scenario"), "simulate");
}

TEST_F(CliTest, RunsAreByteIdentical)
{
    ASSERT_EQ(run("pmp --config " + preset("fig4-pmp-energy.json") + " --out " + out("a")).status, 0);
    ASSERT_EQ(run("pmp --config " + preset("fig4-pmp-energy.json") + " --out " + out("b")).status, 0);
    for (const char* f : {"extremal.csv", "extremal.json", "shooting.json", "config.json"})
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(CliTest, VerifyDetectsTampering)
{
    ASSERT_EQ(run("geophase --config " + preset("geophase-circle.json") + " --out " + out("g")).status, 0);
    EXPECT_EQ(run("verify " + out("g")).status, 0);
    std::ofstream(dir_ / "g/phase.json", std::ios::app) << " ";
    const auto r = run("verify " + out("g"));
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.output.find("MISMATCH"), std::string::npos);
}

TEST_F(CliTest, UnknownConfigKeyExitsTwoWithoutFiles)
{
    const auto r = run("simulate --out " + out("bad") + " --set pulse.typo=1");
    EXPECT_EQ(r.status, 2);
    EXPECT_FALSE(fs::exists(dir_ / "bad"));
}

TEST_F(CliTest, EmptyGridExitsTwoWithoutFiles)
{
    const auto r = run("adiabatic-map --out " + out("empty") + " --set grid.n_tau=0");
    EXPECT_EQ(r.status, 2);
    EXPECT_FALSE(fs::exists(dir_ / "empty"));
}

TEST_F(CliTest, AdiabaticMapReportsCriticalPoints)
{
    const auto r = run("adiabatic-map --config " + preset("fig1-adiabatic-map.json") + " --out " + out("m") +
                       " --set grid.n_tau=11 --set grid.n_sigma=11");
    ASSERT_EQ(r.status, 0) << r.output;
    const auto cp = json::parse(slurp(dir_ / "m/critical_points.json"));
    ASSERT_EQ(cp.at("points").size(), 3u);
    EXPECT_NEAR(cp.at("tau_T").get<double>(), 0.3, 1e-12);
}

TEST_F(CliTest, ProbeTimeOverrideMovesTauT)
{
    ASSERT_EQ(run("adiabatic-map --out " + out("p") + " --probe-time 70 --set grid.n_tau=3 --set grid.n_sigma=3").status, 0);
    const auto cp = json::parse(slurp(dir_ / "p/critical_points.json"));
    EXPECT_NEAR(cp.at("tau_T").get<double>(), 0.4, 1e-12);
}

TEST_F(CliTest, BlochMapWithoutPumpIsFlat)
{
    const auto r = run("bloch-map --out " + out("b") + " --set pulse.Omega0=0 --set grid.n_tau=4 --set grid.n_sigma=4");
    ASSERT_EQ(r.status, 0) << r.output;
    const auto a = json::parse(slurp(dir_ / "b/argmax.json"));
    EXPECT_EQ(a.at("argmax_pa").at("value").get<double>(), 0.0);
}

TEST_F(CliTest, PmpFailureExitsThreeWithDiagnostics)
{
    const auto r = run("pmp --out " + out("f") + " --set shooting.guesses=[[0,0,0]] --set shooting.max_iterations=2");
    EXPECT_EQ(r.status, 3);
    EXPECT_TRUE(fs::exists(dir_ / "f/shooting.json"));
    EXPECT_FALSE(fs::exists(dir_ / "f/extremal.csv"));
}

TEST_F(CliTest, EnsembleZtWritesPerturbationSurface)
{
    const auto r = run("ensemble --config " + preset("fig5-ensemble-zt.json") + " --out " + out("e") +
                       " --set shooting.random_restarts=0 --set ensemble.z_steps=4");
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_TRUE(fs::exists(dir_ / "e/perturbation_surface.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "e/members/z_003.csv"));
    const auto e = json::parse(slurp(dir_ / "e/ensemble.json"));
    EXPECT_EQ(e.at("members").size(), 4u);
}

TEST_F(CliTest, GeophaseEnclosingAndAvoiding)
{
    ASSERT_EQ(run("geophase --config " + preset("fig8-geophase-enclosing.json") + " --out " + out("in")).status, 0);
    ASSERT_EQ(run("geophase --config " + preset("fig8-geophase-avoiding.json") + " --out " + out("out")).status, 0);
    const auto in = json::parse(slurp(dir_ / "in/phase.json"));
    const auto av = json::parse(slurp(dir_ / "out/phase.json"));
    EXPECT_NEAR(in.at("gamma").get<double>(), 3.141592653589793, 1e-6);
    EXPECT_EQ(std::abs(in.at("winding").get<int>()), 1);
    EXPECT_NEAR(av.at("gamma").get<double>(), 0.0, 1e-6);
}

TEST_F(CliTest, GeophaseThroughOriginExitsFour)
{
    std::ofstream(dir_ / "path.csv") << "t,delta,omega\n0,1,0\n1,-1,0\n2,0,1\n3,1,0\n";
    const auto r = run("geophase --path-file " + out("path.csv") + " --out " + out("o"));
    EXPECT_EQ(r.status, 4) << r.output;
    EXPECT_FALSE(fs::exists(dir_ / "o"));
}

TEST_F(CliTest, GeophaseOpenPathNeedsFlag)
{
    std::ofstream(dir_ / "open.csv") << "t,delta,omega\n0,1,0\n1,1,1\n2,0,1\n";
    EXPECT_EQ(run("geophase --path-file " + out("open.csv") + " --out " + out("o1")).status, 2);
    const auto r = run("geophase --path-file " + out("open.csv") + " --allow-open --out " + out("o2"));
    ASSERT_EQ(r.status, 0) << r.output;
    const auto j = json::parse(slurp(dir_ / "o2/phase.json"));
    EXPECT_FALSE(j.at("closed").get<bool>());
}

TEST_F(CliTest, DefaultOutputRootFromEnvironment)
{
    const auto r = run("geophase", "SCRAP_OUT=" + dir_.string());
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_TRUE(fs::exists(dir_ / "geophase/manifest.json"));
}

TEST_F(CliTest, StabilityRejectsWrongCost)
{
    EXPECT_EQ(run("stability --cost energy --out " + out("s")).status, 2);
}

TEST_F(CliTest, StabilityZeroThresholdHasNoAcceptance)
{
    const auto r = run("stability --config " + preset("fig6-stability.json") + " --out " + out("s") +
                       " --axis A --threshold 0 --set stability.ranges.A=[0,0.05,2] --set stability.z_samples=5"
                       " --set shooting.random_restarts=0");
    ASSERT_EQ(r.status, 0) << r.output;
    const auto acc = json::parse(slurp(dir_ / "s/acceptance.json"));
    EXPECT_TRUE(acc.at("A").is_null());
}

TEST_F(CliTest, MissingSubcommandIsAConfigError)
{
    EXPECT_EQ(run("").status, 2);
    EXPECT_EQ(run("simulate --bogus-flag").status, 2);
}
