#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include <ciconv.hpp>

using namespace ciconv;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = CICONV_FIXTURE_DIR;
const std::string kCli = CICONV_CLI_PATH;

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + "'" + kCli + "' " + args + " 2>&1";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("ciconv_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

const std::string kScene = kFixtures + "/scenes/scene_1.png";
const std::string kRandom = kFixtures + "/random/random_32.png";

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("transform " + kScene + " --bogus -o " + path("a.png")).code, 2);
    EXPECT_EQ(run("transform " + kScene + " --kind Q -o " + path("a.png")).code, 2);
    EXPECT_EQ(run("transform " + kScene + " --sigma 1 --s 0 -o " + path("a.png")).code, 2);
    EXPECT_EQ(run("transform " + kScene + " -o " + path("a.jpg")).code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, RuntimeErrorsExitOne) {
    {
        std::ofstream f(path("bad.png"), std::ios::binary);
        f << "\x89PNG\r\n\x1a\n garbage";
    }
    const auto r = run("transform " + path("bad.png") + " -o " + path("out.png"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("error [read]"), std::string::npos) << r.out;

    const auto s = run("transform " + kScene + " --sigma 40 -o " + path("out.png"));
    EXPECT_EQ(s.code, 1);
    EXPECT_NE(s.out.find("error ["), std::string::npos) << s.out;

    {
        std::ofstream f(path("cfg.txt"));
        f << "kind=Z\n";
    }
    EXPECT_EQ(run("ciconv " + kScene + " --config " + path("cfg.txt") + " --stats").code, 1);
}

TEST_F(Cli, TransformWritesCif) {
    const auto r = run("transform " + kScene + " --kind C --sigma 2 -o " + path("c.cif"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto map = to_plane(parse_float_dump(read_file(path("c.cif"))));
    const auto want = compute_invariant(spatial_derivatives(rgb_to_planes(read_image(kScene)), 2.0),
                                        InvariantKind::C)
                          .values;
    ASSERT_EQ(map.width(), want.width());
    for (std::size_t i = 0; i < want.size(); ++i)
        EXPECT_EQ(map[i], static_cast<double>(static_cast<float>(want[i])));
}

TEST_F(Cli, DegenerateSampleWarns) {
    RgbImage img(16, 16);
    for (auto& v : img.values()) v = 0.5;
    write_file(path("gray.png"), encode_rgb_png(img));
    for (const std::string cmd : {"transform " + path("gray.png") + " -o " + path("t.png"),
                                  "ciconv " + path("gray.png") + " --stats -o " + path("c.cif")}) {
        const auto r = run(cmd);
        EXPECT_EQ(r.code, 0) << r.out;
        EXPECT_NE(r.out.find("warning: degenerate"), std::string::npos) << r.out;
    }
    const auto map = to_plane(parse_float_dump(read_file(path("c.cif"))));
    for (double v : map.values()) EXPECT_EQ(v, 0.0);
    EXPECT_NE(run("ciconv " + path("gray.png") + " --stats").out.find("degenerate 1"), std::string::npos);
}

TEST_F(Cli, StatsMatchLibrary) {
    const auto r = run("ciconv " + kScene + " --kind N --s 0.5 --stats");
    ASSERT_EQ(r.code, 0) << r.out;
    CIConvConfig cfg;
    cfg.kind = InvariantKind::N;
    cfg.s = 0.5;
    const auto out = forward(read_image(kScene), cfg);
    EXPECT_NE(r.out.find("mu_s " + detail::format_double(out.mu_s) + "\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("degenerate 0"), std::string::npos);
}

TEST_F(Cli, VerifyPassesOnFixtures) {
    const auto r = run("verify " + kFixtures + "/scenes");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("images 4"), std::string::npos);
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}

TEST_F(Cli, VerifyReportsMismatch) {
    {
        std::ofstream f(path("tol.txt"));
        f << "sg_smooth=1e-6\n";
    }
    const auto r = run("verify " + kFixtures + "/scenes --tolerances " + path("tol.txt"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("FAIL"), std::string::npos);
    EXPECT_NE(r.out.find("error [verify]"), std::string::npos);
}

TEST_F(Cli, GradcheckOnRandomFixture) {
    for (const char* kind : {"E", "W", "C"}) {
        const auto r = run(std::string("gradcheck ") + kRandom + " --kind " + kind + " --s 0.5");
        ASSERT_EQ(r.code, 0) << r.out;
        const auto at = r.out.find("relative_error ");
        ASSERT_NE(at, std::string::npos) << r.out;
        EXPECT_LT(std::stod(r.out.substr(at + 15)), 1e-4) << r.out;
    }
}

TEST_F(Cli, ShiftReducesBrightnessShift) {
    const auto r = run("shift " + kFixtures + "/scenes --transform brightness:0.25 --pipeline raw_rgb "
                       "--pipeline ciconv:W -o " + path("m.csv"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto records = parse_metrics_csv(slurp(path("m.csv")));
    ASSERT_EQ(records.size(), 2u);
    EXPECT_EQ(records[0].metric, "shift_metric");
    EXPECT_EQ(records[0].pipeline, "raw_rgb");
    EXPECT_LE(10.0 * records[1].value, records[0].value);
}

TEST_F(Cli, SweepCsv) {
    const auto r = run("sweep " + kFixtures + "/natural/natural_1.png --sigmas 0.5,2 -o " + path("s.csv"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto rows = parse_csv(slurp(path("s.csv")));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0][0], "sigma");
    EXPECT_LT(std::stod(rows[2][1]), std::stod(rows[1][1]));
}

TEST_F(Cli, EverySubcommandIsDeterministic) {
    struct Case {
        std::string args;
        std::string file;  // compared in addition to stdout when set
    };
    const std::vector<Case> cases = {
        {"transform " + kScene + " --kind H --sigma 1.5 -o " + path("t.cif"), path("t.cif")},
        {"transform " + kScene + " --kind W --normalize -o " + path("t.png"), path("t.png")},
        {"ciconv " + kScene + " --kind C --s 0.3 --stats -o " + path("c.cif"), path("c.cif")},
        {"sweep " + kScene + " --kind N --sigmas 0.5,1,2", ""},
        {"verify " + kFixtures + "/scenes", ""},
        {"gradcheck " + kRandom + " --kind W --s -0.5", ""},
        {"shift " + kFixtures + "/scenes --transform mix:1.2,0.1,-0.05 --pipeline raw_rgb --pipeline ciconv:C",
         ""},
    };
    for (const auto& c : cases) {
        std::vector<std::string> outs;
        for (const char* env : {"CICONV_THREADS=1", "CICONV_THREADS=1", "CICONV_THREADS=4"}) {
            const auto r = run(c.args, env);
            ASSERT_EQ(r.code, 0) << c.args << "\n" << r.out;
            outs.push_back(r.out + (c.file.empty() ? "" : slurp(c.file)));
        }
        EXPECT_EQ(outs[0], outs[1]) << c.args;
        EXPECT_EQ(outs[0], outs[2]) << c.args;
    }
}
