#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "gkpdiss/config.hpp"
#include "gkpdiss/io.hpp"

using namespace gkpdiss;
namespace fs = std::filesystem;

namespace {

const char* sample = R"(# qec run
[physics]
epsilon = 0.1   ; finite energy
eta = 2sqrt(pi)

[qec]
noise = a
kappa1 = 0.02
truncation_check = false
)";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gkpdiss-test-" + name);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST(Config, ParseSerializeRoundTrip) {
    const auto cfg = RunConfig::parse(sample);
    const auto text = cfg.serialize();
    const auto again = RunConfig::parse(text);
    EXPECT_EQ(again, cfg);
    EXPECT_EQ(again.serialize(), text);
    EXPECT_DOUBLE_EQ(cfg.get_double("physics", "epsilon", 0.0), 0.1);
    EXPECT_NEAR(*cfg.get_double("physics", "eta"), 2.0 * std::sqrt(M_PI), 1e-15);
    EXPECT_FALSE(cfg.get_bool("qec", "truncation_check", true));
}

TEST(Config, OverridesWin) {
    auto cfg = RunConfig::parse(sample);
    cfg.apply_override("physics.epsilon=0.05");
    cfg.apply_override("solver.rtol = 1e-9");
    EXPECT_DOUBLE_EQ(cfg.get_double("physics", "epsilon", 0.0), 0.05);
    EXPECT_DOUBLE_EQ(cfg.get_double("solver", "rtol", 0.0), 1e-9);
    EXPECT_THROW(cfg.apply_override("epsilon=1"), Error);
    EXPECT_THROW(cfg.apply_override("physics.epsilon"), Error);
}

TEST(Config, Errors) {
    EXPECT_THROW(RunConfig::parse("[physics\nx=1"), Error);
    EXPECT_THROW(RunConfig::parse("[a]\nx=1\nx=2"), Error);
    EXPECT_THROW(RunConfig::parse("[a]\njust text"), Error);
    const auto cfg = RunConfig::parse("[a]\nx = abc\nn = 1.5\nb = maybe");
    EXPECT_THROW((void)cfg.get_double("a", "x"), Error);
    EXPECT_THROW((void)cfg.get_int("a", "n"), Error);
    EXPECT_THROW((void)cfg.get_bool("a", "b", false), Error);
    try {
        RunConfig::load("/nonexistent/file.cfg");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::io);
    }
}

TEST(Config, ListsAndDefaults) {
    const auto cfg = RunConfig::parse("[kappa]\neps = 1e-3, 1e-2 ,0.1\n");
    const auto v = cfg.get_list("kappa", "eps");
    ASSERT_EQ(v.size(), 3u);
    EXPECT_DOUBLE_EQ(v[1], 1e-2);
    EXPECT_EQ(cfg.get_int("kappa", "points", 7), 7);
    EXPECT_TRUE(cfg.get_list("kappa", "missing").empty());
}

TEST(Csv, SeventeenDigitsRoundTrip) {
    const double x = 0.1 + 0.2;
    EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
    EXPECT_EQ(format_double(std::nan("")), "nan");
    std::vector<ObservableRecord> recs(2);
    recs[0].t = 0.0;
    recs[0].trace = 1.0;
    recs[1].t = 1.0 / 3.0;
    recs[1].trace = 1.0 - 1e-13;
    recs[1].jz = 0.123456789012345678;
    const auto text = trajectory_csv(recs);
    std::vector<std::string> header;
    const auto rows = parse_csv(text, &header);
    ASSERT_EQ(header.size(), 7u);
    EXPECT_EQ(header[2], "TrW");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][0], recs[1].t);
    EXPECT_EQ(rows[1][1], recs[1].trace);
    EXPECT_EQ(rows[1][5], recs[1].jz);
    EXPECT_TRUE(std::isnan(rows[0][2]));
}

TEST(Csv, CodewordTableIsBitExact) {
    std::vector<StateVector> words(2, StateVector(5));
    for (Index n = 0; n < 5; ++n) {
        words[0][n] = Complex(std::sqrt(n + 0.1), -1.0 / (n + 3.0));
        words[1][n] = Complex(std::exp(-n * 1.234567), 0.0);
    }
    const auto back = parse_codewords_csv(codewords_csv(words));
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0], words[0]);
    EXPECT_EQ(back[1], words[1]);
    EXPECT_THROW(parse_codewords_csv("n,re0\n0,1\n"), Error);
}

TEST(Files, AtomicWriteLeavesNoTemporaries) {
    const auto dir = scratch("atomic");
    write_atomic(dir / "sub" / "a.txt", "first");
    write_atomic(dir / "sub" / "a.txt", "second");
    EXPECT_EQ(read_file(dir / "sub" / "a.txt"), "second");
    std::size_t count = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "sub")) ++count;
    EXPECT_EQ(count, 1u);
    fs::remove_all(dir);
}

TEST(Files, DefaultOutputDirFromEnvironment) {
    setenv(output_dir_env, "/tmp/somewhere", 1);
    EXPECT_EQ(default_output_dir(), fs::path("/tmp/somewhere"));
    unsetenv(output_dir_env);
    EXPECT_EQ(default_output_dir(), fs::path("gkpdiss-out"));
}

TEST(Envelope, FieldsAndDeterministicPayload) {
    ResultEnvelope env;
    env.command = "kappa";
    env.config_text = RunConfig::parse(sample).serialize();
    env.started = env.finished = std::chrono::system_clock::now();
    env.payload = {{"x", 1.5}};
    const auto j = Json::parse(env.dump());
    EXPECT_EQ(j["command"], "kappa");
    EXPECT_EQ(j["config"], env.config_text);
    EXPECT_EQ(j["payload"]["x"], 1.5);
    EXPECT_EQ(j["version"], artifact_version);
    EXPECT_FALSE(j.contains("error"));
    EXPECT_EQ(RunConfig::parse(j["config"].get<std::string>()), RunConfig::parse(sample));
    EXPECT_TRUE(number(std::nan("")).is_null());
}
