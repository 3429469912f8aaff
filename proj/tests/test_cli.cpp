#include "mjf/cli.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace mjf;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out, err;
    json j() const { return json::parse(out); }
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("mjf_cli_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                           ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    Outcome run(std::vector<std::string> args, bool with_cache_dir = true) {
        bool cache_cmd = args[0] == "theta" || args[0] == "cache";
        if (with_cache_dir && cache_cmd) {
            args.push_back("--cache-dir");
            args.push_back(dir.string());
        }
        std::ostringstream o, e;
        int c = cli::run_command(args, o, e);
        return {c, o.str(), e.str()};
    }

    std::vector<std::string> qexp_args(const std::string& order) {
        return {"theta", "qexp", "--gram", "[[3,4],[4,3]]", "--mode", "paper-L", "--E", "[[-3,4]]", "--Ep", "[[-4,3]]",
                "--torsion", R"({"alpha":["1/14","1/14"],"beta":[0,0]})", "--order", order};
    }
    std::vector<std::string> eval_args(const std::string& eps) {
        return {"theta", "eval", "--gram", "[[3,4],[4,3]]", "--mode", "paper-L", "--E", "[[-3,4]]", "--Ep", "[[-4,3]]",
                "--tau", "[0.1,1]", "--z", "[[0.1,0.2],[0.3,0.1]]", "--eps", eps};
    }

    fs::path dir;
};

json without_metadata(json j) {
    j.erase("metadata");
    return j;
}

}  // namespace

TEST_F(Cli, LatticeAnalyze) {
    auto r = run({"lattice", "analyze", "--inline", "[[3,4],[4,3]]", "--mode", "paper-L"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = r.j();
    EXPECT_EQ(j["signature"], json({1, 1, 0}));
    EXPECT_EQ(j["det"], "-7");
    EXPECT_EQ(j["discriminant"]["order"], 28);
    EXPECT_EQ(j["input"]["gram"][0][1], "4");
}

TEST_F(Cli, PositiveFrameVectorIsRejected) {
    auto r = run({"theta", "eval", "--gram", "[[3,4],[4,3]]", "--mode", "paper-L", "--E", "[[1,1]]", "--Ep", "[[-4,3]]", "--tau",
                  "[0.1,1]", "--z", "[[0,0],[0,0]]"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("positive frame vector"), std::string::npos) << r.err;
}

TEST_F(Cli, MalformedInputNamesTheField) {
    struct Case {
        std::vector<std::string> args;
        std::string field;
    };
    std::vector<Case> cases{
        {{"lattice", "analyze", "--inline", "[[3,4],[4,3"}, "gram:"},
        {{"lattice", "analyze", "--inline", "[[1,2],[3,4]]"}, "gram:"},
        {{"lattice", "analyze", "--inline", "[[1]]", "--mode", "weird"}, "mode:"},
        {{"lattice", "analyze", "--inline", "[[\"1/0\"]]"}, "gram[0][0]:"},
        {{"mu", "eval", "--kind", "hat_ml", "--m", "1", "--l", "0", "--tau", "[0,2]"}, "z:"},
        {{"mu", "eval", "--kind", "hat_ml", "--m", "1", "--l", "0", "--tau", "[0,-2]", "--z", "0.1"}, "tau:"},
        {{"mu", "eval", "--kind", "nope", "--tau", "[0,1]"}, "kind:"},
        {{"theta", "eval", "--gram", "[[2]]", "--tau", "[0,1]", "--z", "[1]", "--eps", "0.5"}, "eps:"},
        {{"theta", "qexp", "--gram", "[[2]]", "--torsion", "{\"alpha\":[0]}", "--order", "3"}, "torsion.beta:"},
        {{"op", "apply", "--gram", "[[2]]", "--op", "Heat", "--tau", "[0,1]", "--z", "[1]", "--stencil-order", "3"}, "stencil order"},
    };
    for (auto& c : cases) {
        auto r = run(c.args);
        EXPECT_EQ(r.code, 2) << c.args[0] << " " << r.out;
        EXPECT_NE(r.err.find(c.field), std::string::npos) << r.err;
    }
}

TEST_F(Cli, UnknownCommandIsAUsageError) { EXPECT_EQ(run({"bogus"}).code, 2); }

TEST_F(Cli, ThetaEvalRoundTripsThroughFromJson) {
    auto a = run(eval_args("1e-12"), false);
    ASSERT_EQ(a.code, 0) << a.err;
    fs::create_directories(dir);
    auto file = (dir / "out.json").string();
    std::ofstream(file) << a.out;
    auto b = run({"theta", "eval", "--no-cache", "--from-json", file}, false);
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(a.j()["value"], b.j()["value"]);
    EXPECT_EQ(a.j()["input"], b.j()["input"]);
    // the echoed complex numbers decode to the same doubles
    auto v = complex_from_json(a.j()["value"]);
    auto direct = theta_indef_eval(make_theta_spec(Lattice::from_ints({{3, 4}, {4, 3}}, FormMode::paper_L), {{Rat(-3), Rat(4)}},
                                                   {{Rat(-4), Rat(3)}}, {}, KernelMode::completed, Precision<real>(1e-12L)),
                                   Point(cplx(0.1L, 1), {cplx(0.1L, 0.2L), cplx(0.3L, 0.1L)}));
    EXPECT_LT(std::abs(v - direct.value), 1e-15L);
}

TEST_F(Cli, EveryEmittedJsonIsAcceptedBack) {
    fs::create_directories(dir);
    std::vector<std::vector<std::string>> cmds{
        {"lattice", "analyze", "--inline", "[[2,1],[1,2]]"},
        qexp_args("2"),
        {"theta", "components", "--gram", "[[2,-1],[-1,2]]", "--tau", "[0.1,1]", "--z", "[[0.1,0.2],[0.3,0.1]]"},
        {"mu", "eval", "--kind", "mu_m", "--m", "1", "--tau", "[0.1,1]", "--z1", "[0.3,0.2]", "--z2", "0.125"},
        {"mu", "residual", "--tau", "[0.1,1]", "--u", "[0.3,0.2]", "--v", "[0.1,0.4]"},
        {"op", "apply", "--gram", "[[2,-1],[-1,2]]", "--op", "Heat", "--tau", "[0.1,1]", "--z", "[[0.1,0.2],[0.3,0.1]]"},
        {"verify", "efunction", "--json"},
    };
    for (auto& c : cmds) {
        auto a = run(c);
        ASSERT_EQ(a.code, 0) << c[0] << " " << a.err;
        auto file = (dir / "round.json").string();
        std::ofstream(file) << a.out;
        std::vector<std::string> again{c[0]};
        if (c[0] != "verify") again.push_back(c[1]);
        again.insert(again.end(), {"--from-json", file});
        if (c[0] == "verify") again.push_back("--json");
        auto b = run(again);
        ASSERT_EQ(b.code, 0) << c[0] << " " << b.err;
        EXPECT_EQ(without_metadata(a.j()), without_metadata(b.j())) << c[0] << " " << c[1];
    }
}

TEST_F(Cli, QexpCacheHitIsBitIdentical) {
    auto a = run(qexp_args("4"));
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.j()["metadata"]["cache"], "miss");
    auto b = run(qexp_args("4"));
    EXPECT_EQ(b.j()["metadata"]["cache"], "hit");
    EXPECT_EQ(without_metadata(a.j()).dump(), without_metadata(b.j()).dump());
    auto nocache = run({"theta", "qexp", "--no-cache", "--gram", "[[3,4],[4,3]]", "--mode", "paper-L", "--E", "[[-3,4]]", "--Ep",
                        "[[-4,3]]", "--torsion", R"({"alpha":["1/14","1/14"],"beta":[0,0]})", "--order", "4"});
    EXPECT_EQ(nocache.j()["metadata"]["cache"], "disabled");
    EXPECT_EQ(without_metadata(a.j()).dump(), without_metadata(nocache.j()).dump());
}

TEST_F(Cli, CorruptCacheEntryWarnsAndRecomputes) {
    auto a = run(qexp_args("3"));
    ASSERT_EQ(a.code, 0);
    for (const char* junk : {"not json at all", R"({"schema":"cache/1","kind":"theta-qexp","input":null,"payload":1})"}) {
        for (auto& de : fs::directory_iterator(dir)) std::ofstream(de.path()) << junk;
        auto b = run(qexp_args("3"));
        EXPECT_EQ(b.code, 0);
        if (std::string(junk)[0] == 'n') {
            EXPECT_NE(b.err.find("warning: corrupt cache entry"), std::string::npos) << b.err;
        }
        EXPECT_EQ(without_metadata(a.j()), without_metadata(b.j()));
    }
    // a payload that parses but is not a series
    std::string key = a.j()["metadata"]["cache_key"];
    json entry{{"schema", "cache/1"}, {"kind", "theta-qexp"}, {"input", a.j()["input"]}, {"eps", nullptr}, {"payload", {{"x", 1}}}};
    std::ofstream(dir / (key + ".json")) << entry.dump();
    auto c = run(qexp_args("3"));
    EXPECT_NE(c.err.find("warning: corrupt cache entry"), std::string::npos) << c.err;
    EXPECT_EQ(c.j()["metadata"]["cache"], "miss");
    EXPECT_EQ(without_metadata(a.j()), without_metadata(c.j()));
}

TEST_F(Cli, TighterEpsInvalidatesFloatEntries) {
    EXPECT_EQ(run(eval_args("1e-8")).j()["metadata"]["cache"], "miss");
    EXPECT_EQ(run(eval_args("1e-8")).j()["metadata"]["cache"], "hit");
    EXPECT_EQ(run(eval_args("1e-14")).j()["metadata"]["cache"], "miss");
    // the stored 1e-14 entry serves a looser request, within that request's eps
    auto loose = run(eval_args("1e-6")), fresh = run({"theta", "eval", "--no-cache", "--gram", "[[3,4],[4,3]]", "--mode", "paper-L", "--E",
                                                       "[[-3,4]]", "--Ep", "[[-4,3]]", "--tau", "[0.1,1]", "--z",
                                                       "[[0.1,0.2],[0.3,0.1]]", "--eps", "1e-6"});
    EXPECT_EQ(loose.j()["metadata"]["cache"], "hit");
    EXPECT_LT(std::abs(complex_from_json(loose.j()["value"]) - complex_from_json(fresh.j()["value"])), 1e-6L);
}

TEST_F(Cli, CacheStatsAndClear) {
    run(qexp_args("2"));
    run(qexp_args("3"));
    fs::create_directories(dir);
    std::ofstream(dir / "keep-me.txt") << "not ours";
    auto s = run({"cache", "stats"});
    EXPECT_EQ(s.j()["entries"], 2);
    auto c = run({"cache", "clear"});
    EXPECT_EQ(c.j()["removed"], 2);
    EXPECT_EQ(run({"cache", "stats"}).j()["entries"], 0);
    EXPECT_TRUE(fs::exists(dir / "keep-me.txt"));
}

TEST_F(Cli, CacheDirPrecedence) {
    cli::CliConfig a;
    ::setenv("MJF_CACHE_DIR", "/tmp/from-env", 1);
    cli::resolve_cache_dir(a, "/tmp/from-flag");
    EXPECT_EQ(a.cache_dir, "/tmp/from-flag");
    cli::CliConfig b;
    cli::resolve_cache_dir(b, "");
    EXPECT_EQ(b.cache_dir, "/tmp/from-env");
    ::unsetenv("MJF_CACHE_DIR");
    ::setenv("HOME", "/tmp/home-x", 1);
    cli::CliConfig c;
    cli::resolve_cache_dir(c, "");
    EXPECT_EQ(c.cache_dir, fs::path("/tmp/home-x/.cache/indef-theta-lab"));
}

TEST_F(Cli, UnwritableCacheDisablesCaching) {
    fs::create_directories(dir);
    std::ofstream(dir / "file") << "x";
    auto args = qexp_args("2");
    args.insert(args.end(), {"--cache-dir", (dir / "file").string()});
    auto r = run(args, false);
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("caching disabled"), std::string::npos);
}

TEST_F(Cli, VerifyExitCodes) {
    auto ok = run({"verify", "splitting", "--json"});
    EXPECT_EQ(ok.code, 0);
    EXPECT_EQ(ok.j()["schema"], "verify/1");
    EXPECT_EQ(ok.j()["pass"], true);
    EXPECT_EQ(run({"verify", "nonsense"}).code, 2);
    EXPECT_EQ(run({"verify", "gz_product", "--copies", "x"}).code, 2);
    // the literally printed series disagrees; the other two forms hold
    auto gz = run({"verify", "gz_product", "--copies", "1", "--order", "10", "--json"});
    EXPECT_EQ(gz.code, 1);
    for (auto& c : gz.j()["suites"][0]["checks"])
        EXPECT_EQ(c["pass"], c["name"].get<std::string>().rfind("printed", 0) != 0) << c["name"];
    auto text = run({"verify", "efunction"});
    EXPECT_EQ(text.code, 0);
    EXPECT_NE(text.out.find("PASS efunction"), std::string::npos);
}

TEST_F(Cli, MuMatchesLibrary) {
    auto r = run({"mu", "eval", "--kind", "hat_ml", "--m", "1", "--l", "0", "--tau", "[0,2]", "--z", "[0.17,0.05]", "--eps", "1e-14"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto lib = mu_hat_ml(1, 0, cplx(0, 2), cplx(0.17, 0.05), Precision<real>(1e-14L));  // the CLI reads doubles
    EXPECT_LT(std::abs(complex_from_json(r.j()["value"]) - lib.value), 1e-18L);
    EXPECT_EQ(run({"mu", "eval", "--kind", "two_var", "--tau", "[0,1]", "--u", "0", "--v", "[0.2,0.1]"}).code, 2);  // pole
}

TEST_F(Cli, OpCheckAndText) {
    auto r = run({"op", "check", "--gram", "[[2,-1],[-1,2]]", "--op", "Heat", "--points",
                  R"([{"tau":[0.1,1],"z":[[0.1,0.2],[0.3,0.1]]},{"tau":[-0.2,0.8],"z":[[0,0.1],[0.2,0]]}])", "--json"});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_EQ(r.j()["suites"][0]["checks"].size(), 2u);
    auto t = run({"lattice", "analyze", "--inline", "[[2]]", "--format", "text"});
    EXPECT_NE(t.out.find("det = 2"), std::string::npos) << t.out;
}
