#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "../support/reference_table.hpp"
#include "betarce/cli.hpp"
#include "betarce/errors.hpp"
#include "betarce/serialize.hpp"

using namespace betarce;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("betarce_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string line; std::getline(is, line);) out.push_back(line);
    return out;
}

std::vector<double> csv_numbers(const std::string& line) {
    std::vector<double> out;
    std::istringstream is(line);
    for (std::string cell; std::getline(is, cell, ',');) out.push_back(std::stod(cell));
    return out;
}

const std::vector<std::string> kSmallArch{"--layers", "1", "--neurons", "8", "--epochs", "15", "--batch", "32", "--lr", "0.01"};

}  // namespace

TEST_CASE("integer and number lists") {
    CHECK(parse_int_list("1,2,4") == std::vector<int>{1, 2, 4});
    CHECK(parse_int_list("12..28:8") == std::vector<int>{12, 20, 28});
    CHECK(parse_int_list("3..5,9") == std::vector<int>{3, 4, 5, 9});
    CHECK(parse_double_list("0.7,0.999") == std::vector<double>{0.7, 0.999});
    CHECK_THROWS_AS(parse_int_list("5..3"), UsageError);
    CHECK_THROWS_AS(parse_int_list("a"), UsageError);
}

TEST_CASE("delta-max reproduces the published table under its convention") {
    const auto r = run({"delta-max", "--k", "1,2,4,12..124:8", "--alpha", "0.7,0.8,0.9,0.95,0.975,0.99,0.999", "--prior",
                        "1", "--interval", "equal-tailed", "--digits", "6"});
    REQUIRE(r.code == 0);
    const auto lines = split_lines(r.out);
    REQUIRE(lines.size() == 1 + reference::kDeltaMaxTable.size());
    CHECK(lines[0] == "k,0.7,0.8,0.9,0.95,0.975,0.99,0.999");
    for (std::size_t i = 0; i < reference::kDeltaMaxTable.size(); ++i) {
        const auto& ref = reference::kDeltaMaxTable[i];
        const auto got = csv_numbers(lines[i + 1]);
        REQUIRE(got.size() == 8);
        CHECK(static_cast<int>(got[0]) == ref.k);
        for (std::size_t j = 0; j < 7; ++j) {
            CAPTURE(ref.k);
            CAPTURE(reference::kAlphas[j]);
            CHECK(std::fabs(got[j + 1] - ref.delta[j]) <= 0.001);
        }
    }
}

TEST_CASE("delta-max default is the certification bound") {
    const auto r = run({"delta-max", "--k", "32", "--alpha", "0.975"});
    REQUIRE(r.code == 0);
    const auto got = csv_numbers(split_lines(r.out)[1]);
    CHECK(got[1] >= 0.9);
}

TEST_CASE("usage errors name the flag and exit 2") {
    auto r = run({"delta-max", "--k"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--k") != std::string::npos);
    CHECK(Json::parse(r.err)["error"] == "usage_error");

    r = run({"verify", "--cf", "0.1,0.2"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--store") != std::string::npos);

    r = run({"delta-max", "--k", "1", "--bogus", "3"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--bogus") != std::string::npos);

    r = run({});
    CHECK(r.code == 2);
    CHECK(run({"--version"}).out.find("betarce") == 0);
}

TEST_CASE("explain refuses an unverifiable request before loading anything") {
    const auto r = run({"explain", "--delta", "0.95", "--alpha", "0.975", "--k", "32", "--store", "/nonexistent"});
    CHECK(r.code == 1);
    const Json e = Json::parse(r.err);
    CHECK(e["error"] == "infeasible");
    CHECK(e["message"].get<std::string>().find("delta_max") != std::string::npos);
}

TEST_CASE("train-space, explain and verify round trip") {
    TempDir tmp;
    const auto csv = (tmp.path / "blobs.csv").string();
    REQUIRE(run({"make-synthetic", "--out", csv, "--n", "300", "--seed", "3"}).code == 0);

    std::vector<std::string> train{"train-space", "--data", csv, "--space", "seed", "--k", "16", "--seed", "9",
                                   "--out", (tmp.path / "store").string()};
    train.insert(train.end(), kSmallArch.begin(), kSmallArch.end());
    const auto t = run(train);
    REQUIRE_MESSAGE(t.code == 0, t.err);
    CHECK(fs::exists(tmp.path / "store" / "manifest.json"));
    CHECK(fs::exists(tmp.path / "store" / "member_015.bin"));
    CHECK(fs::exists(tmp.path / "store" / "base.bin"));

    const auto e = run({"explain", "--store", (tmp.path / "store").string(), "--data", csv, "--row", "4", "--delta",
                        "0.7", "--alpha", "0.9", "--k", "16", "--n", "300", "--seed", "1"});
    REQUIRE_MESSAGE(e.code == 0, e.err);
    const Json rec = Json::parse(e.out);
    CHECK(rec["k"] == 16);
    const std::string status = rec["status"];
    CHECK((status == "robustified" || status == "base_already_robust"));
    REQUIRE(rec.contains("x_robust"));

    std::string cf;
    for (const auto& v : rec["x_robust"]) cf += (cf.empty() ? "" : ",") + std::to_string(v.get<double>());
    const auto v = run({"verify", "--store", (tmp.path / "store").string(), "--cf", cf, "--target",
                        std::to_string(rec["target_class"].get<int>()), "--delta", "0.7", "--alpha", "0.9"});
    REQUIRE_MESSAGE(v.code == 0, v.err);
    const Json out = Json::parse(v.out);
    CHECK(out["robust"] == true);
    CHECK(out["trials"] == 16);

    const auto mismatch = run({"verify", "--store", (tmp.path / "store").string(), "--cf", "0.1,0.2,0.3"});
    CHECK(mismatch.code == 1);
    CHECK(Json::parse(mismatch.err)["error"] == "dimension_mismatch");

    const auto wrong_k = run({"explain", "--store", (tmp.path / "store").string(), "--instance", "0.2,0.2", "--delta",
                              "0.5", "--alpha", "0.9", "--k", "8"});
    CHECK(wrong_k.code == 1);
}

TEST_CASE("coverage then evaluate agree on pooled rows") {
    TempDir tmp;
    const auto csv = (tmp.path / "blobs.csv").string();
    REQUIRE(run({"make-synthetic", "--out", csv, "--n", "240", "--seed", "4"}).code == 0);
    Json arch{{"layers", 1}, {"neurons_per_layer", 8}, {"max_epochs", 15}, {"batch_size", 32}, {"learning_rate", 0.01}};
    Json config{{"dataset_path", csv},
                {"model", arch},
                {"space", {{"change_type", "seed"}}},
                {"k", 16},
                {"alpha", 0.9},
                {"delta_grid", {0.6, 0.7}},
                {"sphere", {{"n", 200}}},
                {"folds", 2},
                {"instances_per_fold", 4},
                {"eval_models_per_fold", 6},
                {"master_seed", 3}};
    {
        std::ofstream os(tmp.path / "run.json");
        os << config.dump(2);
    }
    const auto out_dir = (tmp.path / "out").string();
    const auto c = run({"coverage", "--config", (tmp.path / "run.json").string(), "--out", out_dir});
    REQUIRE_MESSAGE(c.code == 0, c.err);
    const auto cov_lines = split_lines(c.out);
    REQUIRE(cov_lines.size() == 3);

    const auto ev = run({"evaluate", "--manifest", out_dir + "/manifest.json"});
    REQUIRE_MESSAGE(ev.code == 0, ev.err);
    std::vector<std::string> pooled;
    for (const auto& line : split_lines(ev.out))
        if (line.find(",all,") != std::string::npos) pooled.push_back(line);
    REQUIRE(pooled.size() == 2);
    CHECK(pooled[0] == cov_lines[1]);
    CHECK(pooled[1] == cov_lines[2]);

    const auto bad = run({"sensitivity", "--config", (tmp.path / "run.json").string(), "--out", out_dir + "2",
                          "--alpha-grid", "0.999", "--k-grid", "2"});
    CHECK(bad.code == 1);
    CHECK(Json::parse(bad.err)["error"] == "infeasible");
}

TEST_CASE("the installed executable reports errors on stderr with a nonzero status") {
    const char* exe = std::getenv("BETARCE_CLI");
    if (!exe) {
        MESSAGE("BETARCE_CLI not set; skipping the subprocess check");
        return;
    }
    TempDir tmp;
    const auto err_path = tmp.path / "err.txt";
    const std::string cmd = std::string(exe) + " explain --delta 0.95 --alpha 0.975 --k 32 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 1);
    std::ifstream is(err_path);
    const Json e = Json::parse(is);
    CHECK(e["error"] == "infeasible");

    const std::string ok = std::string(exe) + " delta-max --k 1 --alpha 0.9 > " + (tmp.path / "o.txt").string();
    const int s2 = std::system(ok.c_str());
    CHECK(WEXITSTATUS(s2) == 0);
}
