#include <doctest.h>

#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <sstream>

#include "cachesage/experiment.hpp"
#include "helpers.hpp"

using namespace cachesage;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() /
                     ("cachesage-test-" + std::to_string(::getpid()) + "-" +
                      std::to_string(counter++))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static inline int counter = 0;
};

std::string tiny_config_text(const std::string& out_dir) {
    json spec_json = json::parse(R"({
        "name": "cli-tiny",
        "agents": [{"label": "a", "anchor_tokens": 160},
                   {"label": "b", "anchor_tokens": 160}],
        "transition": [[0.0, 1.0], [1.0, 0.0]],
        "supervisor": 0,
        "turns_min": 4, "turns_max": 5, "sessions": 3,
        "task_tokens": 96, "history_growth": 16, "decode_tokens": 8,
        "template_tokens": 16, "concurrency": 1, "budget_blocks": 48,
        "seed": 77
    })");
    json config{{"workloads", json::array({json{{"spec", spec_json}}})},
                {"policies", json::array({"lru", "cachesage"})},
                {"output", json{{"dir", out_dir}, {"events", true}}}};
    return config.dump(2);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parse errors are line anchored") {
    const std::string bad = "{\n  \"workloads\": [\"supervisor-a\"],\n  \"policies\": [,]\n}\n";
    try {
        parse_run_config_text(bad, "test.json");
        FAIL("expected a parse failure");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("test.json:3") != std::string::npos);
    }
}

TEST_CASE("unknown policies are rejected with the valid list") {
    json config{{"workloads", json::array({"supervisor-a"})},
                {"policies", json::array({"lruu"})}};
    try {
        parse_run_config_text(config.dump(), "cfg");
        FAIL("expected a policy error");
    } catch (const std::invalid_argument& e) {
        const std::string message = e.what();
        CHECK(message.find("lruu") != std::string::npos);
        CHECK(message.find("lru, ttl, cachesage, belady") != std::string::npos);
    }
}

TEST_CASE("unknown presets are rejected at parse time") {
    json config{{"workloads", json::array({"supervisor-z"})},
                {"policies", json::array({"lru"})}};
    CHECK_THROWS_AS(parse_run_config_text(config.dump(), "cfg"), std::invalid_argument);
}

TEST_CASE("missing sections are reported") {
    CHECK_THROWS_WITH_AS(parse_run_config_text(R"({"policies":["lru"]})", "cfg"),
                         doctest::Contains("workload"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_run_config_text(R"({"workloads":["supervisor-a"]})", "cfg"),
                         doctest::Contains("policies"), std::invalid_argument);
}

TEST_CASE("policy config sections map onto the policy knobs") {
    json config{{"workloads", json::array({"supervisor-a"})},
                {"policies", json::array({"cachesage", "ttl"})},
                {"policy",
                 {{"cachesage",
                   {{"skip", 2},
                    {"take", 3},
                    {"tau", 0.05},
                    {"e_max", 4},
                    {"w_pred", 0.5},
                    {"window", 256},
                    {"gate",
                     {{"min_confidence", 0.7}, {"min_row_count", 9}, {"budget_per_step", 2}}}}},
                  {"ttl", {{"pin_horizon_ms", 250.0}}},
                  {"prefetch", false}}},
                {"seed", 9}};
    const RunConfig parsed = parse_run_config_text(config.dump(), "cfg");
    CHECK(parsed.cachesage.identity.skip == 2);
    CHECK(parsed.cachesage.identity.take == 3);
    CHECK(parsed.cachesage.tau == doctest::Approx(0.05));
    CHECK(parsed.cachesage.e_max == 4);
    CHECK(parsed.cachesage.w_pred == doctest::Approx(0.5));
    CHECK(parsed.cachesage.window == 256);
    CHECK(parsed.cachesage.gate.min_confidence == doctest::Approx(0.7));
    CHECK(parsed.cachesage.gate.min_row_count == 9);
    CHECK(parsed.cachesage.gate.budget_per_step == 2);
    CHECK(parsed.ttl.pin_horizon_us == doctest::Approx(250000.0));
    CHECK_FALSE(parsed.prefetch);
    CHECK(parsed.seed == 9);
}

TEST_CASE("run_experiment writes per-cell artifacts and the summary") {
    TempDir tmp;
    const std::string out_dir = (tmp.path / "run").string();
    RunConfig config = parse_run_config_text(tiny_config_text(out_dir), "cfg");
    std::ostringstream table;
    const auto outcomes = run_experiment(config, table);
    REQUIRE(outcomes.size() == 2);
    CHECK(outcomes[0].policy == "lru");
    CHECK(outcomes[1].policy == "cachesage");

    for (const char* policy : {"lru", "cachesage"}) {
        const fs::path cell = fs::path(out_dir) / "cli-tiny" / policy;
        CHECK(fs::exists(cell / "metrics.json"));
        CHECK(fs::exists(cell / "turns.csv"));
        CHECK(fs::exists(cell / "events.jsonl"));
        const json metrics = json::parse(slurp(cell / "metrics.json"));
        CHECK(metrics.at("schema") == "cachesage-metrics/v1");
        CHECK(metrics.at("policy") == policy);
        CHECK(metrics.at("hit_rate").get<double>() >= 0.0);
    }
    CHECK(fs::exists(fs::path(out_dir) / "summary.json"));
    CHECK(table.str().find("d_hit_pp") != std::string::npos);

    SUBCASE("a second run refuses the non-empty output directory") {
        std::ostringstream sink;
        CHECK_THROWS_AS(run_experiment(config, sink), std::runtime_error);
        config.force = true;
        CHECK_NOTHROW(run_experiment(config, sink));
    }
}

TEST_CASE("repeated runs are byte-identical") {
    TempDir tmp;
    RunConfig config = parse_run_config_text(tiny_config_text((tmp.path / "a").string()), "cfg");
    std::ostringstream sink;
    run_experiment(config, sink);
    RunConfig config2 = parse_run_config_text(tiny_config_text((tmp.path / "b").string()), "cfg");
    run_experiment(config2, sink);
    for (const char* policy : {"lru", "cachesage"}) {
        for (const char* file : {"metrics.json", "turns.csv", "events.jsonl"}) {
            const auto a = slurp(tmp.path / "a" / "cli-tiny" / policy / file);
            const auto b = slurp(tmp.path / "b" / "cli-tiny" / policy / file);
            REQUIRE(!a.empty());
            CHECK(a == b);
        }
    }
}

TEST_CASE("measure reports the figure-style quantities") {
    const Trace trace = generate_trace(preset_by_name("synthetic-chain"));
    const json report = measure_trace(trace);
    CHECK(report.at("entropy_reduction").get<double>() == doctest::Approx(1.0));
    CHECK(report.at("first_turn_phi").at("mean").get<double>() > 0.3);
    CHECK(report.at("phi_by_turn_index").size() > 5);

    Trace single;
    single.spec = trace.spec;
    single.turns.push_back(trace.turns[0]);
    CHECK_THROWS_AS(measure_trace(single), std::invalid_argument);
}

TEST_CASE("jobs parallelism produces the same outputs as serial execution") {
    TempDir tmp;
    RunConfig serial =
        parse_run_config_text(tiny_config_text((tmp.path / "serial").string()), "cfg");
    RunConfig parallel =
        parse_run_config_text(tiny_config_text((tmp.path / "parallel").string()), "cfg");
    parallel.jobs = 4;
    std::ostringstream sink;
    run_experiment(serial, sink);
    run_experiment(parallel, sink);
    for (const char* policy : {"lru", "cachesage"}) {
        CHECK(slurp(tmp.path / "serial" / "cli-tiny" / policy / "metrics.json") ==
              slurp(tmp.path / "parallel" / "cli-tiny" / policy / "metrics.json"));
    }
}

TEST_CASE("bench reports the hot-path quantities") {
    const json report = run_bench(12, 5000, 20000, 3);
    CHECK(report.at("agents") == 12);
    CHECK(report.at("observe_ns_mean").get<double>() > 0.0);
    CHECK(report.at("score_ns_mean").get<double>() > 0.0);
    CHECK(report.at("state_bytes").get<std::size_t>() > 0);
    CHECK(report.at("rebuilds") == report.at("agent_changes"));
}
