#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pbdcbf/harness/metrics.hpp"
#include "pbdcbf/harness/output.hpp"
#include "pbdcbf/harness/runner.hpp"

using namespace pbdcbf;
using namespace pbdcbf::harness;
using json = nlohmann::json;

namespace {

const std::filesystem::path kScenarios = PBDCBF_SCENARIO_DIR;

std::string read_text(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json rope_json() { return json::parse(read_text(kScenarios / "rope_single_assistant.json")); }

std::vector<std::string> problems_of(const json& j)
{
    try {
        parse_scenario(j.dump(2), "test");
    } catch (const ConfigError& e) {
        return e.problems;
    }
    return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle)
{
    return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

// Short rope in free space, cheap enough to run many times.
ScenarioConfig small_rope()
{
    ScenarioConfig c;
    c.name = "small_rope";
    pbd::RodSpec rod;
    rod.length = 0.7;
    rod.segment_count = 10;
    rod.start = Vec3(0, -0.35, 1.0);
    rod.radius = 0.005;
    rod.linear_density = 0.2;
    rod.material.youngs_modulus = 1e5;
    rod.material.torsion_modulus = 1e5;
    c.object = rod;
    c.leader.held_body_index = 0;
    c.leader.initial_position = Vec3(0, -0.25, 1.0);
    c.agents.push_back({"a1", 9, Vec3(0, 0.25, 1.0)});
    c.controller.pair_limits[{"a1", "leader"}] = {0.1, 0.8};
    c.sim.num_substeps = 10;
    c.sim.settle_time = 1.0;
    c.run.duration = 4.0;
    return c;
}

TickLog tick_with(std::size_t k, double h_coll, double pair_distance)
{
    TickLog t;
    t.tick = k;
    t.t = 0.02 * static_cast<double>(k);
    t.h_coll = h_coll;
    t.min_distance = h_coll + 0.05;
    AgentTick a;
    a.id = "a1";
    a.error = Vec3(0.0, 0.0, 0.01 * static_cast<double>(k + 1));
    a.error_norm = a.error.norm();
    a.solve_time = 1e-5;
    t.agents.push_back(a);
    PairTick p;
    p.first = "leader";
    p.second = "a1";
    p.distance = pair_distance;
    p.h_stretch = 1.0 - pair_distance;
    p.h_prox = pair_distance - 0.3;
    t.pairs.push_back(p);
    return t;
}

}  // namespace

TEST_CASE("bundled rope scenario loads")
{
    const auto cfg = load_scenario(kScenarios / "rope_single_assistant.json");
    REQUIRE(std::holds_alternative<pbd::RodSpec>(cfg.object));
    CHECK(std::get<pbd::RodSpec>(cfg.object).segment_count == 28);
    CHECK(cfg.controller.d_offset == doctest::Approx(0.05));
    CHECK(cfg.agents.size() == 1);
}

TEST_CASE("every bundled scenario validates")
{
    int count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(kScenarios)) {
        if (entry.path().extension() != ".json")
            continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(load_scenario(entry.path()));
        ++count;
    }
    CHECK(count >= 4);
}

TEST_CASE("config errors")
{
    SUBCASE("d_min >= d_max names the pair")
    {
        json j = rope_json();
        j["controller"]["pair_limits"] = json::array({{{"agents", {"leader", "a1"}}, {"d_min", 0.9}, {"d_max", 0.5}}});
        const auto p = problems_of(j);
        REQUIRE(!p.empty());
        CHECK(any_contains(p, "leader"));
        CHECK(any_contains(p, "a1"));
    }
    SUBCASE("duplicate held index")
    {
        json j = rope_json();
        j["agents"].push_back({{"id", "a2"}, {"held_body_index", 27}, {"initial_position", {0.0, 0.6, 1.0}}});
        CHECK(any_contains(problems_of(j), "already held"));
    }
    SUBCASE("unknown key")
    {
        json j = rope_json();
        j["controller"]["kp"] = 1.0;
        CHECK(any_contains(problems_of(j), "kp"));
    }
    SUBCASE("non-positive waypoint speed")
    {
        json j = rope_json();
        j["leader"]["waypoints"][0]["speed"] = 0.0;
        CHECK(!problems_of(j).empty());
    }
    SUBCASE("every failure is listed")
    {
        json j = rope_json();
        j["run"]["tick_rate"] = -1.0;
        j["leader"]["waypoints"][0]["speed"] = -1.0;
        j["agents"][0]["held_body_index"] = 0;
        CHECK(problems_of(j).size() >= 3);
    }
    SUBCASE("syntax error carries a line")
    {
        std::string text = rope_json().dump(2);
        text.insert(text.find("\"controller\""), "}}");
        try {
            parse_scenario(text, "broken");
            FAIL("expected a parse error");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("line ") != std::string::npos);
        }
    }
    SUBCASE("missing file")
    {
        CHECK_THROWS_AS(load_scenario(kScenarios / "no_such_scenario.json"), ConfigError);
    }
}

TEST_CASE("config echo parses back to the same config")
{
    for (const auto& name : {"rope_single_assistant", "fabric_three_assistants", "rope_two_assistants"}) {
        CAPTURE(name);
        const auto cfg = load_scenario(kScenarios / (std::string(name) + ".json"));
        const std::string text = to_json_text(cfg);
        CHECK(to_json_text(parse_scenario(text)) == text);
    }
}

TEST_CASE("leader trajectory")
{
    const LeaderTrajectory traj(Vec3::Zero(), {{Vec3(1, 0, 0), 0.5, 1.0}, {Vec3(1, 1, 0), 1.0, 0.0}});
    CHECK(traj.end_time() == doctest::Approx(4.0));
    CHECK((traj.position(0.0) - Vec3::Zero()).norm() < 1e-12);
    CHECK((traj.position(1.0) - Vec3(0.5, 0, 0)).norm() < 1e-12);
    CHECK((traj.position(2.5) - Vec3(1, 0, 0)).norm() < 1e-12);
    CHECK((traj.position(3.5) - Vec3(1, 0.5, 0)).norm() < 1e-12);
    CHECK((traj.position(100.0) - Vec3(1, 1, 0)).norm() < 1e-12);

    // Speed along the path is the waypoint speed.
    for (double t = 0.1; t < 1.9; t += 0.1)
        CHECK((traj.position(t + 0.01) - traj.position(t)).norm() == doctest::Approx(0.005));

    const LeaderTrajectory still(Vec3(1, 2, 3), {});
    CHECK(still.end_time() == 0.0);
    CHECK((still.position(7.0) - Vec3(1, 2, 3)).norm() == 0.0);
}

TEST_CASE("compute_metrics")
{
    SUBCASE("empty log")
    {
        CHECK_THROWS_AS(compute_metrics({}), std::invalid_argument);
    }
    SUBCASE("single tick equals that tick")
    {
        const std::vector<TickLog> log{tick_with(0, 0.2, 0.7)};
        const Metrics m = compute_metrics(log);
        CHECK(m.ticks == 1);
        CHECK(m.min_h_coll == 0.2);
        CHECK(m.min_distance == doctest::Approx(0.25));
        CHECK(m.max_pair_distance == 0.7);
        CHECK(m.min_pair_distance == 0.7);
        CHECK(m.rms_tracking_error == doctest::Approx(0.01));
        CHECK(m.violation_ticks.at("collision") == 0);
    }
    SUBCASE("non-negative barriers give no violations")
    {
        std::vector<TickLog> log;
        for (std::size_t k = 0; k < 20; ++k)
            log.push_back(tick_with(k, 0.01 * static_cast<double>(k), 0.5));
        const Metrics m = compute_metrics(log);
        for (const auto& [name, n] : m.violation_ticks)
            CHECK(n == 0);
        CHECK(m.min_h_coll == 0.0);
    }
    SUBCASE("one injected violation")
    {
        const std::vector<TickLog> log{tick_with(0, 0.1, 0.5), tick_with(1, -0.0123, 0.5), tick_with(2, 0.1, 0.5)};
        const Metrics m = compute_metrics(log);
        CHECK(m.violation_ticks.at("collision") == 1);
        CHECK(m.violation_ticks.at("stretch") == 0);
        CHECK(m.min_h_coll == -0.0123);
        // rms over e = 0.01, 0.02, 0.03
        CHECK(m.rms_tracking_error == doctest::Approx(std::sqrt((1e-4 + 4e-4 + 9e-4) / 3.0)));
        CHECK(m.max_tracking_error == doctest::Approx(0.03));
    }
    SUBCASE("stretch violation and excess")
    {
        const std::vector<TickLog> log{tick_with(0, 0.1, 0.9), tick_with(1, 0.1, 1.05)};
        const Metrics m = compute_metrics(log);
        CHECK(m.violation_ticks.at("stretch") == 1);
        CHECK(m.max_stretch_excess == doctest::Approx(0.05));
        CHECK(m.min_h_stretch == doctest::Approx(-0.05));
    }
}

TEST_CASE("static leader: agents converge and the run completes")
{
    const ScenarioConfig cfg = small_rope();
    const RunResult r = run(cfg);
    REQUIRE(!r.error);
    CHECK(r.ticks.size() == static_cast<std::size_t>(std::lround(cfg.run.duration * cfg.run.tick_rate)) + 1);
    for (std::size_t k = 1; k < r.ticks.size(); ++k) {
        CHECK(r.ticks[k].tick == k);
        CHECK(r.ticks[k].t > r.ticks[k - 1].t);
    }
    for (const auto& a : r.ticks.back().agents)
        CHECK(a.error_norm < 1e-3);
    for (const auto& t : r.ticks)
        CHECK((t.leader_pos - r.ticks.front().leader_pos).norm() < 1e-12);
}

TEST_CASE("replay determinism")
{
    ScenarioConfig cfg = small_rope();
    cfg.leader.waypoints = {{Vec3(0, -0.25, 0.8), 0.1, 0.5}};
    cfg.run.observation_noise = 0.002;
    cfg.run.seed = 7;
    const RunResult a = run(cfg);
    const RunResult b = run(cfg);
    REQUIRE(a.ticks.size() == b.ticks.size());
    for (std::size_t k = 0; k < a.ticks.size(); ++k)
        CHECK(csv_row(a.ticks[k]) == csv_row(b.ticks[k]));

    cfg.run.seed = 8;
    const RunResult c = run(cfg);
    bool differs = false;
    for (std::size_t k = 0; k < a.ticks.size(); ++k)
        differs = differs || csv_row(a.ticks[k]) != csv_row(c.ticks[k]);
    CHECK(differs);
}

TEST_CASE("bundled rope: logs are self-consistent")
{
    ScenarioConfig cfg = load_scenario(kScenarios / "rope_single_assistant.json");
    cfg.run.duration = 12.0;
    Simulation sim(cfg);
    std::vector<TickLog> log{sim.last()};
    while (!sim.finished())
        log.push_back(sim.advance());

    // p_r0 recovered from the logged tick-0 positions
    const Vec3 p_r0 = log.front().agents[0].position - log.front().leader_pos;
    CHECK((p_r0 - sim.reference_offsets()[0]).norm() < 1e-12);
    double worst = 0.0;
    for (const auto& t : log) {
        const auto& a = t.agents[0];
        const double e = (p_r0 + t.leader_pos - a.position).norm();
        worst = std::max(worst, std::abs(e - a.error_norm));
        // the applied command respects the speed box
        CHECK(a.u.cwiseAbs().maxCoeff() <= cfg.controller.u_max + 1e-12);
        CHECK(t.h_coll == doctest::Approx(t.min_distance - cfg.controller.d_offset));
    }
    CHECK(worst < 1e-12);

    // violation counts agree with a recount from the log
    const Metrics m = compute_metrics(log);
    const auto recount = std::count_if(log.begin(), log.end(), [](const TickLog& t) { return t.h_coll < 0.0; });
    CHECK(m.violation_ticks.at("collision") == static_cast<std::size_t>(recount));
    CHECK(m.min_h_coll ==
          std::min_element(log.begin(), log.end(), [](auto& x, auto& y) { return x.h_coll < y.h_coll; })->h_coll);
}

TEST_CASE("bypass monotonicity")
{
    ScenarioConfig cfg = load_scenario(kScenarios / "rope_single_assistant_fast.json");
    cfg.run.duration = 10.0;
    SimulationOptions bypass;
    bypass.bypass_qp = true;
    const Metrics with_qp = compute_metrics(run(cfg).ticks);
    const Metrics without = compute_metrics(run(cfg, bypass).ticks);
    CHECK(without.violation_ticks.at("collision") > 0);
    for (const auto& [name, n] : with_qp.violation_ticks) {
        CAPTURE(name);
        CHECK(n <= without.violation_ticks.at(name));
    }
    CHECK(with_qp.min_h_coll > without.min_h_coll);
}

TEST_CASE("divergence keeps the partial log")
{
    SUBCASE("physical blow-up")
    {
        ScenarioConfig cfg = small_rope();
        cfg.sim.settle_time = 0.0;
        cfg.sim.gravity = Vec3(0, 0, -1e200);
        const RunResult r = run(cfg);
        REQUIRE(r.error.has_value());
        CHECK(r.ticks.size() == 1);
    }

    ScenarioConfig cfg = small_rope();
    // Divergence reported mid-run, after 26 ticks were produced.
    const RunResult r = run(cfg, {}, [](const TickLog& t) {
        if (t.tick == 25)
            throw pbd::IntegrationDiverged(3, "injected");
    });
    REQUIRE(r.error.has_value());
    CHECK(r.error->find("injected") != std::string::npos);
    REQUIRE(r.ticks.size() == 26);
    CHECK(r.ticks.back().tick == 25);

    // The writer leaves a readable partial CSV and a metrics file that records the failure.
    const auto dir = std::filesystem::temp_directory_path() / "pbdcbf_partial_log";
    std::filesystem::remove_all(dir);
    {
        LogWriter w(dir, cfg);
        for (const auto& t : r.ticks)
            w.write(t);
        RunSummary s;
        s.scenario = cfg.name;
        s.completed = false;
        s.error = r.error;
        w.finish(compute_metrics(r.ticks), s);
    }
    std::ifstream csv(dir / "ticks.csv");
    std::size_t lines = 0;
    for (std::string line; std::getline(csv, line);)
        ++lines;
    CHECK(lines == r.ticks.size() + 1);
    const json metrics = json::parse(read_text(dir / "metrics.json"));
    CHECK(metrics.dump().find("false") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "config.echo"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("csv rows match the header")
{
    ScenarioConfig cfg = small_rope();
    cfg.run.duration = 0.2;
    const RunResult r = run(cfg);
    const auto columns = [](const std::string& line) {
        std::size_t n = 1;
        bool quoted = false;
        for (char c : line) {
            if (c == '"')
                quoted = !quoted;
            else if (c == ',' && !quoted)
                ++n;
        }
        return n;
    };
    const std::string header = csv_header(cfg);
    for (const auto& t : r.ticks)
        CHECK(columns(csv_row(t)) == columns(header));
    CHECK(header.find("dist_leader_a1") != std::string::npos);
    // each JSON line parses
    for (const auto& t : r.ticks)
        CHECK(json::parse(jsonl_row(t)).is_object());
}
