#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "pbdcbf/bridge/server.hpp"
#include "pbdcbf/harness/output.hpp"

namespace {

enum ExitCode { ok = 0, invalid = 1, diverged = 2, serve_failed = 3 };

struct RunArgs {
    std::string scenario;
    std::optional<double> duration;
    std::string out;
    std::optional<int> substeps;
    std::optional<double> hz;
    std::optional<std::uint64_t> seed;
    bool no_qp = false;
    bool serve = false;
    unsigned short port = 8765;
};

pbdcbf::harness::ScenarioConfig effective_config(const RunArgs& args)
{
    auto cfg = pbdcbf::harness::load_scenario(args.scenario);
    if (args.duration)
        cfg.run.duration = *args.duration;
    if (args.substeps)
        cfg.sim.num_substeps = *args.substeps;
    if (args.hz)
        cfg.run.tick_rate = *args.hz;
    if (args.seed)
        cfg.run.seed = *args.seed;
    pbdcbf::harness::validate(cfg);
    return cfg;
}

int batch_run(const RunArgs& args, const pbdcbf::harness::ScenarioConfig& cfg)
{
    using namespace pbdcbf::harness;
    const std::filesystem::path out =
        args.out.empty() ? std::filesystem::path("out") / cfg.name : std::filesystem::path(args.out);
    LogWriter writer(out, cfg);
    SimulationOptions options;
    options.bypass_qp = args.no_qp;
    const RunResult result = run(cfg, options, [&](const TickLog& t) { writer.write(t); });

    RunSummary summary;
    summary.scenario = cfg.name;
    summary.completed = !result.error;
    summary.error = result.error;
    summary.wall_seconds = result.wall_seconds;
    summary.bodies = cfg.body_count();
    summary.replicas = 1 + 3 * cfg.agents.size();
    summary.substeps_per_tick = cfg.sim.num_substeps * cfg.sim.num_steps;

    std::optional<Metrics> metrics;
    if (!result.ticks.empty())
        metrics = compute_metrics(result.ticks);
    writer.finish(metrics, summary);

    if (metrics)
        spdlog::info("{}: {} ticks in {:.2f} s, min_h_coll {:.4f} m, rms error {:.4f} m, mean QP {:.1f} us",
                     cfg.name, metrics->ticks, result.wall_seconds, metrics->min_h_coll, metrics->rms_tracking_error,
                     metrics->mean_solve_time * 1e6);
    spdlog::info("logs written to {}", out.string());
    return result.error ? diverged : ok;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Deformable-object manipulation with CBF safety filters"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

    RunArgs args;
    CLI::App* run_cmd = app.add_subcommand("run", "Run a scenario");
    run_cmd->add_option("--scenario", args.scenario, "Scenario file")->required();
    run_cmd->add_option("--duration", args.duration, "Run duration (s)");
    run_cmd->add_option("--out", args.out, "Output directory (default out/<scenario name>)");
    run_cmd->add_option("--substeps", args.substeps, "XPBD substeps per tick");
    run_cmd->add_option("--hz", args.hz, "Tick rate (Hz)");
    run_cmd->add_option("--seed", args.seed, "Random seed");
    run_cmd->add_flag("--no-qp", args.no_qp, "Apply the nominal command without the safety filter");
    run_cmd->add_flag("--serve", args.serve, "Run live behind the WebSocket bridge");
    run_cmd->add_option("--port", args.port, "Bridge port");

    std::string check_path;
    CLI::App* check_cmd = app.add_subcommand("check", "Validate a scenario file");
    check_cmd->add_option("--scenario", check_path, "Scenario file")->required();

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*check_cmd) {
            const auto cfg = pbdcbf::harness::load_scenario(check_path);
            std::cout << pbdcbf::harness::to_json_text(cfg);
            return ok;
        }
        const auto cfg = effective_config(args);
        if (!args.serve)
            return batch_run(args, cfg);

        pbdcbf::harness::SimulationOptions options;
        options.bypass_qp = args.no_qp;
        pbdcbf::bridge::ServerOptions server;
        server.port = args.port;
        if (const char* bind = std::getenv("PBDCBF_BIND_ADDRESS"))
            server.address = bind;
        try {
            pbdcbf::bridge::serve(cfg, std::filesystem::path(args.scenario).parent_path(), options, server);
        } catch (const pbdcbf::bridge::ServerError& e) {
            spdlog::error("{}", e.what());
            return serve_failed;
        }
        return ok;
    } catch (const pbdcbf::harness::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return invalid;
    } catch (const pbdcbf::pbd::IntegrationDiverged& e) {
        spdlog::error("diverged: {}", e.what());
        return diverged;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return invalid;
    }
}
