#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "pbdcbf/harness/metrics.hpp"

namespace pbdcbf::harness {

/// Column header of ticks.csv for a scenario (agent and pair columns in config order).
std::string csv_header(const ScenarioConfig& config);
/// One CSV row; wall-clock timings are left out so equal runs give equal bytes.
std::string csv_row(const TickLog& tick);
/// One JSON object per tick, timings included.
std::string jsonl_row(const TickLog& tick);

struct RunSummary {
    std::string scenario;
    bool completed = true;
    std::optional<std::string> error;
    double wall_seconds = 0.0;
    std::size_t bodies = 0;
    std::size_t replicas = 0;
    int substeps_per_tick = 0;
};

std::string metrics_json(const Metrics& metrics, const RunSummary& summary);

/// Writes config.echo at construction, ticks.csv and ticks.jsonl as ticks arrive
/// (flushed every tick so an aborted run leaves its partial log), metrics.json at finish.
class LogWriter {
public:
    LogWriter(const std::filesystem::path& dir, const ScenarioConfig& config);

    void write(const TickLog& tick);
    void finish(const std::optional<Metrics>& metrics, const RunSummary& summary);

    const std::filesystem::path& directory() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::ofstream csv_;
    std::ofstream jsonl_;
};

}  // namespace pbdcbf::harness
