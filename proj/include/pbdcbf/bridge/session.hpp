#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pbdcbf/bridge/frame.hpp"

namespace pbdcbf::bridge {

enum class CommandKind { leader_velocity, pause, resume, reset, select_scenario };

std::string to_string(CommandKind kind);

struct Command {
    CommandKind kind = CommandKind::pause;
    Vec3 velocity = Vec3::Zero();  // leader_velocity
    std::string scenario;          // select_scenario
    std::string id;                // optional client correlation id, echoed in the reply
    std::uint64_t origin = 0;      // connection that sent it
};

/// Parses {"type": "command", "payload": {"kind": ...}}. Throws ProtocolError for
/// malformed text, unknown kinds and non-finite velocities.
Command parse_command(const std::string& text);
std::string encode_command(const Command& command);

struct Reply {
    Command command;
    bool ok = true;
    std::size_t tick = 0;                 // first tick that reflects the command
    std::optional<Vec3> applied_velocity; // after the speed clamp
    std::string error;
};

std::string encode(const Reply& reply);
std::string encode_error(const std::string& message, const std::string& id = {});

/// A simulation driven from one thread, steered by commands queued from any thread.
class Session {
public:
    /// `scenario_dir` is searched for "<name>.json" on select_scenario.
    Session(harness::ScenarioConfig config, std::filesystem::path scenario_dir,
            harness::SimulationOptions options = {});

    /// Thread-safe.
    void submit(Command command);

    /// Tick boundary: applies every queued command in arrival order.
    std::vector<Reply> apply_pending();
    /// Advances one tick unless paused. Returns whether a tick advanced.
    bool step();

    bool paused() const { return paused_; }
    /// Sim-thread pause without a command, used after a divergence.
    void halt() { paused_ = true; }
    const harness::Simulation& simulation() const { return *sim_; }
    const Topology& topology() const { return topology_; }
    StateFrame frame() const { return make_frame(*sim_, topology_.hash, paused_); }
    /// Incremented whenever the simulation is rebuilt (reset, select_scenario).
    std::uint64_t generation() const { return generation_; }

private:
    Reply apply(const Command& command);
    void rebuild(harness::ScenarioConfig config);

    harness::ScenarioConfig config_;
    std::filesystem::path scenario_dir_;
    harness::SimulationOptions options_;
    std::unique_ptr<harness::Simulation> sim_;
    Topology topology_;
    bool paused_ = false;
    std::uint64_t generation_ = 0;

    std::mutex queue_mutex_;
    std::deque<Command> queue_;
};

}  // namespace pbdcbf::bridge
