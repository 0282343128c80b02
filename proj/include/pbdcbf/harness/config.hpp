#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "pbdcbf/control/controller.hpp"
#include "pbdcbf/geometry/scene.hpp"
#include "pbdcbf/pbd/builders.hpp"

namespace pbdcbf::harness {

using ObjectConfig = std::variant<pbd::RodSpec, pbd::ClothSpec>;

struct AgentConfig {
    AgentId id;
    std::size_t held_body_index = 0;
    Vec3 initial_position = Vec3::Zero();
};

struct Waypoint {
    Vec3 position = Vec3::Zero();
    double speed = 0.05;  // m/s
    double dwell = 0.0;   // s
};

struct LeaderConfig {
    AgentId id = "leader";
    std::size_t held_body_index = 0;
    std::optional<Vec3> initial_position;  // defaults to the held body's built position
    std::vector<Waypoint> waypoints;
    double speed_max = 0.3;  // clamp on teleoperated velocity commands, m/s
};

struct SimConfig {
    int num_substeps = 20;
    int num_steps = 1;
    int solver_iterations = 1;
    double damping = 2.0;  // 1/s
    Vec3 gravity{0.0, 0.0, -9.81};
    double settle_time = 4.0;  // s simulated before t = 0 while the holders move into place
};

struct JacobianConfig {
    double delta = 0.1;  // m
    int resync_interval = 0;
    bool parallel = true;
};

struct RunConfig {
    double duration = 30.0;  // s
    double tick_rate = 50.0; // Hz
    std::uint64_t seed = 0;
    double observation_noise = 0.0;  // m, std-dev of noise on observed leader/peer positions

    double dt() const { return 1.0 / tick_rate; }
};

struct ScenarioConfig {
    std::string name = "scenario";
    ObjectConfig object = pbd::RodSpec{};
    std::vector<geometry::Obstacle> obstacles;
    std::vector<AgentConfig> agents;
    LeaderConfig leader;
    control::ControllerParams controller;
    SimConfig sim;
    JacobianConfig jacobian;
    RunConfig run;

    std::size_t body_count() const;
};

/// Parse or validation failure. `problems` lists every failure found.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, std::vector<std::string> problems);
    std::vector<std::string> problems;
};

/// Parses the JSON scenario format. Unknown keys are errors; syntax errors carry
/// line and column, field errors carry the key path.
ScenarioConfig parse_scenario(const std::string& text, const std::string& source = "<string>",
                              const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);

std::vector<std::string> validation_errors(const ScenarioConfig& config);
void validate(const ScenarioConfig& config);

/// Canonical JSON text of the config; parses back to an equal config.
std::string to_json_text(const ScenarioConfig& config);

}  // namespace pbdcbf::harness
