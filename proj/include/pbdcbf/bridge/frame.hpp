#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbdcbf/harness/runner.hpp"

namespace pbdcbf::bridge {

struct ObstacleShape {
    std::string kind;  // "polygon" or "mesh"
    std::string plane;  // polygons only
    std::vector<std::vector<double>> vertices;  // [u, v] or [x, y, z]
    std::vector<std::array<std::size_t, 3>> faces;
};

/// Sent once per connection and again whenever the scenario is rebuilt.
struct Topology {
    std::string scenario;
    std::string object_kind;  // "rod" or "cloth"
    std::size_t point_count = 0;
    std::vector<std::array<std::size_t, 2>> edges;
    std::vector<std::array<std::size_t, 3>> triangles;
    std::vector<ObstacleShape> obstacles;
    std::vector<AgentId> agents;  // assistants
    AgentId leader;
    double d_offset = 0.0;
    double leader_speed_max = 0.0;
    double tick_rate = 0.0;
    std::string hash;  // FNV-1a over the content above
};

struct AgentState {
    AgentId id;
    Vec3 pos = Vec3::Zero();
    Vec3 u = Vec3::Zero();
    std::string status;
    std::vector<std::string> active_labels;
    double error_norm = 0.0;
};

struct StateFrame {
    std::size_t tick = 0;
    double t = 0.0;
    std::string object_kind;
    std::string topology_hash;
    bool paused = false;
    std::vector<Vec3> positions;
    std::vector<AgentState> agents;
    Vec3 leader_pos = Vec3::Zero();
    std::optional<double> h_collision;  // none without obstacles
    std::map<std::string, double> h_stretch;    // key "first,second"
    std::map<std::string, double> h_proximity;
    std::optional<double> min_distance;
    Vec3 object_witness = Vec3::Zero();
    Vec3 obstacle_witness = Vec3::Zero();
};

class ProtocolError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

Topology make_topology(const harness::Simulation& sim);
StateFrame make_frame(const harness::Simulation& sim, const std::string& topology_hash, bool paused);

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed = 14695981039346656037ull);

/// Canonical message text {"type": ..., "payload": ...}; floats rounded to 6 significant digits.
std::string encode(const Topology& topology);
std::string encode(const StateFrame& frame);

/// Message type of an encoded message; throws ProtocolError on malformed text.
std::string message_type(const std::string& text);
Topology decode_topology(const std::string& text);
StateFrame decode_frame(const std::string& text);

}  // namespace pbdcbf::bridge
