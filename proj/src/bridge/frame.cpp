#include "pbdcbf/bridge/frame.hpp"

#include <charconv>
#include <cmath>

#include <json.hpp>

namespace pbdcbf::bridge {

namespace {

using ojson = nlohmann::ordered_json;

ojson r6(double v)
{
    if (!std::isfinite(v))
        return nullptr;
    char buf[32];
    const auto end = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6).ptr;
    double rounded = 0.0;
    std::from_chars(buf, end, rounded);
    return rounded;
}

ojson vec(const Vec3& v) { return ojson::array({r6(v.x()), r6(v.y()), r6(v.z())}); }

ojson optional_number(const std::optional<double>& v) { return v ? r6(*v) : ojson(nullptr); }

ojson message(const char* type, ojson payload)
{
    ojson m;
    m["type"] = type;
    m["payload"] = std::move(payload);
    return m;
}

std::string pair_key(const harness::PairTick& p) { return p.first + "," + p.second; }

// Decoding helpers; any schema mismatch becomes a ProtocolError.
ojson parse(const std::string& text)
{
    try {
        return ojson::parse(text);
    } catch (const ojson::exception& e) {
        throw ProtocolError(std::string("malformed message: ") + e.what());
    }
}

const ojson& payload_of(const ojson& m, const char* expected)
{
    if (!m.is_object() || !m.contains("type") || m["type"] != expected || !m.contains("payload"))
        throw ProtocolError(std::string("expected a '") + expected + "' message");
    return m["payload"];
}

Vec3 to_vec(const ojson& j)
{
    if (!j.is_array() || j.size() != 3)
        throw ProtocolError("expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::optional<double> to_optional(const ojson& j)
{
    if (j.is_null())
        return std::nullopt;
    return j.get<double>();
}

ojson topology_payload(const Topology& t)
{
    ojson p;
    p["scenario"] = t.scenario;
    p["object_kind"] = t.object_kind;
    p["point_count"] = t.point_count;
    p["edges"] = t.edges;
    p["triangles"] = t.triangles;
    ojson obstacles = ojson::array();
    for (const auto& o : t.obstacles) {
        ojson j;
        j["kind"] = o.kind;
        if (o.kind == "polygon")
            j["plane"] = o.plane;
        ojson verts = ojson::array();
        for (const auto& v : o.vertices) {
            ojson row = ojson::array();
            for (double x : v)
                row.push_back(r6(x));
            verts.push_back(row);
        }
        j["vertices"] = verts;
        if (o.kind == "mesh")
            j["faces"] = o.faces;
        obstacles.push_back(j);
    }
    p["obstacles"] = obstacles;
    p["agents"] = t.agents;
    p["leader"] = t.leader;
    p["d_offset"] = r6(t.d_offset);
    p["leader_speed_max"] = r6(t.leader_speed_max);
    p["tick_rate"] = r6(t.tick_rate);
    return p;
}

char hex_digit(unsigned v) { return "0123456789abcdef"[v & 0xf]; }

}  // namespace

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed)
{
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Topology make_topology(const harness::Simulation& sim)
{
    const auto& cfg = sim.config();
    Topology t;
    t.scenario = cfg.name;
    t.object_kind = sim.world().is_rod() ? "rod" : "cloth";
    const auto geometry = sim.object_geometry();
    t.point_count = geometry.points.size();
    t.edges = geometry.edges;
    if (sim.world().is_cloth())
        t.triangles = sim.world().cloth().triangles;
    for (const auto& o : cfg.obstacles) {
        ObstacleShape s;
        if (const auto* poly = std::get_if<geometry::PlanarObstacle>(&o)) {
            s.kind = "polygon";
            s.plane = geometry::to_string(poly->plane);
            for (const auto& v : poly->vertices)
                s.vertices.push_back({v.x(), v.y()});
        } else {
            const auto& mesh = std::get<geometry::MeshObstacle>(o);
            s.kind = "mesh";
            for (const auto& v : mesh.vertices)
                s.vertices.push_back({v.x(), v.y(), v.z()});
            s.faces = mesh.faces;
        }
        t.obstacles.push_back(std::move(s));
    }
    for (const auto& a : cfg.agents)
        t.agents.push_back(a.id);
    t.leader = cfg.leader.id;
    t.d_offset = cfg.controller.d_offset;
    t.leader_speed_max = cfg.leader.speed_max;
    t.tick_rate = cfg.run.tick_rate;

    const std::uint64_t h = fnv1a(topology_payload(t).dump());
    t.hash.resize(16);
    for (int k = 0; k < 16; ++k)
        t.hash[static_cast<std::size_t>(k)] = hex_digit(static_cast<unsigned>(h >> (60 - 4 * k)));
    return t;
}

StateFrame make_frame(const harness::Simulation& sim, const std::string& topology_hash, bool paused)
{
    const harness::TickLog& log = sim.last();
    StateFrame f;
    f.tick = log.tick;
    f.t = log.t;
    f.object_kind = sim.world().is_rod() ? "rod" : "cloth";
    f.topology_hash = topology_hash;
    f.paused = paused;
    f.positions = sim.object_geometry().points;
    for (const auto& a : log.agents) {
        AgentState s;
        s.id = a.id;
        s.pos = a.position;
        s.u = a.u;
        s.status = control::to_string(a.status);
        s.active_labels = a.active_labels;
        s.error_norm = a.error_norm;
        f.agents.push_back(std::move(s));
    }
    f.leader_pos = log.leader_pos;
    if (std::isfinite(log.h_coll))
        f.h_collision = log.h_coll;
    for (const auto& p : log.pairs) {
        if (p.h_stretch)
            f.h_stretch[pair_key(p)] = *p.h_stretch;
        if (p.h_prox)
            f.h_proximity[pair_key(p)] = *p.h_prox;
    }
    if (std::isfinite(log.min_distance)) {
        f.min_distance = log.min_distance;
        f.object_witness = log.object_witness;
        f.obstacle_witness = log.obstacle_witness;
    }
    return f;
}

std::string encode(const Topology& t)
{
    ojson p = topology_payload(t);
    p["hash"] = t.hash;
    return message("topology", std::move(p)).dump();
}

std::string encode(const StateFrame& f)
{
    ojson p;
    p["tick"] = f.tick;
    p["t"] = r6(f.t);
    p["object_kind"] = f.object_kind;
    p["topology_hash"] = f.topology_hash;
    p["paused"] = f.paused;
    ojson positions = ojson::array();
    for (const auto& x : f.positions)
        positions.push_back(vec(x));
    p["positions"] = positions;
    ojson agents = ojson::array();
    for (const auto& a : f.agents) {
        ojson j;
        j["id"] = a.id;
        j["pos"] = vec(a.pos);
        j["u"] = vec(a.u);
        j["status"] = a.status;
        j["active_labels"] = a.active_labels;
        j["error_norm"] = r6(a.error_norm);
        agents.push_back(j);
    }
    p["agents"] = agents;
    p["leader_pos"] = vec(f.leader_pos);
    ojson h;
    h["collision"] = optional_number(f.h_collision);
    h["stretch"] = ojson::object();
    for (const auto& [k, v] : f.h_stretch)
        h["stretch"][k] = r6(v);
    h["proximity"] = ojson::object();
    for (const auto& [k, v] : f.h_proximity)
        h["proximity"][k] = r6(v);
    p["h_values"] = h;
    p["min_distance"] = optional_number(f.min_distance);
    p["witnesses"]["object"] = vec(f.object_witness);
    p["witnesses"]["obstacle"] = vec(f.obstacle_witness);
    return message("frame", std::move(p)).dump();
}

std::string message_type(const std::string& text)
{
    const ojson m = parse(text);
    if (!m.is_object() || !m.contains("type") || !m["type"].is_string() || !m.contains("payload"))
        throw ProtocolError("message needs string 'type' and a 'payload'");
    return m["type"].get<std::string>();
}

Topology decode_topology(const std::string& text)
{
    const ojson m = parse(text);
    const ojson& p = payload_of(m, "topology");
    try {
        Topology t;
        t.scenario = p.at("scenario").get<std::string>();
        t.object_kind = p.at("object_kind").get<std::string>();
        t.point_count = p.at("point_count").get<std::size_t>();
        t.edges = p.at("edges").get<std::vector<std::array<std::size_t, 2>>>();
        t.triangles = p.at("triangles").get<std::vector<std::array<std::size_t, 3>>>();
        for (const auto& o : p.at("obstacles")) {
            ObstacleShape s;
            s.kind = o.at("kind").get<std::string>();
            if (s.kind == "polygon")
                s.plane = o.at("plane").get<std::string>();
            s.vertices = o.at("vertices").get<std::vector<std::vector<double>>>();
            if (s.kind == "mesh")
                s.faces = o.at("faces").get<std::vector<std::array<std::size_t, 3>>>();
            t.obstacles.push_back(std::move(s));
        }
        t.agents = p.at("agents").get<std::vector<AgentId>>();
        t.leader = p.at("leader").get<std::string>();
        t.d_offset = p.at("d_offset").get<double>();
        t.leader_speed_max = p.at("leader_speed_max").get<double>();
        t.tick_rate = p.at("tick_rate").get<double>();
        t.hash = p.at("hash").get<std::string>();
        return t;
    } catch (const ojson::exception& e) {
        throw ProtocolError(std::string("bad topology payload: ") + e.what());
    }
}

StateFrame decode_frame(const std::string& text)
{
    const ojson m = parse(text);
    const ojson& p = payload_of(m, "frame");
    try {
        StateFrame f;
        f.tick = p.at("tick").get<std::size_t>();
        f.t = p.at("t").get<double>();
        f.object_kind = p.at("object_kind").get<std::string>();
        f.topology_hash = p.at("topology_hash").get<std::string>();
        f.paused = p.at("paused").get<bool>();
        for (const auto& x : p.at("positions"))
            f.positions.push_back(to_vec(x));
        for (const auto& j : p.at("agents")) {
            AgentState a;
            a.id = j.at("id").get<std::string>();
            a.pos = to_vec(j.at("pos"));
            a.u = to_vec(j.at("u"));
            a.status = j.at("status").get<std::string>();
            a.active_labels = j.at("active_labels").get<std::vector<std::string>>();
            a.error_norm = j.at("error_norm").get<double>();
            f.agents.push_back(std::move(a));
        }
        f.leader_pos = to_vec(p.at("leader_pos"));
        const ojson& h = p.at("h_values");
        f.h_collision = to_optional(h.at("collision"));
        for (const auto& [k, v] : h.at("stretch").items())
            f.h_stretch[k] = v.get<double>();
        for (const auto& [k, v] : h.at("proximity").items())
            f.h_proximity[k] = v.get<double>();
        f.min_distance = to_optional(p.at("min_distance"));
        f.object_witness = to_vec(p.at("witnesses").at("object"));
        f.obstacle_witness = to_vec(p.at("witnesses").at("obstacle"));
        return f;
    } catch (const ojson::exception& e) {
        throw ProtocolError(std::string("bad frame payload: ") + e.what());
    }
}

}  // namespace pbdcbf::bridge
