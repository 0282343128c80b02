#include "pbdcbf/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pbdcbf/geometry/mesh_io.hpp"

namespace pbdcbf::harness {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::size_t ScenarioConfig::body_count() const
{
    if (const auto* rod = std::get_if<pbd::RodSpec>(&object))
        return static_cast<std::size_t>(std::max(rod->segment_count, 0));
    const auto& cloth = std::get<pbd::ClothSpec>(object);
    const auto n = static_cast<std::size_t>(std::max(cloth.resolution, 0));
    return n * n;
}

namespace {

std::string join_problems(const std::string& source, const std::vector<std::string>& problems)
{
    std::string msg = source + ": invalid scenario";
    for (const auto& p : problems)
        msg += "\n  " + p;
    return msg;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, std::vector<std::string> p)
    : std::runtime_error(join_problems(source, p)), problems(std::move(p))
{
}

namespace {

/// Walks one JSON object, recording type errors and rejecting keys nobody read.
class Reader {
public:
    Reader(const json& node, std::string path, std::vector<std::string>& errors)
        : node_(node), path_(std::move(path)), errors_(errors)
    {
        ok_ = node_.is_object();
        if (!ok_)
            error(path_, "expected an object");
    }

    ~Reader()
    {
        if (!ok_)
            return;
        for (auto it = node_.begin(); it != node_.end(); ++it)
            if (!seen_.count(it.key()))
                error(key_path(it.key()), "unknown key");
    }

    bool ok() const { return ok_; }
    bool has(const std::string& key) const { return ok_ && node_.contains(key); }

    const json* child(const std::string& key, bool required = false)
    {
        if (!ok_)
            return nullptr;
        seen_.insert(key);
        const auto it = node_.find(key);
        if (it == node_.end()) {
            if (required)
                error(key_path(key), "missing required key");
            return nullptr;
        }
        return &*it;
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void number(const std::string& key, double& out, bool required = false)
    {
        if (const json* j = child(key, required))
            read_number(*j, key_path(key), out);
    }

    void integer(const std::string& key, int& out, bool required = false)
    {
        if (const json* j = child(key, required)) {
            if (j->is_number_integer())
                out = j->get<int>();
            else
                error(key_path(key), "expected an integer");
        }
    }

    void index(const std::string& key, std::size_t& out, bool required = false)
    {
        if (const json* j = child(key, required)) {
            if (j->is_number_unsigned())
                out = j->get<std::size_t>();
            else
                error(key_path(key), "expected a non-negative integer");
        }
    }

    void seed(const std::string& key, std::uint64_t& out)
    {
        if (const json* j = child(key)) {
            if (j->is_number_unsigned())
                out = j->get<std::uint64_t>();
            else
                error(key_path(key), "expected a non-negative integer");
        }
    }

    void boolean(const std::string& key, bool& out)
    {
        if (const json* j = child(key)) {
            if (j->is_boolean())
                out = j->get<bool>();
            else
                error(key_path(key), "expected true or false");
        }
    }

    void string(const std::string& key, std::string& out, bool required = false)
    {
        if (const json* j = child(key, required)) {
            if (j->is_string())
                out = j->get<std::string>();
            else
                error(key_path(key), "expected a string");
        }
    }

    void vec3(const std::string& key, Vec3& out, bool required = false)
    {
        if (const json* j = child(key, required))
            read_vec(*j, key_path(key), out);
    }

    void error(const std::string& path, const std::string& msg) { errors_.push_back(path + ": " + msg); }

    bool read_number(const json& j, const std::string& path, double& out)
    {
        if (!j.is_number()) {
            error(path, "expected a number");
            return false;
        }
        out = j.get<double>();
        return true;
    }

    template <int N>
    bool read_vec(const json& j, const std::string& path, Eigen::Matrix<double, N, 1>& out)
    {
        if (!j.is_array() || j.size() != static_cast<std::size_t>(N) ||
            !std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_number(); })) {
            error(path, "expected an array of " + std::to_string(N) + " numbers");
            return false;
        }
        for (int k = 0; k < N; ++k)
            out[k] = j[static_cast<std::size_t>(k)].get<double>();
        return true;
    }

    std::vector<std::string>& errors() { return errors_; }

private:
    const json& node_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> seen_;
    bool ok_ = false;
};

std::string item_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

ObjectConfig parse_object(const json& j, std::vector<std::string>& errors)
{
    Reader r(j, "object", errors);
    std::string type;
    r.string("type", type, true);
    if (type == "rod") {
        pbd::RodSpec s;
        r.number("length", s.length, true);
        r.integer("segment_count", s.segment_count, true);
        r.vec3("start", s.start);
        r.vec3("direction", s.direction);
        r.number("radius", s.radius);
        r.number("linear_density", s.linear_density);
        r.number("youngs_modulus", s.material.youngs_modulus);
        r.number("torsion_modulus", s.material.torsion_modulus);
        r.number("zero_stretch_stiffness", s.material.zero_stretch_stiffness);
        return s;
    }
    if (type == "cloth") {
        pbd::ClothSpec s;
        if (const json* size = r.child("size", true)) {
            Vec2 uv;
            if (r.read_vec(*size, "object.size", uv)) {
                s.size_u = uv.x();
                s.size_v = uv.y();
            }
        }
        r.integer("resolution", s.resolution, true);
        r.vec3("origin", s.origin);
        r.vec3("axis_u", s.axis_u);
        r.vec3("axis_v", s.axis_v);
        r.number("areal_density", s.areal_density);
        r.number("stretching_compliance", s.stretching_compliance);
        r.number("bending_compliance", s.bending_compliance);
        return s;
    }
    if (r.ok() && !type.empty())
        r.error("object.type", "expected \"rod\" or \"cloth\", got \"" + type + "\"");
    return pbd::RodSpec{};
}

geometry::MeshObstacle box_mesh(const Vec3& center, const Vec3& size)
{
    geometry::MeshObstacle m;
    for (int k = 0; k < 8; ++k) {
        const Vec3 sign((k & 1) ? 0.5 : -0.5, (k & 2) ? 0.5 : -0.5, (k & 4) ? 0.5 : -0.5);
        m.vertices.push_back(center + sign.cwiseProduct(size));
    }
    m.faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
               {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
    m.convex = true;
    return m;
}

std::optional<geometry::Obstacle> parse_obstacle(const json& j, const std::string& path,
                                                 const std::filesystem::path& base_dir,
                                                 std::vector<std::string>& errors)
{
    Reader r(j, path, errors);
    std::string type;
    r.string("type", type, true);
    if (type == "polygon") {
        geometry::PlanarObstacle poly;
        std::string plane = "yz";
        r.string("plane", plane);
        try {
            poly.plane = geometry::parse_plane(plane);
        } catch (const std::invalid_argument& e) {
            r.error(r.key_path("plane"), e.what());
        }
        if (const json* v = r.child("vertices", true)) {
            if (!v->is_array()) {
                r.error(r.key_path("vertices"), "expected an array of [u, v] pairs");
                return std::nullopt;
            }
            for (std::size_t i = 0; i < v->size(); ++i) {
                Vec2 p;
                if (r.read_vec((*v)[i], item_path(r.key_path("vertices"), i), p))
                    poly.vertices.push_back(p);
            }
        }
        return poly;
    }
    if (type == "box") {
        Vec3 center = Vec3::Zero();
        Vec3 size = Vec3::Ones();
        r.vec3("center", center, true);
        r.vec3("size", size, true);
        if (!(size.array() > 0.0).all()) {
            r.error(r.key_path("size"), "box extents must be positive");
            return std::nullopt;
        }
        return box_mesh(center, size);
    }
    if (type == "mesh") {
        geometry::MeshObstacle mesh;
        bool convex = false;
        r.boolean("convex", convex);
        std::string file;
        r.string("file", file);
        if (!file.empty()) {
            if (r.has("vertices") || r.has("faces")) {
                r.child("vertices");
                r.child("faces");
                r.error(path, "give either \"file\" or inline \"vertices\"/\"faces\", not both");
            }
            try {
                mesh = geometry::load_mesh(base_dir / file);
            } catch (const std::exception& e) {
                r.error(r.key_path("file"), e.what());
                return std::nullopt;
            }
        } else {
            if (const json* v = r.child("vertices", true)) {
                for (std::size_t i = 0; v->is_array() && i < v->size(); ++i) {
                    Vec3 p;
                    if (r.read_vec((*v)[i], item_path(r.key_path("vertices"), i), p))
                        mesh.vertices.push_back(p);
                }
                if (!v->is_array())
                    r.error(r.key_path("vertices"), "expected an array of [x, y, z] triples");
            }
            if (const json* f = r.child("faces", true)) {
                bool good = f->is_array();
                for (std::size_t i = 0; good && i < f->size(); ++i) {
                    const json& face = (*f)[i];
                    if (!face.is_array() || face.size() != 3 ||
                        !std::all_of(face.begin(), face.end(), [](const json& e) { return e.is_number_unsigned(); })) {
                        r.error(item_path(r.key_path("faces"), i), "expected three non-negative vertex indices");
                        continue;
                    }
                    mesh.faces.push_back({face[0].get<std::size_t>(), face[1].get<std::size_t>(),
                                          face[2].get<std::size_t>()});
                }
                if (!good)
                    r.error(r.key_path("faces"), "expected an array of index triples");
            }
        }
        mesh.convex = convex;
        return mesh;
    }
    if (r.ok() && !type.empty())
        r.error(r.key_path("type"), "expected \"polygon\", \"mesh\" or \"box\", got \"" + type + "\"");
    return std::nullopt;
}

control::PiecewiseLinearAlpha parse_alpha(const json& j, const std::string& path, std::vector<std::string>& errors)
{
    control::PiecewiseLinearAlpha a;
    Reader r(j, path, errors);
    r.number("slope_pos", a.slope_pos);
    r.number("slope_neg", a.slope_neg);
    return a;
}

bool parse_limits(Reader& r, control::PairLimits& l)
{
    const std::size_t before = r.errors().size();
    r.number("d_min", l.d_min, true);
    r.number("d_max", l.d_max, true);
    return r.errors().size() == before;
}

void parse_controller(const json& j, ScenarioConfig& cfg, std::vector<std::string>& errors)
{
    auto& p = cfg.controller;
    Reader r(j, "controller", errors);
    r.number("k_p", p.k_p);
    if (const json* g = r.child("gamma")) {
        if (g->is_number())
            p.gamma = Vec3::Constant(g->get<double>());
        else
            r.read_vec(*g, "controller.gamma", p.gamma);
    }
    r.number("u_max", p.u_max);
    r.number("d_offset", p.d_offset);
    r.number("eps_j", p.eps_j);
    r.number("neighbor_smoothing", p.smoothing);
    if (const json* a = r.child("alpha")) {
        Reader ar(*a, "controller.alpha", errors);
        if (const json* c = ar.child("collision"))
            p.alpha_coll = parse_alpha(*c, "controller.alpha.collision", errors);
        if (const json* c = ar.child("stretch"))
            p.alpha_stretch = parse_alpha(*c, "controller.alpha.stretch", errors);
        if (const json* c = ar.child("proximity"))
            p.alpha_prox = parse_alpha(*c, "controller.alpha.proximity", errors);
    }

    std::vector<AgentId> everyone{cfg.leader.id};
    for (const auto& a : cfg.agents)
        everyone.push_back(a.id);

    if (const json* list = r.child("pair_limits")) {
        if (!list->is_array())
            r.error("controller.pair_limits", "expected an array");
        for (std::size_t i = 0; list->is_array() && i < list->size(); ++i) {
            const std::string path = item_path("controller.pair_limits", i);
            Reader pr((*list)[i], path, errors);
            const json* ids = pr.child("agents", true);
            control::PairLimits l;
            const bool good = parse_limits(pr, l);
            if (!ids)
                continue;
            if (!ids->is_array() || ids->size() != 2 || !(*ids)[0].is_string() || !(*ids)[1].is_string()) {
                pr.error(path + ".agents", "expected two agent ids");
                continue;
            }
            const AgentId a = (*ids)[0].get<std::string>();
            const AgentId b = (*ids)[1].get<std::string>();
            for (const auto& id : {a, b})
                if (std::find(everyone.begin(), everyone.end(), id) == everyone.end())
                    pr.error(path + ".agents", "unknown agent '" + id + "'");
            if (a == b)
                pr.error(path + ".agents", "a pair needs two different agents");
            if (p.limits(a, b))
                pr.error(path + ".agents", "duplicate limits for pair (" + a + ", " + b + ")");
            if (good)
                p.set_limits(a, b, l);
        }
    }
    if (const json* d = r.child("default_pair_limits")) {
        Reader dr(*d, "controller.default_pair_limits", errors);
        control::PairLimits l;
        if (parse_limits(dr, l))
            for (std::size_t i = 0; i < everyone.size(); ++i)
                for (std::size_t k = i + 1; k < everyone.size(); ++k)
                    if (!p.limits(everyone[i], everyone[k]))
                        p.set_limits(everyone[i], everyone[k], l);
    }
}

ScenarioConfig parse_document(const json& doc, const std::filesystem::path& base_dir, std::vector<std::string>& errors)
{
    ScenarioConfig cfg;
    Reader r(doc, "", errors);
    if (!r.ok())
        return cfg;
    r.string("name", cfg.name);

    if (const json* o = r.child("object", true))
        cfg.object = parse_object(*o, errors);

    if (const json* obs = r.child("obstacles")) {
        if (!obs->is_array())
            r.error("obstacles", "expected an array");
        for (std::size_t i = 0; obs->is_array() && i < obs->size(); ++i)
            if (auto o = parse_obstacle((*obs)[i], item_path("obstacles", i), base_dir, errors))
                cfg.obstacles.push_back(std::move(*o));
    }

    if (const json* l = r.child("leader", true)) {
        Reader lr(*l, "leader", errors);
        lr.string("id", cfg.leader.id);
        lr.index("held_body_index", cfg.leader.held_body_index, true);
        if (lr.has("initial_position")) {
            Vec3 p;
            lr.vec3("initial_position", p);
            cfg.leader.initial_position = p;
        }
        lr.number("speed_max", cfg.leader.speed_max);
        if (const json* wps = lr.child("waypoints")) {
            if (!wps->is_array())
                lr.error("leader.waypoints", "expected an array");
            for (std::size_t i = 0; wps->is_array() && i < wps->size(); ++i) {
                Reader wr((*wps)[i], item_path("leader.waypoints", i), errors);
                Waypoint w;
                wr.vec3("position", w.position, true);
                wr.number("speed", w.speed, true);
                wr.number("dwell", w.dwell);
                cfg.leader.waypoints.push_back(w);
            }
        }
    }

    if (const json* agents = r.child("agents", true)) {
        if (!agents->is_array())
            r.error("agents", "expected an array");
        for (std::size_t i = 0; agents->is_array() && i < agents->size(); ++i) {
            Reader ar((*agents)[i], item_path("agents", i), errors);
            AgentConfig a;
            ar.string("id", a.id, true);
            ar.index("held_body_index", a.held_body_index, true);
            ar.vec3("initial_position", a.initial_position, true);
            cfg.agents.push_back(a);
        }
    }

    if (const json* c = r.child("controller"))
        parse_controller(*c, cfg, errors);

    if (const json* s = r.child("sim")) {
        Reader sr(*s, "sim", errors);
        sr.integer("num_substeps", cfg.sim.num_substeps);
        sr.integer("num_steps", cfg.sim.num_steps);
        sr.integer("solver_iterations", cfg.sim.solver_iterations);
        sr.number("damping", cfg.sim.damping);
        sr.vec3("gravity", cfg.sim.gravity);
        sr.number("settle_time", cfg.sim.settle_time);
    }
    if (const json* s = r.child("jacobian")) {
        Reader jr(*s, "jacobian", errors);
        jr.number("delta", cfg.jacobian.delta);
        jr.integer("resync_interval", cfg.jacobian.resync_interval);
        jr.boolean("parallel", cfg.jacobian.parallel);
    }
    if (const json* s = r.child("run")) {
        Reader rr(*s, "run", errors);
        rr.number("duration", cfg.run.duration);
        rr.number("tick_rate", cfg.run.tick_rate);
        rr.seed("seed", cfg.run.seed);
        rr.number("observation_noise", cfg.run.observation_noise);
    }
    return cfg;
}

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::string& source,
                              const std::filesystem::path& base_dir)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // Byte offset to line:column.
        const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        std::size_t line = 1;
        std::size_t col = 1;
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        const auto pos = what.find("parse error");
        if (pos != std::string::npos)
            what = what.substr(pos);
        throw ConfigError(source, {"line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what});
    }

    std::vector<std::string> errors;
    ScenarioConfig cfg = parse_document(doc, base_dir, errors);
    if (!errors.empty())
        throw ConfigError(source, errors);
    const auto problems = validation_errors(cfg);
    if (!problems.empty())
        throw ConfigError(source, problems);
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path.string(), {"cannot open file"});
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str(), path.string(), path.parent_path());
}

std::vector<std::string> validation_errors(const ScenarioConfig& cfg)
{
    std::vector<std::string> out;
    const auto add = [&](const std::string& s) { out.push_back(s); };

    if (const auto* rod = std::get_if<pbd::RodSpec>(&cfg.object)) {
        if (rod->segment_count < 2)
            add("object.segment_count: need at least 2 segments");
        if (!(rod->length > 0.0))
            add("object.length: must be positive");
        if (!(rod->radius > 0.0) || !(rod->linear_density > 0.0))
            add("object: radius and linear_density must be positive");
        if (!(rod->direction.norm() > 0.0) || !finite(rod->start))
            add("object: start must be finite and direction non-zero");
        if (!(rod->material.youngs_modulus > 0.0) || !(rod->material.torsion_modulus > 0.0))
            add("object: moduli must be positive");
        if (!(rod->material.zero_stretch_stiffness > 0.0 && rod->material.zero_stretch_stiffness <= 1.0))
            add("object.zero_stretch_stiffness: must lie in (0, 1]");
    } else {
        const auto& cloth = std::get<pbd::ClothSpec>(cfg.object);
        if (cloth.resolution < 2)
            add("object.resolution: need at least 2 particles per side");
        if (!(cloth.size_u > 0.0) || !(cloth.size_v > 0.0))
            add("object.size: must be positive");
        if (!(cloth.axis_u.cross(cloth.axis_v).norm() > 0.0))
            add("object: axis_u and axis_v must be independent");
        if (!(cloth.areal_density > 0.0))
            add("object.areal_density: must be positive");
        if (!(cloth.stretching_compliance >= 0.0) || !(cloth.bending_compliance >= 0.0))
            add("object: compliances must be non-negative");
    }

    for (std::size_t i = 0; i < cfg.obstacles.size(); ++i) {
        try {
            geometry::validate(cfg.obstacles[i]);
        } catch (const std::invalid_argument& e) {
            add("obstacles[" + std::to_string(i) + "]: " + e.what());
        }
    }

    const std::size_t bodies = cfg.body_count();
    std::map<std::size_t, AgentId> held;
    std::set<AgentId> ids;
    const auto check_holder = [&](const AgentId& id, std::size_t index, const std::string& where) {
        if (id.empty())
            add(where + ".id: must not be empty");
        if (!ids.insert(id).second)
            add(where + ".id: duplicate agent id '" + id + "'");
        if (index >= bodies)
            add(where + ".held_body_index: " + std::to_string(index) + " out of range (object has " +
                std::to_string(bodies) + " bodies)");
        const auto [it, inserted] = held.emplace(index, id);
        if (!inserted)
            add(where + ".held_body_index: body " + std::to_string(index) + " is already held by '" + it->second +
                "'");
    };
    check_holder(cfg.leader.id, cfg.leader.held_body_index, "leader");
    for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
        check_holder(cfg.agents[i].id, cfg.agents[i].held_body_index, "agents[" + std::to_string(i) + "]");
        if (!finite(cfg.agents[i].initial_position))
            add("agents[" + std::to_string(i) + "].initial_position: must be finite");
    }
    if (cfg.agents.empty())
        add("agents: need at least one assistant");
    if (cfg.leader.initial_position && !finite(*cfg.leader.initial_position))
        add("leader.initial_position: must be finite");
    if (!(cfg.leader.speed_max > 0.0))
        add("leader.speed_max: must be positive");
    for (std::size_t i = 0; i < cfg.leader.waypoints.size(); ++i) {
        const auto& w = cfg.leader.waypoints[i];
        const std::string where = "leader.waypoints[" + std::to_string(i) + "]";
        if (!(w.speed > 0.0) || !std::isfinite(w.speed))
            add(where + ".speed: must be positive");
        if (!(w.dwell >= 0.0) || !std::isfinite(w.dwell))
            add(where + ".dwell: must be non-negative");
        if (!finite(w.position))
            add(where + ".position: must be finite");
    }

    try {
        control::validate(cfg.controller);
    } catch (const std::invalid_argument& e) {
        add(std::string("controller: ") + e.what());
    }
    for (const auto& [key, l] : cfg.controller.pair_limits)
        for (const auto& id : {key.first, key.second})
            if (!ids.count(id))
                add("controller.pair_limits: unknown agent '" + id + "' in pair (" + key.first + ", " + key.second +
                    ")");

    const double dt = cfg.run.dt();
    if (!(cfg.run.tick_rate > 0.0) || !std::isfinite(dt))
        add("run.tick_rate: must be positive");
    if (!(cfg.run.duration > 0.0))
        add("run.duration: must be positive");
    if (!(cfg.run.observation_noise >= 0.0))
        add("run.observation_noise: must be non-negative");
    if (cfg.sim.num_substeps < 1)
        add("sim.num_substeps: must be at least 1");
    if (cfg.sim.num_steps < 1)
        add("sim.num_steps: must be at least 1");
    if (cfg.sim.solver_iterations < 1)
        add("sim.solver_iterations: must be at least 1");
    if (!(cfg.sim.settle_time >= 0.0))
        add("sim.settle_time: must be non-negative");
    if (!finite(cfg.sim.gravity))
        add("sim.gravity: must be finite");
    if (cfg.sim.num_substeps >= 1 && cfg.sim.num_steps >= 1 && cfg.run.tick_rate > 0.0) {
        const double h = dt / (cfg.sim.num_steps * cfg.sim.num_substeps);
        if (!(cfg.sim.damping >= 0.0) || cfg.sim.damping * h > 1.0)
            add("sim.damping: need 0 <= damping * substep <= 1");
    }
    if (!(cfg.jacobian.delta > 0.0))
        add("jacobian.delta: must be positive");
    if (cfg.jacobian.resync_interval < 0)
        add("jacobian.resync_interval: must be non-negative");
    return out;
}

void validate(const ScenarioConfig& config)
{
    auto problems = validation_errors(config);
    if (!problems.empty())
        throw ConfigError(config.name, std::move(problems));
}

namespace {

ojson vec(const Vec3& v) { return ojson::array({v.x(), v.y(), v.z()}); }

ojson alpha_json(const control::PiecewiseLinearAlpha& a)
{
    ojson j;
    j["slope_pos"] = a.slope_pos;
    j["slope_neg"] = a.slope_neg;
    return j;
}

}  // namespace

std::string to_json_text(const ScenarioConfig& cfg)
{
    ojson doc;
    doc["name"] = cfg.name;

    ojson obj;
    if (const auto* rod = std::get_if<pbd::RodSpec>(&cfg.object)) {
        obj["type"] = "rod";
        obj["length"] = rod->length;
        obj["segment_count"] = rod->segment_count;
        obj["start"] = vec(rod->start);
        obj["direction"] = vec(rod->direction);
        obj["radius"] = rod->radius;
        obj["linear_density"] = rod->linear_density;
        obj["youngs_modulus"] = rod->material.youngs_modulus;
        obj["torsion_modulus"] = rod->material.torsion_modulus;
        obj["zero_stretch_stiffness"] = rod->material.zero_stretch_stiffness;
    } else {
        const auto& c = std::get<pbd::ClothSpec>(cfg.object);
        obj["type"] = "cloth";
        obj["size"] = ojson::array({c.size_u, c.size_v});
        obj["resolution"] = c.resolution;
        obj["origin"] = vec(c.origin);
        obj["axis_u"] = vec(c.axis_u);
        obj["axis_v"] = vec(c.axis_v);
        obj["areal_density"] = c.areal_density;
        obj["stretching_compliance"] = c.stretching_compliance;
        obj["bending_compliance"] = c.bending_compliance;
    }
    doc["object"] = obj;

    ojson obstacles = ojson::array();
    for (const auto& o : cfg.obstacles) {
        ojson j;
        if (const auto* poly = std::get_if<geometry::PlanarObstacle>(&o)) {
            j["type"] = "polygon";
            j["plane"] = geometry::to_string(poly->plane);
            ojson verts = ojson::array();
            for (const auto& v : poly->vertices)
                verts.push_back(ojson::array({v.x(), v.y()}));
            j["vertices"] = verts;
        } else {
            const auto& mesh = std::get<geometry::MeshObstacle>(o);
            j["type"] = "mesh";
            j["convex"] = mesh.convex;
            ojson verts = ojson::array();
            for (const auto& v : mesh.vertices)
                verts.push_back(vec(v));
            ojson faces = ojson::array();
            for (const auto& f : mesh.faces)
                faces.push_back(ojson::array({f[0], f[1], f[2]}));
            j["vertices"] = verts;
            j["faces"] = faces;
        }
        obstacles.push_back(j);
    }
    doc["obstacles"] = obstacles;

    ojson leader;
    leader["id"] = cfg.leader.id;
    leader["held_body_index"] = cfg.leader.held_body_index;
    if (cfg.leader.initial_position)
        leader["initial_position"] = vec(*cfg.leader.initial_position);
    leader["speed_max"] = cfg.leader.speed_max;
    ojson wps = ojson::array();
    for (const auto& w : cfg.leader.waypoints) {
        ojson j;
        j["position"] = vec(w.position);
        j["speed"] = w.speed;
        j["dwell"] = w.dwell;
        wps.push_back(j);
    }
    leader["waypoints"] = wps;
    doc["leader"] = leader;

    ojson agents = ojson::array();
    for (const auto& a : cfg.agents) {
        ojson j;
        j["id"] = a.id;
        j["held_body_index"] = a.held_body_index;
        j["initial_position"] = vec(a.initial_position);
        agents.push_back(j);
    }
    doc["agents"] = agents;

    const auto& p = cfg.controller;
    ojson ctrl;
    ctrl["k_p"] = p.k_p;
    ctrl["gamma"] = vec(p.gamma);
    ctrl["u_max"] = p.u_max;
    ctrl["d_offset"] = p.d_offset;
    ctrl["eps_j"] = p.eps_j;
    ctrl["neighbor_smoothing"] = p.smoothing;
    ctrl["alpha"]["collision"] = alpha_json(p.alpha_coll);
    ctrl["alpha"]["stretch"] = alpha_json(p.alpha_stretch);
    ctrl["alpha"]["proximity"] = alpha_json(p.alpha_prox);
    ojson limits = ojson::array();
    for (const auto& [key, l] : p.pair_limits) {
        ojson j;
        j["agents"] = ojson::array({key.first, key.second});
        j["d_min"] = l.d_min;
        j["d_max"] = l.d_max;
        limits.push_back(j);
    }
    ctrl["pair_limits"] = limits;
    doc["controller"] = ctrl;

    ojson sim;
    sim["num_substeps"] = cfg.sim.num_substeps;
    sim["num_steps"] = cfg.sim.num_steps;
    sim["solver_iterations"] = cfg.sim.solver_iterations;
    sim["damping"] = cfg.sim.damping;
    sim["gravity"] = vec(cfg.sim.gravity);
    sim["settle_time"] = cfg.sim.settle_time;
    doc["sim"] = sim;

    ojson jac;
    jac["delta"] = cfg.jacobian.delta;
    jac["resync_interval"] = cfg.jacobian.resync_interval;
    jac["parallel"] = cfg.jacobian.parallel;
    doc["jacobian"] = jac;

    ojson run;
    run["duration"] = cfg.run.duration;
    run["tick_rate"] = cfg.run.tick_rate;
    run["seed"] = cfg.run.seed;
    run["observation_noise"] = cfg.run.observation_noise;
    doc["run"] = run;

    return doc.dump(2) + "\n";
}

}  // namespace pbdcbf::harness
