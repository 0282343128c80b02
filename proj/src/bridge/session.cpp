#include "pbdcbf/bridge/session.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>
#include <spdlog/spdlog.h>

namespace pbdcbf::bridge {

namespace {

using ojson = nlohmann::ordered_json;

const std::pair<CommandKind, const char*> kKindNames[] = {
    {CommandKind::leader_velocity, "leader_velocity"},
    {CommandKind::pause, "pause"},
    {CommandKind::resume, "resume"},
    {CommandKind::reset, "reset"},
    {CommandKind::select_scenario, "select_scenario"},
};

}  // namespace

std::string to_string(CommandKind kind)
{
    for (const auto& [k, name] : kKindNames)
        if (k == kind)
            return name;
    return "unknown";
}

Command parse_command(const std::string& text)
{
    ojson m;
    try {
        m = ojson::parse(text);
    } catch (const ojson::exception& e) {
        throw ProtocolError(std::string("malformed message: ") + e.what());
    }
    if (!m.is_object() || m.value("type", ojson()) != "command" || !m.contains("payload") || !m["payload"].is_object())
        throw ProtocolError("expected {\"type\": \"command\", \"payload\": {...}}");
    const ojson& p = m["payload"];

    Command c;
    if (p.contains("id")) {
        const ojson& id = p["id"];
        c.id = id.is_string() ? id.get<std::string>() : id.dump();
    }
    if (!p.contains("kind") || !p["kind"].is_string())
        throw ProtocolError("command needs a string 'kind'");
    const std::string kind = p["kind"].get<std::string>();
    bool known = false;
    for (const auto& [k, name] : kKindNames)
        if (kind == name) {
            c.kind = k;
            known = true;
        }
    if (!known)
        throw ProtocolError("unknown command kind '" + kind + "'");

    if (c.kind == CommandKind::leader_velocity) {
        const auto it = p.find("velocity");
        if (it == p.end() || !it->is_array() || it->size() != 3 ||
            !std::all_of(it->begin(), it->end(), [](const ojson& e) { return e.is_number(); }))
            throw ProtocolError("leader_velocity needs 'velocity': [vx, vy, vz]");
        c.velocity = Vec3((*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>());
        if (!c.velocity.allFinite())
            throw ProtocolError("velocity must be finite");
    }
    if (c.kind == CommandKind::select_scenario) {
        if (!p.contains("name") || !p["name"].is_string())
            throw ProtocolError("select_scenario needs a string 'name'");
        c.scenario = p["name"].get<std::string>();
    }
    return c;
}

std::string encode_command(const Command& c)
{
    ojson p;
    p["kind"] = to_string(c.kind);
    if (c.kind == CommandKind::leader_velocity)
        p["velocity"] = {c.velocity.x(), c.velocity.y(), c.velocity.z()};
    if (c.kind == CommandKind::select_scenario)
        p["name"] = c.scenario;
    if (!c.id.empty())
        p["id"] = c.id;
    ojson m;
    m["type"] = "command";
    m["payload"] = p;
    return m.dump();
}

std::string encode(const Reply& r)
{
    if (!r.ok)
        return encode_error(r.error, r.command.id);
    ojson p;
    p["kind"] = to_string(r.command.kind);
    p["id"] = r.command.id.empty() ? ojson(nullptr) : ojson(r.command.id);
    p["tick"] = r.tick;
    if (r.applied_velocity)
        p["velocity"] = {r.applied_velocity->x(), r.applied_velocity->y(), r.applied_velocity->z()};
    if (r.command.kind == CommandKind::select_scenario)
        p["name"] = r.command.scenario;
    ojson m;
    m["type"] = "ack";
    m["payload"] = p;
    return m.dump();
}

std::string encode_error(const std::string& message, const std::string& id)
{
    ojson p;
    p["message"] = message;
    p["id"] = id.empty() ? ojson(nullptr) : ojson(id);
    ojson m;
    m["type"] = "error";
    m["payload"] = p;
    return m.dump();
}

Session::Session(harness::ScenarioConfig config, std::filesystem::path scenario_dir,
                 harness::SimulationOptions options)
    : scenario_dir_(std::move(scenario_dir)), options_(options)
{
    rebuild(std::move(config));
}

void Session::rebuild(harness::ScenarioConfig config)
{
    auto sim = std::make_unique<harness::Simulation>(config, options_);
    config_ = std::move(config);
    sim_ = std::move(sim);
    topology_ = make_topology(*sim_);
    ++generation_;
}

void Session::submit(Command command)
{
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(std::move(command));
}

std::vector<Reply> Session::apply_pending()
{
    std::deque<Command> pending;
    {
        std::lock_guard lock(queue_mutex_);
        pending.swap(queue_);
    }
    std::vector<Reply> replies;
    for (const auto& c : pending)
        replies.push_back(apply(c));
    return replies;
}

Reply Session::apply(const Command& c)
{
    Reply r;
    r.command = c;
    try {
        switch (c.kind) {
        case CommandKind::leader_velocity:
            r.applied_velocity = sim_->set_leader_velocity(c.velocity);
            break;
        case CommandKind::pause:
            paused_ = true;
            break;
        case CommandKind::resume:
            paused_ = false;
            break;
        case CommandKind::reset:
            rebuild(config_);
            r.tick = 0;
            return r;
        case CommandKind::select_scenario: {
            if (c.scenario.empty() || c.scenario.find_first_of("/\\") != std::string::npos || c.scenario[0] == '.')
                throw std::invalid_argument("scenario name must be a bare file name");
            rebuild(harness::load_scenario(scenario_dir_ / (c.scenario + ".json")));
            r.tick = 0;
            return r;
        }
        }
    } catch (const std::exception& e) {
        spdlog::warn("command {} rejected: {}", to_string(c.kind), e.what());
        r.ok = false;
        r.error = e.what();
    }
    r.tick = sim_->tick() + 1;
    return r;
}

bool Session::step()
{
    if (paused_)
        return false;
    sim_->advance();
    return true;
}

}  // namespace pbdcbf::bridge
