#include "pbdcbf/harness/output.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace pbdcbf::harness {

namespace {

using ojson = nlohmann::ordered_json;

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string quoted(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

void vec_columns(std::string& line, const std::string& prefix)
{
    for (const char* axis : {"x", "y", "z"})
        line += "," + prefix + axis;
}

void vec_values(std::string& line, const Vec3& v)
{
    for (int k = 0; k < 3; ++k)
        line += "," + num(v[k]);
}

std::string join(const std::vector<std::string>& items, const std::string& sep)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i)
        out += (i ? sep : "") + items[i];
    return out;
}

ojson vec(const Vec3& v) { return ojson::array({v.x(), v.y(), v.z()}); }

// JSON has no infinity; unbounded values are written as null.
ojson finite_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

}  // namespace

std::string csv_header(const ScenarioConfig& cfg)
{
    std::string line = "tick,t";
    vec_columns(line, "leader_");
    line += ",min_distance,h_coll,obstacle";
    vec_columns(line, "object_witness_");
    vec_columns(line, "obstacle_witness_");
    for (const auto& a : cfg.agents) {
        vec_columns(line, a.id + "_");
        vec_columns(line, a.id + "_unom_");
        vec_columns(line, a.id + "_u_");
        line += "," + a.id + "_status," + a.id + "_active," + a.id + "_error";
    }
    std::vector<AgentId> everyone{cfg.leader.id};
    for (const auto& a : cfg.agents)
        everyone.push_back(a.id);
    for (std::size_t i = 0; i < everyone.size(); ++i)
        for (std::size_t j = i + 1; j < everyone.size(); ++j) {
            const std::string pair = everyone[i] + "_" + everyone[j];
            line += ",dist_" + pair + ",h_stretch_" + pair + ",h_prox_" + pair;
        }
    return line + "\n";
}

std::string csv_row(const TickLog& t)
{
    std::string line = std::to_string(t.tick) + "," + num(t.t);
    vec_values(line, t.leader_pos);
    line += "," + num(t.min_distance) + "," + num(t.h_coll) + "," + std::to_string(t.obstacle_index);
    vec_values(line, t.object_witness);
    vec_values(line, t.obstacle_witness);
    for (const auto& a : t.agents) {
        vec_values(line, a.position);
        vec_values(line, a.u_nom);
        vec_values(line, a.u);
        line += "," + control::to_string(a.status) + "," + quoted(join(a.active_labels, ";")) + "," + num(a.error_norm);
    }
    for (const auto& p : t.pairs) {
        line += "," + num(p.distance);
        line += "," + (p.h_stretch ? num(*p.h_stretch) : std::string());
        line += "," + (p.h_prox ? num(*p.h_prox) : std::string());
    }
    return line + "\n";
}

std::string jsonl_row(const TickLog& t)
{
    ojson j;
    j["tick"] = t.tick;
    j["t"] = t.t;
    j["leader_pos"] = vec(t.leader_pos);
    j["min_distance"] = finite_or_null(t.min_distance);
    j["h_coll"] = finite_or_null(t.h_coll);
    j["obstacle_index"] = t.obstacle_index;
    j["witnesses"] = ojson::array({vec(t.object_witness), vec(t.obstacle_witness)});
    ojson agents = ojson::array();
    for (const auto& a : t.agents) {
        ojson ja;
        ja["id"] = a.id;
        ja["pos"] = vec(a.position);
        ja["u_nom"] = vec(a.u_nom);
        ja["u"] = vec(a.u);
        ja["status"] = control::to_string(a.status);
        ja["active_labels"] = a.active_labels;
        ja["solve_time"] = a.solve_time;
        ja["error_norm"] = a.error_norm;
        ja["h_coll"] = a.h_coll;
        ja["dropped_collision_rows"] = a.dropped_collision_rows;
        agents.push_back(ja);
    }
    j["agents"] = agents;
    ojson pairs = ojson::array();
    for (const auto& p : t.pairs) {
        ojson jp;
        jp["agents"] = ojson::array({p.first, p.second});
        jp["distance"] = p.distance;
        jp["h_stretch"] = p.h_stretch ? ojson(*p.h_stretch) : ojson(nullptr);
        jp["h_prox"] = p.h_prox ? ojson(*p.h_prox) : ojson(nullptr);
        pairs.push_back(jp);
    }
    j["pairs"] = pairs;
    j["sim_step_seconds"] = t.sim_step_seconds;
    j["sim_substep_seconds"] = t.sim_substep_seconds;
    j["replica_step_seconds"] = t.replica_step_seconds;
    return j.dump() + "\n";
}

std::string metrics_json(const Metrics& m, const RunSummary& s)
{
    ojson j;
    j["scenario"] = s.scenario;
    j["completed"] = s.completed;
    j["error"] = s.error ? ojson(*s.error) : ojson(nullptr);
    j["ticks"] = m.ticks;
    j["rms_tracking_error"] = m.rms_tracking_error;
    j["max_tracking_error"] = m.max_tracking_error;
    j["min_h_coll"] = finite_or_null(m.min_h_coll);
    j["min_distance"] = finite_or_null(m.min_distance);
    j["max_pair_distance"] = finite_or_null(m.max_pair_distance);
    j["min_pair_distance"] = finite_or_null(m.min_pair_distance);
    j["max_stretch_excess"] = finite_or_null(m.max_stretch_excess);
    j["min_h_stretch"] = finite_or_null(m.min_h_stretch);
    j["min_h_prox"] = finite_or_null(m.min_h_prox);
    j["violation_ticks"] = m.violation_ticks;
    j["infeasible_solves"] = m.infeasible_solves;
    j["degenerate_solves"] = m.degenerate_solves;
    j["dropped_collision_rows"] = m.dropped_collision_rows;
    ojson timing;
    timing["mean_solve_time_s"] = m.mean_solve_time;
    timing["max_solve_time_s"] = m.max_solve_time;
    timing["mean_sim_step_time_s"] = m.mean_sim_step_time;
    timing["mean_sim_substep_time_s"] = m.mean_sim_substep_time;
    timing["mean_replica_step_time_s"] = m.mean_replica_step_time;
    timing["substeps_per_tick"] = s.substeps_per_tick;
    timing["bodies"] = s.bodies;
    timing["replicas"] = s.replicas;
    timing["wall_seconds"] = s.wall_seconds;
    j["timing"] = timing;
    return j.dump(2) + "\n";
}

LogWriter::LogWriter(const std::filesystem::path& dir, const ScenarioConfig& config) : dir_(dir)
{
    std::filesystem::create_directories(dir_);
    std::ofstream echo(dir_ / "config.echo");
    echo << to_json_text(config);
    csv_.open(dir_ / "ticks.csv");
    jsonl_.open(dir_ / "ticks.jsonl");
    if (!echo || !csv_ || !jsonl_)
        throw std::runtime_error("cannot write logs to " + dir_.string());
    csv_ << csv_header(config);
}

void LogWriter::write(const TickLog& tick)
{
    csv_ << csv_row(tick);
    jsonl_ << jsonl_row(tick);
    csv_.flush();
    jsonl_.flush();
}

void LogWriter::finish(const std::optional<Metrics>& metrics, const RunSummary& summary)
{
    csv_.close();
    jsonl_.close();
    std::ofstream out(dir_ / "metrics.json");
    if (metrics) {
        out << metrics_json(*metrics, summary);
    } else {
        ojson j;
        j["scenario"] = summary.scenario;
        j["completed"] = false;
        j["error"] = summary.error ? ojson(*summary.error) : ojson(nullptr);
        j["ticks"] = 0;
        out << j.dump(2) << "\n";
    }
}

}  // namespace pbdcbf::harness
