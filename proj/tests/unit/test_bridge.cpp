#include <doctest.h>

#include <chrono>
#include <cmath>
#include <limits>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include "pbdcbf/bridge/server.hpp"

using namespace pbdcbf;
using namespace pbdcbf::bridge;
using json = nlohmann::json;

namespace {

const std::filesystem::path kScenarios = PBDCBF_SCENARIO_DIR;

harness::ScenarioConfig small_rope()
{
    harness::ScenarioConfig c;
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
    c.leader.initial_position = Vec3(0, -0.25, 1.0);
    c.agents.push_back({"a1", 9, Vec3(0, 0.25, 1.0)});
    c.controller.pair_limits[{"a1", "leader"}] = {0.1, 0.8};
    geometry::PlanarObstacle ground;
    ground.plane = geometry::WorkingPlane::yz;
    ground.vertices = {Vec2(-2, -1), Vec2(2, -1), Vec2(2, 0.2), Vec2(-2, 0.2)};
    c.obstacles.push_back(ground);
    c.sim.num_substeps = 10;
    c.sim.settle_time = 0.5;
    c.run.duration = 1000.0;
    return c;
}

Command command(CommandKind kind, Vec3 v = Vec3::Zero())
{
    Command c;
    c.kind = kind;
    c.velocity = v;
    return c;
}

bool near_rel(double a, double b) { return std::abs(a - b) <= 1e-5 * std::max(1.0, std::abs(b)); }

bool near_vec(const Vec3& a, const Vec3& b)
{
    return near_rel(a.x(), b.x()) && near_rel(a.y(), b.y()) && near_rel(a.z(), b.z());
}

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;

struct Client {
    net::io_context io;
    websocket::stream<net::ip::tcp::socket> ws{io};

    explicit Client(unsigned short port)
    {
        net::ip::tcp::resolver resolver(io);
        net::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
        ws.handshake("127.0.0.1", "/");
    }

    std::string read()
    {
        beast::flat_buffer buffer;
        ws.read(buffer);
        return beast::buffers_to_string(buffer.data());
    }

    void send(const std::string& text)
    {
        ws.text(true);
        ws.write(net::buffer(text));
    }

    // Reads until a message of the given type arrives.
    json read_until(const std::string& type)
    {
        for (int k = 0; k < 1000; ++k) {
            json m = json::parse(read());
            if (m["type"] == type)
                return m;
        }
        throw std::runtime_error("no '" + type + "' message");
    }
};

}  // namespace

TEST_CASE("frame round trip")
{
    Session session(small_rope(), kScenarios);
    for (int k = 0; k < 5; ++k)
        session.step();
    const StateFrame f = session.frame();
    REQUIRE(f.h_collision.has_value());
    REQUIRE(!f.h_stretch.empty());

    const std::string text = encode(f);
    CHECK(message_type(text) == "frame");
    const StateFrame g = decode_frame(text);
    CHECK(g.tick == f.tick);
    CHECK(near_rel(g.t, f.t));
    CHECK(g.object_kind == f.object_kind);
    CHECK(g.topology_hash == f.topology_hash);
    CHECK(g.paused == f.paused);
    REQUIRE(g.positions.size() == f.positions.size());
    for (std::size_t i = 0; i < f.positions.size(); ++i)
        CHECK(near_vec(g.positions[i], f.positions[i]));
    REQUIRE(g.agents.size() == f.agents.size());
    for (std::size_t i = 0; i < f.agents.size(); ++i) {
        CHECK(g.agents[i].id == f.agents[i].id);
        CHECK(near_vec(g.agents[i].pos, f.agents[i].pos));
        CHECK(near_vec(g.agents[i].u, f.agents[i].u));
        CHECK(g.agents[i].status == f.agents[i].status);
        CHECK(g.agents[i].active_labels == f.agents[i].active_labels);
        CHECK(near_rel(g.agents[i].error_norm, f.agents[i].error_norm));
    }
    CHECK(near_vec(g.leader_pos, f.leader_pos));
    CHECK(near_rel(*g.h_collision, *f.h_collision));
    REQUIRE(g.h_stretch.size() == f.h_stretch.size());
    for (const auto& [k, v] : f.h_stretch)
        CHECK(near_rel(g.h_stretch.at(k), v));
    CHECK(near_rel(*g.min_distance, *f.min_distance));
    CHECK(near_vec(g.object_witness, f.object_witness));
    CHECK(near_vec(g.obstacle_witness, f.obstacle_witness));

    // Re-encoding the decoded frame is byte-identical: the encoding is canonical.
    CHECK(encode(g) == text);
}

TEST_CASE("frame encoding details")
{
    StateFrame f;
    f.object_kind = "rod";
    f.topology_hash = "0123456789abcdef";
    f.t = 1.0 / 3.0;
    const std::string text = encode(f);
    CHECK(text.find("\"stretch\":{}") != std::string::npos);
    CHECK(text.find("\"proximity\":{}") != std::string::npos);
    CHECK(text.find("\"collision\":null") != std::string::npos);
    CHECK(text.find("0.333333") != std::string::npos);
    CHECK(text.find("0.3333333") == std::string::npos);
    // fixed key order
    CHECK(text.find("\"tick\"") < text.find("\"positions\""));
    CHECK(text.find("\"positions\"") < text.find("\"h_values\""));
    const StateFrame g = decode_frame(text);
    CHECK(g.h_stretch.empty());
    CHECK(!g.h_collision);

    CHECK_THROWS_AS(decode_frame("{\"type\":\"frame\"}"), ProtocolError);
    CHECK_THROWS_AS(decode_frame("not json"), ProtocolError);
    CHECK_THROWS_AS(decode_topology(text), ProtocolError);
}

TEST_CASE("225-particle frame is small and fast to encode")
{
    Session session(harness::load_scenario(kScenarios / "fabric_three_assistants.json"), kScenarios);
    const StateFrame f = session.frame();
    REQUIRE(f.positions.size() == 225);
    const int reps = 200;
    std::size_t bytes = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < reps; ++k)
        bytes = encode(f).size();
    const double per_frame = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
    MESSAGE("frame: " << bytes << " bytes, " << per_frame * 1e6 << " us");
    CHECK(per_frame < 1e-3);
    CHECK(bytes < 32 * 1024);

    const Topology t = session.topology();
    CHECK(t.point_count == 225);
    CHECK(t.triangles.size() == 2 * 14 * 14);
    CHECK(t.obstacles.size() == 1);
    CHECK(t.obstacles[0].kind == "mesh");
    CHECK(t.obstacles[0].faces.size() == 12);
    const Topology back = decode_topology(encode(t));
    CHECK(back.hash == t.hash);
    CHECK(back.edges == t.edges);
    CHECK(back.agents == t.agents);
}

TEST_CASE("topology hash")
{
    Session a(small_rope(), kScenarios);
    const std::string h = a.topology().hash;
    CHECK(h.size() == 16);
    for (int k = 0; k < 10; ++k)
        a.step();
    CHECK(make_topology(a.simulation()).hash == h);
    CHECK(a.frame().topology_hash == h);

    auto other = small_rope();
    other.controller.d_offset = 0.07;
    Session b(other, kScenarios);
    CHECK(b.topology().hash != h);
}

TEST_CASE("command parsing")
{
    const Command c = parse_command(R"({"type":"command","payload":{"kind":"leader_velocity","velocity":[0.1,0,-0.2],"id":"7"}})");
    CHECK(c.kind == CommandKind::leader_velocity);
    CHECK(c.velocity == Vec3(0.1, 0, -0.2));
    CHECK(c.id == "7");

    for (CommandKind k : {CommandKind::pause, CommandKind::resume, CommandKind::reset}) {
        Command x;
        x.kind = k;
        CHECK(parse_command(encode_command(x)).kind == k);
    }
    Command sel;
    sel.kind = CommandKind::select_scenario;
    sel.scenario = "fabric_three_assistants";
    CHECK(parse_command(encode_command(sel)).scenario == "fabric_three_assistants");

    CHECK_THROWS_AS(parse_command(R"({"type":"command","payload":{"kind":"teleport"}})"), ProtocolError);
    CHECK_THROWS_AS(parse_command(R"({"type":"command","payload":{"kind":"leader_velocity","velocity":[1e999,0,0]}})"),
                    ProtocolError);
    CHECK_THROWS_AS(parse_command(R"({"type":"command","payload":{"kind":"leader_velocity","velocity":[null,0,0]}})"),
                    ProtocolError);
    CHECK_THROWS_AS(parse_command(R"({"type":"command","payload":{"kind":"leader_velocity","velocity":[0,0]}})"),
                    ProtocolError);
    CHECK_THROWS_AS(parse_command(R"({"type":"command","payload":{"kind":"select_scenario"}})"), ProtocolError);
    CHECK_THROWS_AS(parse_command(R"({"type":"frame","payload":{}})"), ProtocolError);
    CHECK_THROWS_AS(parse_command("{"), ProtocolError);
}

TEST_CASE("session pause and resume keep ticks gapless")
{
    Session s(small_rope(), kScenarios);
    std::vector<std::size_t> ticks{s.simulation().tick()};
    for (int k = 0; k < 5; ++k) {
        s.step();
        ticks.push_back(s.simulation().tick());
    }
    s.submit(command(CommandKind::pause));
    const auto replies = s.apply_pending();
    REQUIRE(replies.size() == 1);
    CHECK(replies[0].ok);
    CHECK(replies[0].tick == s.simulation().tick() + 1);
    CHECK(s.paused());
    for (int k = 0; k < 5; ++k)
        CHECK(!s.step());
    CHECK(s.simulation().tick() == ticks.back());
    CHECK(s.frame().paused);

    s.submit(command(CommandKind::resume));
    s.apply_pending();
    for (int k = 0; k < 5; ++k) {
        CHECK(s.step());
        ticks.push_back(s.simulation().tick());
    }
    for (std::size_t k = 0; k < ticks.size(); ++k)
        CHECK(ticks[k] == k);
}

TEST_CASE("leader velocity integrates to displacement")
{
    Session s(small_rope(), kScenarios);
    const Vec3 start = s.simulation().last().leader_pos;
    s.submit(command(CommandKind::leader_velocity, Vec3(0.1, 0, 0)));
    const auto replies = s.apply_pending();
    REQUIRE(replies.size() == 1);
    REQUIRE(replies[0].applied_velocity);
    CHECK(*replies[0].applied_velocity == Vec3(0.1, 0, 0));
    const double dt = s.simulation().config().run.dt();
    for (int k = 0; k < 100; ++k)  // 2 s at 50 Hz
        s.step();
    const Vec3 moved = s.simulation().last().leader_pos - start;
    CHECK(std::abs(moved.x() - 0.2) <= 0.1 * dt);
    CHECK(std::abs(moved.y()) < 1e-12);
    CHECK(std::abs(moved.z()) < 1e-12);
}

TEST_CASE("leader velocity is clamped and non-finite input is refused")
{
    Session s(small_rope(), kScenarios);
    s.submit(command(CommandKind::leader_velocity, Vec3(3.0, 4.0, 0.0)));
    const auto r = s.apply_pending();
    REQUIRE(r[0].applied_velocity);
    CHECK(r[0].applied_velocity->norm() == doctest::Approx(s.simulation().config().leader.speed_max));
    CHECK(r[0].applied_velocity->normalized().isApprox(Vec3(0.6, 0.8, 0.0)));

    s.submit(command(CommandKind::leader_velocity, Vec3(std::numeric_limits<double>::quiet_NaN(), 0, 0)));
    const auto bad = s.apply_pending();
    CHECK(!bad[0].ok);
    CHECK(s.simulation().leader_velocity()->allFinite());
}

TEST_CASE("velocity sent while paused applies on resume")
{
    Session s(small_rope(), kScenarios);
    s.submit(command(CommandKind::pause));
    s.submit(command(CommandKind::leader_velocity, Vec3(0, 0, -0.05)));
    s.apply_pending();
    const Vec3 before = s.simulation().last().leader_pos;
    s.step();
    CHECK(s.simulation().last().leader_pos == before);

    s.submit(command(CommandKind::resume));
    s.apply_pending();
    s.step();
    CHECK(s.simulation().last().leader_pos.z() == doctest::Approx(before.z() - 0.05 * 0.02));
}

TEST_CASE("reset is idempotent")
{
    Session s(small_rope(), kScenarios);
    const std::string first = encode(s.frame());
    const std::string hash = s.topology().hash;
    for (int k = 0; k < 10; ++k)
        s.step();
    const auto gen = s.generation();
    s.submit(command(CommandKind::reset));
    s.submit(command(CommandKind::reset));
    const auto replies = s.apply_pending();
    REQUIRE(replies.size() == 2);
    for (const auto& r : replies) {
        CHECK(r.ok);
        CHECK(r.tick == 0);
    }
    CHECK(s.generation() > gen);
    CHECK(s.simulation().tick() == 0);
    CHECK(s.topology().hash == hash);
    CHECK(encode(s.frame()) == first);
}

TEST_CASE("select_scenario swaps the config")
{
    Session s(small_rope(), kScenarios);
    const std::string hash = s.topology().hash;
    Command sel;
    sel.kind = CommandKind::select_scenario;
    sel.scenario = "stiff_rod_single_assistant";
    s.submit(sel);
    const auto r = s.apply_pending();
    REQUIRE(r[0].ok);
    CHECK(r[0].tick == 0);
    CHECK(s.simulation().config().name == "stiff_rod_single_assistant");
    CHECK(s.topology().hash != hash);
    CHECK(s.simulation().tick() == 0);

    for (const std::string bad : {"../scenarios/rope_single_assistant", "no_such_scenario", ".hidden", ""}) {
        CAPTURE(bad);
        sel.scenario = bad;
        s.submit(sel);
        const auto e = s.apply_pending();
        CHECK(!e[0].ok);
        CHECK(s.simulation().config().name == "stiff_rod_single_assistant");
    }
}

TEST_CASE("replies encode as ack or error")
{
    Reply ok;
    ok.command.kind = CommandKind::pause;
    ok.command.id = "abc";
    ok.tick = 12;
    const json a = json::parse(encode(ok));
    CHECK(a["type"] == "ack");
    CHECK(a["payload"]["kind"] == "pause");
    CHECK(a["payload"]["tick"] == 12);
    CHECK(a["payload"]["id"] == "abc");

    Reply bad = ok;
    bad.ok = false;
    bad.error = "nope";
    const json e = json::parse(encode(bad));
    CHECK(e["type"] == "error");
    CHECK(e["payload"]["message"] == "nope");
    CHECK(e["payload"]["id"] == "abc");
}

TEST_CASE("server: topology first, then frames with increasing ticks")
{
    Session session(small_rope(), kScenarios);
    ServerOptions opts;
    opts.port = 0;
    Server server(session, opts);
    server.start();
    REQUIRE(server.port() != 0);

    Client c(server.port());
    const json first = json::parse(c.read());
    REQUIRE(first["type"] == "topology");
    const std::string hash = first["payload"]["hash"];

    std::vector<std::size_t> ticks;
    const auto t0 = std::chrono::steady_clock::now();
    while (ticks.size() < 20) {
        const json m = c.read_until("frame");
        CHECK(m["payload"]["topology_hash"] == hash);
        ticks.push_back(m["payload"]["tick"]);
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (std::size_t k = 1; k < ticks.size(); ++k)
        CHECK(ticks[k] > ticks[k - 1]);
    MESSAGE("20 frames in " << elapsed << " s");
    CHECK(20.0 / elapsed >= 20.0);

    // A second client joining mid-run gets the same protocol.
    Client late(server.port());
    CHECK(json::parse(late.read())["type"] == "topology");
    const std::size_t a = late.read_until("frame")["payload"]["tick"];
    const std::size_t b = late.read_until("frame")["payload"]["tick"];
    CHECK(b > a);
    server.stop();
}

TEST_CASE("server: malformed message gets an error and the connection stays open")
{
    Session session(small_rope(), kScenarios);
    ServerOptions opts;
    opts.port = 0;
    Server server(session, opts);
    server.start();
    Client c(server.port());
    c.send("this is not json");
    const json err = c.read_until("error");
    CHECK(err["payload"]["message"].get<std::string>().find("malformed") != std::string::npos);

    c.send(R"({"type":"command","payload":{"kind":"fly"}})");
    CHECK(c.read_until("error")["payload"]["message"].get<std::string>().find("fly") != std::string::npos);

    const auto t0 = std::chrono::steady_clock::now();
    c.send(R"({"type":"command","payload":{"kind":"leader_velocity","velocity":[0,0.1,0],"id":"v1"}})");
    const json ack = c.read_until("ack");
    const double round_trip = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(ack["payload"]["id"] == "v1");
    CHECK(ack["payload"]["kind"] == "leader_velocity");
    MESSAGE("command round trip " << round_trip * 1e3 << " ms");
    CHECK(round_trip < 0.1);

    // the acknowledged tick is the first one that moves the leader
    const std::size_t applied = ack["payload"]["tick"];
    for (;;) {
        const json f = c.read_until("frame");
        if (f["payload"]["tick"].get<std::size_t>() >= applied) {
            CHECK(f["payload"]["leader_pos"][1].get<double>() > -0.25);
            break;
        }
    }
    server.stop();
}

TEST_CASE("server: reset broadcasts a fresh topology")
{
    Session session(small_rope(), kScenarios);
    ServerOptions opts;
    opts.port = 0;
    Server server(session, opts);
    server.start();
    Client c(server.port());
    c.read_until("topology");
    c.read_until("frame");
    c.send(R"({"type":"command","payload":{"kind":"reset"}})");
    CHECK(c.read_until("ack")["payload"]["tick"] == 0);
    CHECK(c.read_until("topology")["payload"]["scenario"] == "small_rope");
    server.stop();
}

TEST_CASE("server: busy port is a startup error")
{
    Session session(small_rope(), kScenarios);
    ServerOptions opts;
    opts.port = 0;
    Server first(session, opts);
    opts.port = first.port();
    CHECK_THROWS_AS(Server(session, opts), ServerError);

    opts.address = "not an address";
    CHECK_THROWS_AS(Server(session, opts), ServerError);
}
