#pragma once

#include <atomic>
#include <memory>
#include <stdexcept>
#include <string>

#include "pbdcbf/bridge/session.hpp"

namespace pbdcbf::bridge {

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8765;  // 0 picks a free port
    double broadcast_hz = 30.0;
    bool realtime = true;  // pace ticks to the scenario tick rate
};

class ServerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// WebSocket service around a Session. The network runs on one thread, the tick
/// loop on another; frames leave through a latest-snapshot slot, commands enter
/// through the session queue.
class Server {
public:
    /// Binds immediately; throws ServerError when the address is unusable.
    Server(Session& session, ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    unsigned short port() const;
    void start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Builds a session and serves it until SIGINT or SIGTERM.
void serve(const harness::ScenarioConfig& config, const std::filesystem::path& scenario_dir,
           harness::SimulationOptions options, ServerOptions server_options);

}  // namespace pbdcbf::bridge
