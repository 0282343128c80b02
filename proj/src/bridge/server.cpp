#include "pbdcbf/bridge/server.hpp"

#include <chrono>
#include <csignal>
#include <deque>
#include <functional>
#include <map>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

namespace pbdcbf::bridge {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Message = std::shared_ptr<const std::string>;

namespace {

// Lives on the io thread only.
class Connection : public std::enable_shared_from_this<Connection> {
public:
    using CommandSink = std::function<void(Command)>;
    using CloseSink = std::function<void(std::uint64_t)>;

    Connection(tcp::socket socket, std::uint64_t id, CommandSink on_command, CloseSink on_close)
        : ws_(std::move(socket)), id_(id), on_command_(std::move(on_command)), on_close_(std::move(on_close))
    {
    }

    void start(Message topology)
    {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        send_control(std::move(topology));
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (ec) {
                self->closed();
                return;
            }
            self->open_ = true;
            self->flush();
            self->read();
        });
    }

    void send_control(Message m)
    {
        controls_.push_back(std::move(m));
        flush();
    }

    // Frames are not queued: a slow client only ever gets the newest one.
    void send_frame(Message m, std::uint64_t sequence)
    {
        if (sequence <= frame_sequence_)
            return;
        frame_sequence_ = sequence;
        pending_frame_ = std::move(m);
        flush();
    }

    void close()
    {
        if (!open_)
            return;
        open_ = false;
        ws_.async_close(websocket::close_code::going_away, [self = shared_from_this()](beast::error_code) {});
    }

private:
    void read()
    {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed();
                return;
            }
            const std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            try {
                Command c = parse_command(text);
                c.origin = self->id_;
                self->on_command_(std::move(c));
            } catch (const ProtocolError& e) {
                self->send_control(std::make_shared<const std::string>(encode_error(e.what())));
            }
            self->read();
        });
    }

    void flush()
    {
        if (writing_ || !open_)
            return;
        Message next;
        if (!controls_.empty()) {
            next = std::move(controls_.front());
            controls_.pop_front();
        } else if (pending_frame_) {
            next = std::move(pending_frame_);
            pending_frame_.reset();
        } else {
            return;
        }
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(*next), [self = shared_from_this(), next](beast::error_code ec, std::size_t) {
            self->writing_ = false;
            if (ec) {
                self->closed();
                return;
            }
            self->flush();
        });
    }

    void closed()
    {
        open_ = false;
        if (on_close_) {
            auto sink = std::move(on_close_);
            on_close_ = nullptr;
            sink(id_);
        }
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::uint64_t id_;
    CommandSink on_command_;
    CloseSink on_close_;
    std::deque<Message> controls_;
    Message pending_frame_;
    std::uint64_t frame_sequence_ = 0;
    bool open_ = false;
    bool writing_ = false;
};

}  // namespace

struct Server::Impl {
    Impl(Session& s, ServerOptions o)
        : session(s), options(std::move(o)), acceptor(io), timer(io), guard(net::make_work_guard(io))
    {
    }

    Session& session;
    ServerOptions options;
    net::io_context io;
    tcp::acceptor acceptor;
    net::steady_timer timer;
    net::executor_work_guard<net::io_context::executor_type> guard;
    std::thread io_thread;
    std::thread sim_thread;
    std::atomic<bool> stopping{false};
    bool started = false;

    // io thread only
    std::map<std::uint64_t, std::shared_ptr<Connection>> connections;
    std::uint64_t next_id = 1;
    Message topology;
    std::uint64_t sent_sequence = 0;

    // Latest-snapshot slot, written by the sim thread.
    std::mutex slot_mutex;
    std::shared_ptr<const StateFrame> latest;
    std::uint64_t latest_sequence = 0;

    void publish(std::shared_ptr<const StateFrame> frame)
    {
        std::lock_guard lock(slot_mutex);
        latest = std::move(frame);
        ++latest_sequence;
    }

    void accept()
    {
        acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec)
                return;
            const std::uint64_t id = next_id++;
            auto conn = std::make_shared<Connection>(
                std::move(socket), id, [this](Command c) { session.submit(std::move(c)); },
                [this](std::uint64_t closed) { connections.erase(closed); });
            connections[id] = conn;
            conn->start(topology);
            std::shared_ptr<const StateFrame> frame;
            std::uint64_t sequence = 0;
            {
                std::lock_guard lock(slot_mutex);
                frame = latest;
                sequence = latest_sequence;
            }
            if (frame)
                conn->send_frame(std::make_shared<const std::string>(encode(*frame)), sequence);
            accept();
        });
    }

    void schedule_broadcast()
    {
        const auto period = std::chrono::duration<double>(1.0 / options.broadcast_hz);
        timer.expires_after(std::chrono::duration_cast<net::steady_timer::duration>(period));
        timer.async_wait([this](beast::error_code ec) {
            if (ec)
                return;
            broadcast_latest();
            schedule_broadcast();
        });
    }

    void broadcast_latest()
    {
        std::shared_ptr<const StateFrame> frame;
        std::uint64_t sequence = 0;
        {
            std::lock_guard lock(slot_mutex);
            frame = latest;
            sequence = latest_sequence;
        }
        if (!frame || sequence == sent_sequence)
            return;
        sent_sequence = sequence;
        const Message m = std::make_shared<const std::string>(encode(*frame));
        for (auto& [id, c] : connections)
            c->send_frame(m, sequence);
    }

    void deliver(std::uint64_t origin, Message m)
    {
        const auto it = connections.find(origin);
        if (it != connections.end())
            it->second->send_control(std::move(m));
    }

    void broadcast_control(Message m)
    {
        for (auto& [id, c] : connections)
            c->send_control(m);
    }

    void sim_loop()
    {
        using Clock = std::chrono::steady_clock;
        std::uint64_t generation = session.generation();
        auto next = Clock::now();
        while (!stopping.load()) {
            bool changed = false;
            for (const Reply& r : session.apply_pending()) {
                net::post(io, [this, origin = r.command.origin, m = std::make_shared<const std::string>(encode(r))] {
                    deliver(origin, m);
                });
                changed = true;
            }
            if (session.generation() != generation) {
                generation = session.generation();
                auto m = std::make_shared<const std::string>(encode(session.topology()));
                net::post(io, [this, m] {
                    topology = m;
                    broadcast_control(m);
                });
            }
            try {
                changed = session.step() || changed;
            } catch (const pbd::IntegrationDiverged& e) {
                spdlog::error("simulation diverged, pausing: {}", e.what());
                session.halt();
                auto m = std::make_shared<const std::string>(encode_error(std::string("diverged: ") + e.what()));
                net::post(io, [this, m] { broadcast_control(m); });
                changed = true;
            }
            if (changed)
                publish(std::make_shared<const StateFrame>(session.frame()));

            const auto dt = std::chrono::duration<double>(1.0 / session.simulation().config().run.tick_rate);
            next += std::chrono::duration_cast<Clock::duration>(dt);
            const auto now = Clock::now();
            if (!options.realtime || next < now - std::chrono::milliseconds(250))
                next = now;
            std::this_thread::sleep_until(next);
        }
    }
};

Server::Server(Session& session, ServerOptions options) : impl_(std::make_unique<Impl>(session, std::move(options)))
{
    auto& a = impl_->acceptor;
    beast::error_code ec;
    const auto address = net::ip::make_address(impl_->options.address, ec);
    if (ec)
        throw ServerError("invalid bind address '" + impl_->options.address + "': " + ec.message());
    const tcp::endpoint endpoint(address, impl_->options.port);
    a.open(endpoint.protocol(), ec);
    if (!ec)
        a.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec)
        a.bind(endpoint, ec);
    if (!ec)
        a.listen(net::socket_base::max_listen_connections, ec);
    if (ec)
        throw ServerError("cannot listen on " + impl_->options.address + ":" + std::to_string(impl_->options.port) +
                          ": " + ec.message());
    if (!(impl_->options.broadcast_hz > 0.0))
        throw ServerError("broadcast rate must be positive");
}

Server::~Server() { stop(); }

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::start()
{
    if (impl_->started)
        return;
    impl_->started = true;
    impl_->topology = std::make_shared<const std::string>(encode(impl_->session.topology()));
    impl_->publish(std::make_shared<const StateFrame>(impl_->session.frame()));
    impl_->accept();
    impl_->schedule_broadcast();
    impl_->io_thread = std::thread([this] { impl_->io.run(); });
    impl_->sim_thread = std::thread([this] { impl_->sim_loop(); });
}

void Server::stop()
{
    if (!impl_ || !impl_->started || impl_->stopping.exchange(true))
        return;
    if (impl_->sim_thread.joinable())
        impl_->sim_thread.join();
    net::post(impl_->io, [impl = impl_.get()] {
        beast::error_code ec;
        impl->acceptor.close(ec);
        impl->timer.cancel();
        for (auto& [id, c] : impl->connections)
            c->close();
        impl->guard.reset();
    });
    // Give close frames a moment, then stop regardless.
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(500);
    while (!impl_->io.stopped() && std::chrono::steady_clock::now() < deadline)
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    impl_->io.stop();
    if (impl_->io_thread.joinable())
        impl_->io_thread.join();
}

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

}  // namespace

void serve(const harness::ScenarioConfig& config, const std::filesystem::path& scenario_dir,
           harness::SimulationOptions options, ServerOptions server_options)
{
    Session session(config, scenario_dir, options);
    Server server(session, server_options);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.start();
    spdlog::info("serving {} on ws://{}:{}", config.name, server_options.address, server.port());
    while (!g_interrupted)
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    spdlog::info("shutting down");
    server.stop();
}

}  // namespace pbdcbf::bridge
