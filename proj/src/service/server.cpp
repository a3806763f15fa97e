#include "carpal/server.hpp"

#include <chrono>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "carpal/session.hpp"

namespace carpal {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

Scenario ScenarioSource::resolve(const std::string& id, std::uint64_t seed) const {
    if (dataset.empty()) {
        Scenario sc = generate_scenario(generated, seed);
        if (!id.empty()) sc.id = id;
        return sc;
    }
    for (const auto& sc : dataset)
        if (sc.id == id) return sc;
    throw ValidationError("unknown scenario_id '" + id + "'");
}

namespace {

Json error_message(const std::string& what) { return {{"type", "error"}, {"message", what}}; }

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, const Config& cfg, std::shared_ptr<const PredictorModel> model,
               const ScenarioSource& source)
        : ws_(std::move(socket)),
          timer_(ws_.get_executor()),
          cfg_(cfg),
          model_(std::move(model)),
          source_(source),
          period_(std::chrono::microseconds(static_cast<long>(cfg.scene.dt * 1e6))) {}

    void start() {
        ws_.text(true);
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (!ec) self->read();
        });
    }

private:
    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->timer_.cancel();
                return;
            }
            const std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            self->handle(text);
            self->read();
        });
    }

    void handle(const std::string& text) {
        try {
            Json msg;
            try {
                msg = Json::parse(text);
            } catch (const Json::parse_error& e) {
                throw ValidationError(std::string("malformed JSON: ") + e.what());
            }
            require(msg.is_object() && msg.contains("type") && msg.at("type").is_string(),
                    "message needs a string field 'type'");
            const std::string type = msg.at("type").get<std::string>();
            if (type == "start") {
                on_start(msg);
            } else if (type == "control") {
                on_control(msg);
            } else if (type == "stop") {
                require(session_ != nullptr, "no session to stop");
                session_->stop();
                timer_.cancel();
            } else {
                throw ValidationError("unknown message type '" + type + "'");
            }
        } catch (const std::exception& e) {
            send(error_message(e.what()));
        }
    }

    void on_start(const Json& msg) {
        require(session_ == nullptr || session_->closed(), "session already started");
        require(msg.contains("scenario_id") && msg.at("scenario_id").is_string(),
                "start needs a string field 'scenario_id'");
        require(msg.contains("seed") && msg.at("seed").is_number_unsigned(),
                "start needs a non-negative integer field 'seed'");
        lockstep_ = false;
        if (msg.contains("lockstep")) {
            require(msg.at("lockstep").is_boolean(), "field 'lockstep' must be a boolean");
            lockstep_ = msg.at("lockstep").get<bool>();
        }
        const auto seed = msg.at("seed").get<std::uint64_t>();
        Scenario sc = source_.resolve(msg.at("scenario_id").get<std::string>(), seed);
        session_ = std::make_unique<Session>(cfg_, model_, std::move(sc), seed);
        held_ = {};
        send(to_json(session_->frame()));
        if (!lockstep_) {
            timer_.expires_after(period_);
            tick();
        }
    }

    void on_control(const Json& msg) {
        for (const char* key : {"steer", "accel"})
            require(msg.contains(key) && msg.at(key).is_number(),
                    std::string("control needs a numeric field '") + key + "'");
        require(session_ != nullptr, "no active session");
        require(!session_->closed(), "session closed");
        const ControlInput in{msg.at("steer").get<double>(), msg.at("accel").get<double>()};
        require(std::isfinite(in.steer) && std::isfinite(in.accel), "control values must be finite");
        if (lockstep_) {
            send(to_json(session_->step(in)));
        } else {
            held_ = in;
        }
    }

    void tick() {
        timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
            if (ec || !self->session_ || self->session_->closed()) return;
            self->send(to_json(self->session_->step(self->held_)));
            if (self->session_->closed()) return;
            self->timer_.expires_at(self->timer_.expiry() + self->period_);
            self->tick();
        });
    }

    void send(const Json& j) {
        out_.push_back(j.dump());
        if (out_.size() == 1) write();
    }

    void write() {
        ws_.async_write(net::buffer(out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return;
            self->out_.pop_front();
            if (!self->out_.empty()) self->write();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    net::steady_timer timer_;
    beast::flat_buffer buffer_;
    std::deque<std::string> out_;
    const Config& cfg_;
    std::shared_ptr<const PredictorModel> model_;
    const ScenarioSource& source_;
    std::chrono::steady_clock::duration period_;
    std::unique_ptr<Session> session_;
    ControlInput held_;
    bool lockstep_ = false;
};

}  // namespace

struct Server::Impl {
    Config cfg;
    std::shared_ptr<const PredictorModel> model;
    ScenarioSource source;
    net::io_context ioc;
    tcp::acceptor acceptor{ioc};
    std::mutex mutex;
    std::vector<std::shared_ptr<net::io_context>> sessions;
    std::vector<std::thread> threads;

    void accept() {
        auto sioc = std::make_shared<net::io_context>();
        acceptor.async_accept(*sioc, [this, sioc](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            auto conn = std::make_shared<Connection>(std::move(socket), cfg, model, source);
            {
                std::lock_guard lock(mutex);
                sessions.push_back(sioc);
                threads.emplace_back([sioc, conn]() mutable {
                    conn->start();
                    conn.reset();
                    sioc->run();
                });
            }
            accept();
        });
    }
};

Server::Server(Config cfg, std::shared_ptr<const PredictorModel> model, ScenarioSource source)
    : impl_(std::make_unique<Impl>()) {
    cfg.validate();
    require(model != nullptr, "server needs a model");
    impl_->cfg = std::move(cfg);
    impl_->model = std::move(model);
    impl_->source = std::move(source);
}

Server::~Server() {
    stop();
    std::lock_guard lock(impl_->mutex);
    for (auto& s : impl_->sessions) s->stop();
    for (auto& t : impl_->threads)
        if (t.joinable()) t.join();
}

unsigned short Server::listen(const std::string& address, unsigned short port) {
    try {
        const tcp::endpoint ep(net::ip::make_address(address), port);
        impl_->acceptor.open(ep.protocol());
        impl_->acceptor.set_option(net::socket_base::reuse_address(true));
        impl_->acceptor.bind(ep);
        impl_->acceptor.listen();
        return impl_->acceptor.local_endpoint().port();
    } catch (const boost::system::system_error& e) {
        throw std::runtime_error("cannot listen on " + address + ":" + std::to_string(port) + ": " + e.what());
    }
}

void Server::run() {
    impl_->accept();
    impl_->ioc.run();
    std::vector<std::thread> threads;
    {
        std::lock_guard lock(impl_->mutex);
        for (auto& s : impl_->sessions) s->stop();
        threads.swap(impl_->threads);
    }
    for (auto& t : threads) t.join();
}

void Server::stop() { impl_->ioc.stop(); }

}  // namespace carpal
