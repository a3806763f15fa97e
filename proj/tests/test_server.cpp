#include <gtest/gtest.h>

#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "carpal/server.hpp"
#include "carpal/session.hpp"
#include "helpers.hpp"

using namespace carpal;
namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

class Client {
public:
    explicit Client(unsigned short port) : ws_(ioc_) {
        tcp::resolver r(ioc_);
        net::connect(ws_.next_layer(), r.resolve("127.0.0.1", std::to_string(port)));
        ws_.handshake("127.0.0.1", "/");
    }
    ~Client() {
        beast::error_code ec;
        ws_.close(websocket::close_code::normal, ec);
    }

    void send(const Json& j) { ws_.write(net::buffer(j.dump())); }
    Json receive() {
        beast::flat_buffer b;
        ws_.read(b);
        return Json::parse(beast::buffers_to_string(b.data()));
    }
    Json call(const Json& j) {
        send(j);
        return receive();
    }

private:
    net::io_context ioc_;
    websocket::stream<tcp::socket> ws_;
};

struct Fixture : ::testing::Test {
    void SetUp() override {
        model = std::make_shared<const PredictorModel>(test::constant_model(cfg.predictor, 1.0, 1e-4));
        ScenarioSource src;
        src.generated = session_scene_config(cfg);
        server = std::make_unique<Server>(cfg, model, src);
        port = server->listen("127.0.0.1", 0);
        thread = std::thread([this] { server->run(); });
    }
    void TearDown() override {
        server->stop();
        thread.join();
    }

    Config cfg;
    std::shared_ptr<const PredictorModel> model;
    std::unique_ptr<Server> server;
    unsigned short port = 0;
    std::thread thread;
};

std::vector<DecisionLogEntry> log_of(const std::vector<Json>& frames) {
    std::vector<DecisionLogEntry> out;
    for (const auto& f : frames)
        if (f.at("decided").get<bool>())
            out.push_back({f.at("tick").get<int>(),
                           f.at("outcome") == "Intervene" ? Action::intervene
                           : f.at("outcome") == "Warn"      ? Action::warn
                                                          : Action::no_action,
                           f.at("mode") == "intervened" ? Mode::intervened : Mode::human});
    return out;
}

}  // namespace

using ServerTest = Fixture;

TEST_F(ServerTest, StartReturnsTheFirstFrame) {
    Client c(port);
    const Json f = c.call({{"type", "start"}, {"scenario_id", "road"}, {"seed", 3}, {"lockstep", true}});
    EXPECT_EQ(f.at("type"), "frame");
    EXPECT_EQ(f.at("tick"), 0);
    EXPECT_TRUE(f.at("decided").get<bool>());
}

TEST_F(ServerTest, MalformedMessagesLeaveTheSessionRunning) {
    Client c(port);
    c.call({{"type", "start"}, {"scenario_id", "road"}, {"seed", 3}, {"lockstep", true}});
    c.send(Json::parse("[]"));
    EXPECT_EQ(c.receive().at("type"), "error");
    for (const Json& bad : {Json{{"type", "control"}, {"steer", "left"}, {"accel", 0}}, Json{{"type", "warp"}},
                            Json{{"type", "start"}, {"scenario_id", "x"}, {"seed", 1}}}) {
        const Json e = c.call(bad);
        EXPECT_EQ(e.at("type"), "error") << bad;
        EXPECT_FALSE(e.at("message").get<std::string>().empty());
    }
    const Json f = c.call({{"type", "control"}, {"steer", 0.0}, {"accel", 0.0}});
    EXPECT_EQ(f.at("type"), "frame");
    EXPECT_EQ(f.at("tick"), 1);
}

TEST_F(ServerTest, LockstepDecisionsMatchTheInProcessScript) {
    std::vector<ControlInput> inputs;
    for (int k = 0; k < 20; ++k) inputs.push_back({0.03 * (k % 5 - 2), 0.1});
    std::vector<Json> wire;
    {
        Client c(port);
        wire.push_back(c.call({{"type", "start"}, {"scenario_id", "road"}, {"seed", 9}, {"lockstep", true}}));
        for (const auto& in : inputs) {
            if (wire.back().at("done").get<bool>()) break;
            wire.push_back(c.call({{"type", "control"}, {"steer", in.steer}, {"accel", in.accel}}));
        }
        c.send({{"type", "stop"}});
    }
    ScenarioSource src;
    src.generated = session_scene_config(cfg);
    const auto frames = run_script(cfg, model, src.resolve("road", 9), 9, inputs);
    ASSERT_EQ(frames.size(), wire.size());
    std::vector<Json> local;
    for (const auto& f : frames) local.push_back(to_json(f));
    EXPECT_EQ(log_of(wire), log_of(local));
    Session direct(cfg, model, src.resolve("road", 9), 9);
    for (std::size_t i = 1; i < wire.size(); ++i) direct.step(inputs[i - 1]);
    EXPECT_EQ(log_of(wire), direct.decision_log());
    bool intervened = false;
    for (const auto& e : direct.decision_log()) intervened |= e.outcome == Action::intervene;
    EXPECT_TRUE(intervened);
    for (std::size_t i = 0; i < wire.size(); ++i) EXPECT_EQ(wire[i].at("ego"), local[i].at("ego"));
}

TEST(ScenarioSource, UnknownIdsAreRejected) {
    ScenarioSource src;
    Scenario sc = generate_scenario(ScenarioConfig{}, 1);
    sc.id = "a";
    src.dataset = {sc};
    EXPECT_EQ(src.resolve("a", 0).id, "a");
    EXPECT_THROW(src.resolve("b", 0), ValidationError);
}
