#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "carpal/config.hpp"
#include "carpal/predictor.hpp"
#include "carpal/scene.hpp"

namespace carpal {

/// Where `start` messages get their scenario: a loaded dataset looked up by id, or, when
/// the dataset is empty, a fresh session road generated from the start seed.
struct ScenarioSource {
    std::vector<Scenario> dataset;
    ScenarioConfig generated;

    Scenario resolve(const std::string& id, std::uint64_t seed) const;
};

/// Websocket front end; one session per connection, each on its own thread.
class Server {
public:
    Server(Config cfg, std::shared_ptr<const PredictorModel> model, ScenarioSource source);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and listens; returns the bound port (useful with port 0). Throws
    /// std::runtime_error when the address is unavailable.
    unsigned short listen(const std::string& address, unsigned short port);
    /// Accepts until stop(); joins every connection before returning.
    void run();
    /// Thread-safe.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace carpal
