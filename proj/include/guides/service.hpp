#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "guides/access.hpp"
#include "guides/model.hpp"
#include "guides/ontology.hpp"
#include "guides/repair.hpp"

namespace guides {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string dataset_path;  // network JSON dump
    std::string ledger_path;   // optional ledger JSON
    std::string spatial_ontology_path;
    std::string domain_ontology_path;
    AccessPolicy policy = AccessPolicy::standard();
    std::map<std::string, Role> tokens;  // unknown tokens are public
    double area_cap_m2 = 25e6;
    bool persist = false;  // write dataset and ledger back after each change
};

/// {"listen": "host:port", "dataset": ..., "ledger": ..., "spatial_ontology": ...,
///  "domain_ontology": ..., "policy": {...}, "tokens": {token: role}, "area_cap_km2": 25}
/// Relative paths resolve against `base_dir`.
ServiceConfig service_config_from_json(const nlohmann::json& j, const std::string& base_dir = {});
ServiceConfig load_service_config(const std::string& path);

/// "host:port" or ":port". Throws ArgumentError otherwise.
void set_listen(ServiceConfig& cfg, std::string_view listen);

/// GUIDES_LISTEN overrides the configured listen address.
void apply_env_overrides(ServiceConfig& cfg);

struct Request {
    std::string method;
    std::string path;
    std::string token;
    std::map<std::string, std::string> params;  // query string
    std::string body;
};

struct Response {
    int status = 200;
    nlohmann::json body;
};

/// One consistent view: network, ledger and the query engine built on them.
struct Snapshot {
    Snapshot(InfrastructureNetwork n, RepairLedger l, const Ontology* st, std::optional<Ontology> d);

    InfrastructureNetwork network;
    RepairLedger ledger;
    std::optional<Ontology> domain;
    std::vector<InstanceMapping> mappings;
    QueryEngine engine;
};

/// Readers take the current snapshot and never block; writers serialize on
/// one mutex, build the next snapshot from a copy and publish it.
class Service {
public:
    Service(InfrastructureNetwork net, ServiceConfig cfg, RepairLedger ledger = {},
            std::optional<Ontology> spatial = std::nullopt, std::optional<nlohmann::json> domain_doc = std::nullopt);
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Loads dataset, ledger and ontologies named by the config.
    static std::unique_ptr<Service> from_config(const ServiceConfig& cfg);

    Role role_for(std::string_view token) const;
    std::shared_ptr<const Snapshot> snapshot() const;
    const ServiceConfig& config() const { return cfg_; }

    Response handle(const Request& req);

    Response health() const;
    Response layers(const Request& req) const;
    Response query(const Request& req) const;
    Response impact(const Request& req) const;
    Response update(const Request& req);
    Response flags(const Request& req) const;
    Response resolve(const Request& req, std::string_view flag_id);

    /// Persists the current network and ledger to the configured paths.
    void save() const;

private:
    std::shared_ptr<const Snapshot> publish(InfrastructureNetwork net, RepairLedger ledger);

    ServiceConfig cfg_;
    std::optional<Ontology> spatial_;
    std::optional<nlohmann::json> domain_doc_;
    std::shared_ptr<const Snapshot> current_;
    mutable std::mutex read_mutex_;  // guards the pointer swap only
    std::mutex write_mutex_;
};

/// Error to HTTP status: argument/validation/parse/type 400, unauthorized
/// 403, not_found 404, conflict and integrity 409, unsupported 422, else 500.
int http_status(const std::string& error_code);

/// HTTP binding of Service::handle. Token from "Authorization: Bearer <t>"
/// or the "X-Guides-Token" header.
class HttpFrontend {
public:
    explicit HttpFrontend(Service& service);
    ~HttpFrontend();
    HttpFrontend(const HttpFrontend&) = delete;
    HttpFrontend& operator=(const HttpFrontend&) = delete;

    /// Binds the socket; port 0 picks a free one. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop() is called from another thread.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace guides
