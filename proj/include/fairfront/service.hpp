#pragma once

#include "fairfront/config.hpp"
#include "fairfront/error.hpp"
#include "fairfront/experiment.hpp"
#include "fairfront/sweep.hpp"
#include "fairfront/theory.hpp"

#include <httplib.h>
#include <json.hpp>

#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fairfront {

inline constexpr int service_schema_version = 1;
inline constexpr std::size_t default_policy_cap = 1000000;

struct Response {
    int status = 200;
    std::string body;
};

/// A completed sweep held in memory: immutable once published.
struct SweepEntry {
    ExperimentConfig config;
    SweepResult sweep;
    FrontSet fronts;
};

inline nlohmann::json regime_json(const RegimeReport& r, const std::vector<std::string>& labels,
                                  const std::vector<std::string>& front_names)
{
    nlohmann::json alignments = nlohmann::json::array();
    for (std::size_t g = 0; g < r.alignments.size(); ++g) {
        alignments.push_back({{"group", g < labels.size() ? labels[g] : std::to_string(g)}, {"alpha", r.alignments[g]}});
    }
    nlohmann::json violations = nlohmann::json::array();
    for (std::size_t i = 0; i < r.curvature_violations.size(); ++i) {
        violations.push_back({{"front", i < front_names.size() ? front_names[i] : std::to_string(i)},
                              {"indices", r.curvature_violations[i]}});
    }
    return {{"asymmetry_ratio", std::isinf(r.asymmetry_ratio) ? nlohmann::json("inf") : nlohmann::json(r.asymmetry_ratio)},
            {"alignments", alignments},
            {"egal_prediction", std::string(to_string(r.egal_prediction))},
            {"rawls_prediction", std::string(to_string(r.rawls_prediction))},
            {"curvature_violations", violations}};
}

inline nlohmann::json cell_json(const CellKey& k)
{
    return {{"space", std::string(to_string(k.space))},
            {"justice", std::string(to_string(k.justice))},
            {"class", std::string(to_string(k.cls))},
            {"scope", std::string(to_string(k.scope))},
            {"split", std::string(to_string(k.split))}};
}

/// Front payload shared by the fronts endpoint and what-if responses.
inline nlohmann::json front_payload(const SweepResult& sweep, const FrontSet& fs, const CellKey& k)
{
    const Front& f = fs.fronts.at(k);
    const CellMetrics* m = fs.cell_metrics(k);
    const Comparison* c = fs.comparison(m->comparison);
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : f.points) {
        const SweepRow* row = sweep.find(p.policy_id, k.split);
        points.push_back({{"x", p.x}, {"y", p.y}, {"policy", policy_json(row->policy)}});
    }
    return {{"cell", cell_json(k)},
            {"name", cell_name(k)},
            {"points", points},
            {"comparison", m->comparison},
            {"anchors", anchors_json(c->anchors)},
            {"hv", m->hv},
            {"nhv", m->nhv}};
}

/// Request handling independent of the transport; `bind` attaches it to an
/// HTTP server.
class Service {
public:
    explicit Service(std::string root, std::size_t workers = 1, std::size_t policy_cap = default_policy_cap)
        : root_(std::move(root)), workers_(workers), policy_cap_(policy_cap)
    {
    }

    const std::string& root() const noexcept { return root_; }

    Response health() const { return ok({{"status", "ok"}}); }

    Response post_sweep(const std::string& body)
    {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            return error(400, std::string("body is not valid JSON: ") + e.what());
        }
        ExperimentConfig cfg;
        try {
            cfg = config_from_json(doc);
        } catch (const ConfigError& e) {
            return config_error(e);
        }
        std::optional<Population> pop;
        std::string handle;
        try {
            pop = load_population(cfg);
            handle = config_hash(cfg);
        } catch (const ConfigError& e) {
            return config_error(e);
        } catch (const DataError& e) {
            return error(422, std::string("dataset unavailable: ") + e.what());
        }
        const std::size_t policies = grid_size(cfg.grid, cfg.classes, cfg.scopes, pop->group_count(), cfg.pairing);
        if (policies > policy_cap_) {
            return error(413, "grid has " + std::to_string(policies) + " policies, cap is " +
                                  std::to_string(policy_cap_));
        }
        cfg.out_dir = (std::filesystem::path(root_) / handle).string();

        bool cached = true;
        std::shared_future<std::shared_ptr<const SweepEntry>> fut;
        std::optional<std::promise<std::shared_ptr<const SweepEntry>>> owner;
        {
            std::lock_guard lock(mutex_);
            if (entries_.count(handle) == 0) {
                const auto it = inflight_.find(handle);
                if (it != inflight_.end()) {
                    fut = it->second;
                } else if (!on_disk(handle)) {
                    cached = false;
                    owner.emplace();
                    fut = owner->get_future().share();
                    inflight_.emplace(handle, fut);
                }
            }
        }
        if (owner) {
            compute(handle, cfg, std::move(*pop), std::move(*owner));
        }
        try {
            if (fut.valid()) {
                fut.get();
            }
            const auto entry = find(handle);
            if (!entry) {
                return error(500, "sweep " + handle + " could not be loaded");
            }
            return ok({{"handle", handle},
                       {"status", "complete"},
                       {"cached", cached},
                       {"policies", policies},
                       {"notices", entry->fronts.notices}});
        } catch (const ConfigError& e) {
            return config_error(e);
        } catch (const DataError& e) {
            return error(422, e.what());
        } catch (const std::exception& e) {
            return error(500, e.what());
        }
    }

    Response get_front(const std::string& handle, const std::map<std::string, std::string>& query)
    {
        const auto entry = find(handle);
        if (!entry) {
            return error(404, "unknown sweep " + handle);
        }
        CellKey key;
        try {
            key = parse_cell(param(query, "space", "utility"), param(query, "justice", "egal"),
                             param(query, "class", "stoch"), param(query, "scope", "shared"),
                             param(query, "split", "train"));
        } catch (const ConfigError& e) {
            return error(400, e.what());
        }
        if (entry->fronts.front(key) == nullptr) {
            return error(404, "unknown cell " + cell_name(key));
        }
        auto payload = front_payload(entry->sweep, entry->fronts, key);
        payload["handle"] = handle;
        return ok(std::move(payload));
    }

    Response post_whatif(const std::string& handle, const std::string& body)
    {
        const auto entry = find(handle);
        if (!entry) {
            return error(404, "unknown sweep " + handle);
        }
        StakeholderSpec spec;
        try {
            const auto doc = nlohmann::json::parse(body);
            const auto& block = doc.contains("stakeholders") ? doc.at("stakeholders") : doc;
            spec = stakeholders_from_json(block, entry->sweep.stakeholders);
            spec.validate(entry->sweep.group_labels.size());
        } catch (const nlohmann::json::parse_error& e) {
            return error(400, std::string("body is not valid JSON: ") + e.what());
        } catch (const ConfigError& e) {
            return config_error(e);
        }
        ExperimentConfig cfg = entry->config;
        cfg.spaces = {Space::utility};
        cfg.stakeholders = spec;
        const SweepResult sweep = whatif(entry->sweep, spec);
        const FrontSet fs = extract_fronts(sweep, cfg);
        nlohmann::json fronts = nlohmann::json::array();
        for (const auto& [key, front] : fs.fronts) {
            fronts.push_back(front_payload(sweep, fs, key));
        }
        nlohmann::json comparisons = nlohmann::json::array();
        for (const auto& c : fs.comparisons) {
            comparisons.push_back({{"name", c.name},
                                   {"anchors", anchors_json(c.anchors)},
                                   {"auc", c.auc ? nlohmann::json(*c.auc) : nlohmann::json(nullptr)}});
        }
        return ok({{"handle", handle},
                   {"stakeholders", to_json(spec)},
                   {"fronts", fronts},
                   {"comparisons", comparisons},
                   {"regime", regime_json(fs.regime, sweep.group_labels, fs.regime_fronts)}});
    }

    Response get_curve(const std::string& handle, const std::string& policy_id)
    {
        const auto entry = find(handle);
        if (!entry) {
            return error(404, "unknown sweep " + handle);
        }
        const SweepRow* row = entry->sweep.find(policy_id, SplitTag::train);
        if (row == nullptr) {
            return error(404, "unknown policy " + policy_id);
        }
        const auto& labels = entry->sweep.group_labels;
        const DecisionCurve c = decision_curve(row->policy, labels.size());
        nlohmann::json groups = nlohmann::json::array();
        for (std::size_t g = 0; g < labels.size(); ++g) {
            groups.push_back({{"group", labels[g]}, {"accept", c.accept[g]}});
        }
        return ok({{"handle", handle}, {"policy", policy_json(row->policy)}, {"scores", c.scores}, {"groups", groups}});
    }

    void bind(httplib::Server& server)
    {
        const auto send = [](httplib::Response& res, const Response& r) {
            res.status = r.status;
            res.set_content(r.body, "application/json");
            if (r.status == 200) {
                res.set_header("ETag", "\"" + hex64(fnv1a64(r.body)) + "\"");
            }
        };
        server.Get("/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
        server.Post("/sweeps", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, post_sweep(req.body));
        });
        server.Get(R"(/sweeps/([^/]+)/fronts)", [this, send](const httplib::Request& req, httplib::Response& res) {
            std::map<std::string, std::string> query;
            for (const auto& [k, v] : req.params) {
                query[k] = v;
            }
            send(res, get_front(req.matches[1], query));
        });
        server.Post(R"(/sweeps/([^/]+)/whatif)", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, post_whatif(req.matches[1], req.body));
        });
        server.Get(R"(/sweeps/([^/]+)/policies/([^/]+)/curve)",
                   [this, send](const httplib::Request& req, httplib::Response& res) {
                       send(res, get_curve(req.matches[1], req.matches[2]));
                   });
    }

private:
    std::string root_;
    std::size_t workers_;
    std::size_t policy_cap_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const SweepEntry>> entries_;
    std::map<std::string, std::shared_future<std::shared_ptr<const SweepEntry>>> inflight_;

    static bool valid_handle(const std::string& h)
    {
        return h.size() == 16 && h.find_first_not_of("0123456789abcdef") == std::string::npos;
    }

    bool on_disk(const std::string& handle) const
    {
        return std::filesystem::exists(std::filesystem::path(root_) / handle / rows_file_name(handle));
    }

    std::shared_ptr<const SweepEntry> find(const std::string& handle)
    {
        if (!valid_handle(handle)) {
            return nullptr;
        }
        {
            std::lock_guard lock(mutex_);
            const auto it = entries_.find(handle);
            if (it != entries_.end()) {
                return it->second;
            }
            if (inflight_.count(handle) != 0 || !on_disk(handle)) {
                return nullptr;
            }
        }
        const auto dir = (std::filesystem::path(root_) / handle).string();
        auto entry = std::make_shared<SweepEntry>();
        try {
            entry->config = load_result_config(dir);
            entry->sweep = load_results(dir);
            entry->fronts = extract_fronts(entry->sweep, entry->config);
        } catch (const Error&) {
            return nullptr;
        }
        std::lock_guard lock(mutex_);
        return entries_.emplace(handle, std::move(entry)).first->second;
    }

    void compute(const std::string& handle, const ExperimentConfig& cfg, Population pop,
                 std::promise<std::shared_ptr<const SweepEntry>> promise)
    {
        try {
            auto entry = std::make_shared<SweepEntry>();
            entry->config = cfg;
            entry->sweep = run_sweep(cfg, pop, workers_);
            entry->fronts = extract_fronts(entry->sweep, cfg);
            save_results(cfg.out_dir, cfg, entry->sweep, entry->fronts);
            std::shared_ptr<const SweepEntry> done = entry;
            {
                std::lock_guard lock(mutex_);
                entries_[handle] = done;
                inflight_.erase(handle);
            }
            promise.set_value(done);
        } catch (...) {
            {
                std::lock_guard lock(mutex_);
                inflight_.erase(handle);
            }
            promise.set_exception(std::current_exception());
        }
    }

    static std::string param(const std::map<std::string, std::string>& q, const std::string& key,
                             const std::string& fallback)
    {
        const auto it = q.find(key);
        return it == q.end() ? fallback : it->second;
    }

    static Response ok(nlohmann::json payload)
    {
        payload["schema_version"] = service_schema_version;
        return {200, payload.dump()};
    }

    static Response error(int status, const std::string& message, nlohmann::json fields = nlohmann::json::array())
    {
        nlohmann::json payload = {{"schema_version", service_schema_version}, {"error", message}, {"fields", fields}};
        return {status, payload.dump()};
    }

    // ConfigError messages list one "  <path>: <problem>" line per field.
    static Response config_error(const ConfigError& e)
    {
        const std::string msg = e.what();
        nlohmann::json fields = nlohmann::json::array();
        std::size_t start = msg.find('\n');
        while (start != std::string::npos) {
            const auto end = msg.find('\n', start + 1);
            std::string line = msg.substr(start + 1, end == std::string::npos ? std::string::npos : end - start - 1);
            const auto first = line.find_first_not_of(' ');
            line = first == std::string::npos ? std::string() : line.substr(first);
            const auto colon = line.find(": ");
            if (colon != std::string::npos) {
                fields.push_back({{"field", line.substr(0, colon)}, {"message", line.substr(colon + 2)}});
            }
            start = end;
        }
        return error(400, msg, fields);
    }
};

} // namespace fairfront
