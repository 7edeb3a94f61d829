#pragma once

#include "fairfront/error.hpp"
#include "fairfront/moo.hpp"
#include "fairfront/numeric.hpp"
#include "fairfront/policy.hpp"
#include "fairfront/stakeholders.hpp"
#include "fairfront/synthetic.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace fairfront {

enum class DatasetKind { synthetic_credit, synthetic_hiring, csv };

inline std::string_view to_string(DatasetKind d)
{
    switch (d) {
    case DatasetKind::synthetic_credit:
        return "synthetic_credit";
    case DatasetKind::synthetic_hiring:
        return "synthetic_hiring";
    case DatasetKind::csv:
        return "csv";
    }
    return "csv";
}

inline DatasetKind parse_dataset(std::string_view text)
{
    if (text == "synthetic_credit" || text == "credit") {
        return DatasetKind::synthetic_credit;
    }
    if (text == "synthetic_hiring" || text == "hiring") {
        return DatasetKind::synthetic_hiring;
    }
    if (text == "csv") {
        return DatasetKind::csv;
    }
    throw ConfigError("unknown dataset '" + std::string(text) + "'");
}

inline std::string_view to_string(GroupPairing p) { return p == GroupPairing::same_beta ? "same_beta" : "full_cross"; }

inline GroupPairing parse_pairing(std::string_view text)
{
    if (text == "same_beta") {
        return GroupPairing::same_beta;
    }
    if (text == "full_cross") {
        return GroupPairing::full_cross;
    }
    throw ConfigError("unknown pairing '" + std::string(text) + "'");
}

struct SplitConfig {
    double train_fraction = 0.7;
    std::uint64_t seed = 0;

    bool operator==(const SplitConfig&) const = default;
};

/// Stakeholder constants used when a config names a synthetic dataset but no
/// matrices.
inline StakeholderSpec default_stakeholders(DatasetKind d)
{
    StakeholderSpec s;
    if (d == DatasetKind::synthetic_hiring) {
        s.dm = {0.0, 0.0, -2.5, 50.0};
        s.ds = {{0.0, 0.0, -4.0, 8.0}, {0.0, 0.0, -4.0, 8.0}};
    } else {
        s.dm = {0.0, 0.0, -0.4431, 28.5473};
        s.ds = {{0.0, -1.0, -5.0, 10.0}, {0.0, -1.0, -5.0, 10.0}};
    }
    return s;
}

struct ExperimentConfig {
    DatasetKind dataset = DatasetKind::synthetic_credit;
    std::string csv_path;
    DgmConfig dgm;
    StakeholderSpec stakeholders = default_stakeholders(DatasetKind::synthetic_credit);
    GridSpec grid;
    std::vector<PolicyClass> classes{PolicyClass::deterministic, PolicyClass::stochastic};
    std::vector<Scope> scopes{Scope::shared, Scope::group_specific};
    std::vector<Space> spaces{Space::utility, Space::predictive};
    std::vector<Justice> justices{Justice::egalitarian, Justice::rawlsian};
    GroupPairing pairing = GroupPairing::same_beta;
    std::optional<SplitConfig> split;
    std::string out_dir;

    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

using nlohmann::json;

class FieldErrors {
public:
    void add(const std::string& path, const std::string& what) { items_.push_back(path + ": " + what); }
    bool empty() const { return items_.empty(); }

    [[noreturn]] void raise() const
    {
        std::string msg = "invalid config";
        for (const auto& e : items_) {
            msg += "\n  " + e;
        }
        throw ConfigError(msg);
    }

private:
    std::vector<std::string> items_;
};

inline std::string join_path(const std::string& base, const std::string& key)
{
    return base.empty() ? key : base + "." + key;
}

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<std::string_view> keys,
                           FieldErrors& errs)
{
    for (const auto& [k, v] : obj.items()) {
        bool known = false;
        for (auto key : keys) {
            known = known || key == k;
        }
        if (!known) {
            errs.add(join_path(path, k), "unknown field");
        }
    }
}

inline std::optional<double> get_number(const json& obj, const std::string& key, const std::string& path,
                                        FieldErrors& errs)
{
    if (!obj.contains(key)) {
        return std::nullopt;
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) {
        errs.add(join_path(path, key), "expected a number");
        return std::nullopt;
    }
    return v.get<double>();
}

inline std::optional<std::uint64_t> get_count(const json& obj, const std::string& key, const std::string& path,
                                              FieldErrors& errs)
{
    if (!obj.contains(key)) {
        return std::nullopt;
    }
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        errs.add(join_path(path, key), "expected a non-negative integer");
        return std::nullopt;
    }
    return v.get<std::uint64_t>();
}

inline std::optional<std::string> get_string(const json& obj, const std::string& key, const std::string& path,
                                             FieldErrors& errs)
{
    if (!obj.contains(key)) {
        return std::nullopt;
    }
    const auto& v = obj.at(key);
    if (!v.is_string()) {
        errs.add(join_path(path, key), "expected a string");
        return std::nullopt;
    }
    return v.get<std::string>();
}

inline std::optional<UtilityMatrix> parse_matrix(const json& v, const std::string& path, FieldErrors& errs)
{
    if (!v.is_array() || v.size() != 4) {
        errs.add(path, "expected 4 numbers [u00, u01, u10, u11]");
        return std::nullopt;
    }
    std::array<double, 4> a{};
    bool ok = true;
    for (std::size_t i = 0; i < 4; ++i) {
        if (!v[i].is_number()) {
            errs.add(path + "[" + std::to_string(i) + "]", "expected a number");
            ok = false;
        } else {
            a[i] = v[i].get<double>();
        }
    }
    if (!ok) {
        return std::nullopt;
    }
    return UtilityMatrix::from_array(a);
}

template <typename T, typename Parse>
std::optional<std::vector<T>> parse_names(const json& obj, const std::string& key, const std::string& path,
                                          Parse&& parse, FieldErrors& errs)
{
    if (!obj.contains(key)) {
        return std::nullopt;
    }
    const auto& v = obj.at(key);
    const auto field = join_path(path, key);
    if (!v.is_array()) {
        errs.add(field, "expected a list of names");
        return std::nullopt;
    }
    if (v.empty()) {
        errs.add(field, "must not be empty");
        return std::nullopt;
    }
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto item = field + "[" + std::to_string(i) + "]";
        if (!v[i].is_string()) {
            errs.add(item, "expected a string");
            continue;
        }
        try {
            const T t = parse(v[i].get<std::string>());
            if (std::find(out.begin(), out.end(), t) != out.end()) {
                errs.add(item, "duplicate entry");
            } else {
                out.push_back(t);
            }
        } catch (const ConfigError& e) {
            errs.add(item, e.what());
        }
    }
    return out;
}

// Runs a validate() that throws ConfigError and records the message under path.
template <typename F>
void check(const std::string& path, FieldErrors& errs, F&& f)
{
    try {
        f();
    } catch (const ConfigError& e) {
        errs.add(path, e.what());
    }
}

inline StakeholderSpec parse_stakeholders(const json& v, const std::string& path, StakeholderSpec base,
                                          FieldErrors& errs)
{
    if (!v.is_object()) {
        errs.add(path, "expected an object");
        return base;
    }
    reject_unknown(v, path, {"dm", "ds", "per_instance_dm", "eval_mode"}, errs);
    if (v.contains("dm")) {
        if (auto m = parse_matrix(v.at("dm"), join_path(path, "dm"), errs)) {
            base.dm = *m;
        }
    }
    if (v.contains("ds")) {
        const auto& ds = v.at("ds");
        const auto field = join_path(path, "ds");
        if (!ds.is_array() || ds.empty()) {
            errs.add(field, "expected a non-empty list of matrices, one per group");
        } else {
            std::vector<UtilityMatrix> out;
            for (std::size_t i = 0; i < ds.size(); ++i) {
                if (auto m = parse_matrix(ds[i], field + "[" + std::to_string(i) + "]", errs)) {
                    out.push_back(*m);
                }
            }
            if (out.size() == ds.size()) {
                base.ds = std::move(out);
            }
        }
    }
    if (v.contains("per_instance_dm")) {
        if (!v.at("per_instance_dm").is_boolean()) {
            errs.add(join_path(path, "per_instance_dm"), "expected true or false");
        } else {
            base.per_instance_dm = v.at("per_instance_dm").get<bool>();
        }
    }
    if (auto s = get_string(v, "eval_mode", path, errs)) {
        check(join_path(path, "eval_mode"), errs, [&] { base.eval_mode = parse_eval_mode(*s); });
    }
    return base;
}

} // namespace detail

/// Parses a stakeholder block on top of `base`. Errors name the offending field.
inline StakeholderSpec stakeholders_from_json(const nlohmann::json& v, const StakeholderSpec& base,
                                              const std::string& path = "stakeholders")
{
    detail::FieldErrors errs;
    auto out = detail::parse_stakeholders(v, path, base, errs);
    if (!errs.empty()) {
        errs.raise();
    }
    return out;
}

/// Builds a config from a JSON document. Every problem found is reported in
/// one ConfigError, one line per field path.
inline ExperimentConfig config_from_json(const nlohmann::json& doc)
{
    using detail::get_count;
    using detail::get_number;
    using detail::get_string;
    detail::FieldErrors errs;
    ExperimentConfig cfg;
    if (!doc.is_object()) {
        throw ConfigError("invalid config\n  (root): expected an object");
    }
    detail::reject_unknown(doc, "",
                           {"dataset", "csv_path", "dgm", "stakeholders", "grid", "classes", "scopes", "spaces",
                            "justices", "pairing", "split", "out_dir"},
                           errs);

    if (!doc.contains("dataset")) {
        errs.add("dataset", "missing required field");
    } else if (auto d = get_string(doc, "dataset", "", errs)) {
        detail::check("dataset", errs, [&] { cfg.dataset = parse_dataset(*d); });
    }
    if (auto p = get_string(doc, "csv_path", "", errs)) {
        cfg.csv_path = *p;
    }
    if (cfg.dataset == DatasetKind::csv && cfg.csv_path.empty()) {
        errs.add("csv_path", "missing required field for dataset csv");
    }

    if (doc.contains("dgm")) {
        const auto& d = doc.at("dgm");
        if (!d.is_object()) {
            errs.add("dgm", "expected an object");
        } else {
            detail::reject_unknown(d, "dgm", {"n", "seed", "bias", "beta_l", "delta", "rate", "marginalize_noise"},
                                   errs);
            if (auto v = get_count(d, "n", "dgm", errs)) {
                cfg.dgm.n = static_cast<std::size_t>(*v);
            }
            if (auto v = get_count(d, "seed", "dgm", errs)) {
                cfg.dgm.seed = *v;
            }
            if (auto v = get_number(d, "bias", "dgm", errs)) {
                cfg.dgm.bias = *v;
            }
            if (auto v = get_number(d, "beta_l", "dgm", errs)) {
                cfg.dgm.beta_l = *v;
            }
            if (auto v = get_number(d, "delta", "dgm", errs)) {
                cfg.dgm.delta = *v;
            }
            if (auto v = get_number(d, "rate", "dgm", errs)) {
                cfg.dgm.rate = *v;
            }
            if (d.contains("marginalize_noise")) {
                if (!d.at("marginalize_noise").is_boolean()) {
                    errs.add("dgm.marginalize_noise", "expected true or false");
                } else {
                    cfg.dgm.marginalize_noise = d.at("marginalize_noise").get<bool>();
                }
            }
            if (cfg.dgm.n < 1) {
                errs.add("dgm.n", "must be >= 1");
            }
            if (!(cfg.dgm.bias > 0.0 && cfg.dgm.bias < 1.0)) {
                errs.add("dgm.bias", "must lie in (0,1)");
            }
        }
    }

    cfg.stakeholders = default_stakeholders(cfg.dataset);
    if (doc.contains("stakeholders")) {
        cfg.stakeholders = detail::parse_stakeholders(doc.at("stakeholders"), "stakeholders", cfg.stakeholders, errs);
        if (cfg.dataset != DatasetKind::csv && cfg.stakeholders.ds.size() != 2) {
            errs.add("stakeholders.ds", "synthetic populations have 2 groups, got " +
                                            std::to_string(cfg.stakeholders.ds.size()) + " matrices");
        }
    }

    if (doc.contains("grid")) {
        const auto& g = doc.at("grid");
        if (!g.is_object()) {
            errs.add("grid", "expected an object");
        } else {
            detail::reject_unknown(g, "grid", {"threshold_count", "threshold_lo", "threshold_hi", "betas"}, errs);
            if (auto v = get_count(g, "threshold_count", "grid", errs)) {
                cfg.grid.threshold_count = static_cast<std::size_t>(*v);
            }
            if (auto v = get_number(g, "threshold_lo", "grid", errs)) {
                cfg.grid.threshold_lo = *v;
            }
            if (auto v = get_number(g, "threshold_hi", "grid", errs)) {
                cfg.grid.threshold_hi = *v;
            }
            if (g.contains("betas")) {
                const auto& b = g.at("betas");
                if (!b.is_array()) {
                    errs.add("grid.betas", "expected a list of numbers");
                } else {
                    std::vector<double> betas;
                    for (std::size_t i = 0; i < b.size(); ++i) {
                        if (!b[i].is_number()) {
                            errs.add("grid.betas[" + std::to_string(i) + "]", "expected a number");
                        } else {
                            betas.push_back(b[i].get<double>());
                        }
                    }
                    cfg.grid.betas = betas;
                }
            }
            detail::check("grid", errs, [&] { cfg.grid.validate(); });
        }
    }

    if (auto v = detail::parse_names<PolicyClass>(doc, "classes", "", parse_policy_class, errs)) {
        cfg.classes = *v;
    }
    if (auto v = detail::parse_names<Scope>(doc, "scopes", "", parse_scope, errs)) {
        cfg.scopes = *v;
    }
    if (auto v = detail::parse_names<Space>(doc, "spaces", "", parse_space, errs)) {
        cfg.spaces = *v;
    }
    if (auto v = detail::parse_names<Justice>(doc, "justices", "", parse_justice, errs)) {
        cfg.justices = *v;
    }
    if (auto p = get_string(doc, "pairing", "", errs)) {
        detail::check("pairing", errs, [&] { cfg.pairing = parse_pairing(*p); });
    }
    if (doc.contains("split") && !doc.at("split").is_null()) {
        const auto& s = doc.at("split");
        if (!s.is_object()) {
            errs.add("split", "expected an object or null");
        } else {
            detail::reject_unknown(s, "split", {"train_fraction", "seed"}, errs);
            SplitConfig sc;
            if (auto v = get_number(s, "train_fraction", "split", errs)) {
                sc.train_fraction = *v;
            }
            if (auto v = get_count(s, "seed", "split", errs)) {
                sc.seed = *v;
            }
            if (!(sc.train_fraction > 0.0 && sc.train_fraction < 1.0)) {
                errs.add("split.train_fraction", "must lie in (0,1)");
            }
            cfg.split = sc;
        }
    }
    if (auto p = get_string(doc, "out_dir", "", errs)) {
        cfg.out_dir = *p;
    }
    if (!errs.empty()) {
        errs.raise();
    }
    return cfg;
}

inline nlohmann::json to_json(const UtilityMatrix& m) { return nlohmann::json::array({m.u00, m.u01, m.u10, m.u11}); }

inline nlohmann::json to_json(const StakeholderSpec& s)
{
    nlohmann::json ds = nlohmann::json::array();
    for (const auto& m : s.ds) {
        ds.push_back(to_json(m));
    }
    return {{"dm", to_json(s.dm)},
            {"ds", ds},
            {"per_instance_dm", s.per_instance_dm},
            {"eval_mode", std::string(to_string(s.eval_mode))}};
}

template <typename T>
nlohmann::json names_json(const std::vector<T>& xs)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& x : xs) {
        out.push_back(std::string(to_string(x)));
    }
    return out;
}

/// Complete document with every default filled in.
inline nlohmann::json to_json(const ExperimentConfig& cfg)
{
    nlohmann::json doc;
    doc["dataset"] = std::string(to_string(cfg.dataset));
    if (cfg.dataset == DatasetKind::csv) {
        doc["csv_path"] = cfg.csv_path;
    } else {
        doc["dgm"] = {{"n", cfg.dgm.n},
                      {"seed", cfg.dgm.seed},
                      {"bias", cfg.dgm.bias},
                      {"beta_l", cfg.dgm.beta_l},
                      {"delta", cfg.dgm.delta},
                      {"rate", cfg.dgm.rate},
                      {"marginalize_noise", cfg.dgm.marginalize_noise}};
    }
    doc["stakeholders"] = to_json(cfg.stakeholders);
    doc["grid"] = {{"threshold_count", cfg.grid.threshold_count},
                   {"threshold_lo", cfg.grid.threshold_lo},
                   {"threshold_hi", cfg.grid.threshold_hi},
                   {"betas", cfg.grid.betas}};
    doc["classes"] = names_json(cfg.classes);
    doc["scopes"] = names_json(cfg.scopes);
    doc["spaces"] = names_json(cfg.spaces);
    doc["justices"] = names_json(cfg.justices);
    doc["pairing"] = std::string(to_string(cfg.pairing));
    if (cfg.split) {
        doc["split"] = {{"train_fraction", cfg.split->train_fraction}, {"seed", cfg.split->seed}};
    } else {
        doc["split"] = nullptr;
    }
    doc["out_dir"] = cfg.out_dir;
    return doc;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(doc);
}

inline std::string read_file_bytes(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Digest of everything that determines the sweep's numbers: the config
/// without out_dir, plus the bytes of an ingested score file.
inline std::string config_hash(const ExperimentConfig& cfg)
{
    auto doc = to_json(cfg);
    doc.erase("out_dir");
    std::string text = doc.dump();
    if (cfg.dataset == DatasetKind::csv) {
        text += "\ncsv:" + hex64(fnv1a64(read_file_bytes(cfg.csv_path)));
    }
    return hex64(fnv1a64(text));
}

} // namespace fairfront
