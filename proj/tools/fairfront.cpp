#include "fairfront/fairfront.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace fairfront;
namespace fs = std::filesystem;

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_data = 3;
constexpr int exit_internal = 4;

std::string output_root()
{
    if (const char* env = std::getenv("FAIRFRONT_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    return "fairfront-out";
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

// Config options shared by sweep and ablate. Inline flags override the file.
struct ConfigFlags {
    std::string config_path;
    std::string dataset;
    std::string csv_path;
    std::optional<std::size_t> n;
    std::optional<std::uint64_t> seed;
    std::optional<double> bias;
    std::optional<double> delta;
    std::optional<double> beta_l;
    std::string classes;
    std::string scopes;
    std::string spaces;
    std::string justices;
    std::string pairing;
    std::optional<std::size_t> thresholds;
    std::string betas;
    std::optional<double> split_fraction;
    std::optional<std::uint64_t> split_seed;
    std::string out_dir;

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--dataset", dataset, "synthetic_credit | synthetic_hiring | csv");
        cmd->add_option("--csv", csv_path, "score file for --dataset csv");
        cmd->add_option("--n", n, "synthetic sample count");
        cmd->add_option("--seed", seed, "synthetic generation seed");
        cmd->add_option("--bias", bias, "P(G = 1)");
        cmd->add_option("--delta", delta, "credit repayment coefficient");
        cmd->add_option("--beta-l", beta_l, "credit savings -> loan coefficient");
        cmd->add_option("--classes", classes, "comma list of det, stoch");
        cmd->add_option("--scopes", scopes, "comma list of shared, group");
        cmd->add_option("--spaces", spaces, "comma list of utility, predictive");
        cmd->add_option("--justices", justices, "comma list of egal, rawls");
        cmd->add_option("--pairing", pairing, "same_beta | full_cross");
        cmd->add_option("--thresholds", thresholds, "threshold grid size");
        cmd->add_option("--betas", betas, "comma list of sharpness values");
        cmd->add_option("--split", split_fraction, "train fraction; enables a test split");
        cmd->add_option("--split-seed", split_seed, "split seed");
        cmd->add_option("--out", out_dir, "result directory");
    }

    ExperimentConfig build() const
    {
        nlohmann::json doc = nlohmann::json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                throw ConfigError("cannot open config file '" + config_path + "'");
            }
            try {
                doc = nlohmann::json::parse(in);
            } catch (const nlohmann::json::parse_error& e) {
                throw ConfigError("config file '" + config_path + "' is not valid JSON: " + e.what());
            }
        }
        if (!dataset.empty()) {
            doc["dataset"] = dataset;
        }
        if (!csv_path.empty()) {
            doc["csv_path"] = csv_path;
            if (!doc.contains("dataset")) {
                doc["dataset"] = "csv";
            }
        }
        const auto dgm = [&doc](const char* key, const auto& v) {
            if (v) {
                doc["dgm"][key] = *v;
            }
        };
        dgm("n", n);
        dgm("seed", seed);
        dgm("bias", bias);
        dgm("delta", delta);
        dgm("beta_l", beta_l);
        const auto names = [&doc](const char* key, const std::string& v) {
            if (!v.empty()) {
                doc[key] = split_list(v);
            }
        };
        names("classes", classes);
        names("scopes", scopes);
        names("spaces", spaces);
        names("justices", justices);
        if (!pairing.empty()) {
            doc["pairing"] = pairing;
        }
        if (thresholds) {
            doc["grid"]["threshold_count"] = *thresholds;
        }
        if (!betas.empty()) {
            std::vector<double> bs;
            for (const auto& b : split_list(betas)) {
                try {
                    bs.push_back(parse_double(b));
                } catch (const std::exception&) {
                    throw ConfigError("invalid config\n  grid.betas: '" + b + "' is not a number");
                }
            }
            doc["grid"]["betas"] = bs;
        }
        if (split_fraction) {
            doc["split"]["train_fraction"] = *split_fraction;
        }
        if (split_seed) {
            doc["split"]["seed"] = *split_seed;
        }
        if (!out_dir.empty()) {
            doc["out_dir"] = out_dir;
        }
        auto cfg = config_from_json(doc);
        if (cfg.out_dir.empty()) {
            cfg.out_dir = (fs::path(output_root()) / config_hash(cfg)).string();
        }
        return cfg;
    }
};

std::string fixed(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

void print_table(std::ostream& out, const ExperimentConfig& cfg, const FrontSet& fs, SplitTag split)
{
    std::vector<PolicyClass> classes;
    for (PolicyClass c : {PolicyClass::deterministic, PolicyClass::stochastic}) {
        if (std::find(cfg.classes.begin(), cfg.classes.end(), c) != cfg.classes.end()) {
            classes.push_back(c);
        }
    }
    out << "nHV, utility space, " << to_string(split) << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-8s", "scope");
    out << buf;
    for (Justice j : cfg.justices) {
        for (PolicyClass c : classes) {
            std::snprintf(buf, sizeof buf, " %12s", (std::string(to_string(j)) + "." + std::string(to_string(c))).c_str());
            out << buf;
        }
        if (classes.size() == 2) {
            std::snprintf(buf, sizeof buf, " %12s", (std::string(to_string(j)) + ".auc").c_str());
            out << buf;
        }
    }
    out << "\n";
    for (Scope s : cfg.scopes) {
        std::snprintf(buf, sizeof buf, "%-8s", std::string(to_string(s)).c_str());
        out << buf;
        for (Justice j : cfg.justices) {
            for (PolicyClass c : classes) {
                const CellMetrics* m = fs.cell_metrics({Space::utility, j, c, s, split});
                std::snprintf(buf, sizeof buf, " %12s", m ? fixed(m->nhv).c_str() : "-");
                out << buf;
            }
            if (classes.size() == 2) {
                const Comparison* cmp = fs.comparison(comparison_name(Space::utility, j, s, split));
                std::snprintf(buf, sizeof buf, " %12s",
                              cmp && cmp->auc ? fixed(*cmp->auc).c_str() : "undefined");
                out << buf;
            }
        }
        out << "\n";
    }
}

int cmd_gen(const std::string& dataset, const DgmConfig& dgm, const std::string& out_path)
{
    const DatasetKind kind = parse_dataset(dataset);
    if (kind == DatasetKind::csv) {
        throw ConfigError("gen --dataset must be credit or hiring");
    }
    if (dgm.n < 1) {
        throw ConfigError("n must be >= 1");
    }
    const Population pop = kind == DatasetKind::synthetic_credit ? gen_synthetic_credit(dgm) : gen_synthetic_hiring(dgm);
    export_csv(pop, out_path);
    double positives = 0;
    for (const auto& ind : pop.individuals()) {
        positives += ind.outcome.value_or(0);
    }
    std::cout << "n\t" << pop.size() << "\n";
    for (std::size_t g = 0; g < pop.group_count(); ++g) {
        std::cout << "group " << pop.group_labels()[g] << "\t" << pop.group_size(g) << "\n";
    }
    std::cout << "base_rate\t" << fixed(positives / static_cast<double>(pop.size())) << "\n";
    std::cout << "written\t" << out_path << "\n";
    return exit_ok;
}

int cmd_sweep(const ConfigFlags& flags, std::size_t workers)
{
    const ExperimentConfig cfg = flags.build();
    const ExperimentRun run = run_experiment(cfg, workers);
    for (const auto& n : run.fronts.notices) {
        std::cerr << "notice: " << n << "\n";
    }
    print_table(std::cout, cfg, run.fronts, SplitTag::train);
    if (run.sweep.has_split(SplitTag::test)) {
        print_table(std::cout, cfg, run.fronts, SplitTag::test);
    }
    std::cout << "results\t" << cfg.out_dir << "\n";
    return exit_ok;
}

int cmd_ablate(const ConfigFlags& flags, const std::string& ratios_text, const std::string& alignment,
               const std::string& out_path, std::size_t workers)
{
    ExperimentConfig cfg = flags.build();
    std::vector<double> ratios;
    for (const auto& r : split_list(ratios_text)) {
        try {
            ratios.push_back(parse_double(r));
        } catch (const std::exception&) {
            throw ConfigError("ratio '" + r + "' is not a number");
        }
    }
    std::vector<Alignment> alignments;
    if (alignment == "both") {
        alignments = {Alignment::aligned, Alignment::misaligned};
    } else {
        alignments = {parse_alignment(alignment)};
    }
    const auto rows = run_ablation(cfg, ratios, alignments, workers);
    const std::string path =
        out_path.empty() ? (fs::path(output_root()) / ("ablation." + config_hash(cfg) + ".tsv")).string() : out_path;
    if (fs::path(path).has_parent_path()) {
        fs::create_directories(fs::path(path).parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    write_ablation(out, rows);
    if (!out) {
        throw Error("cannot write '" + path + "'");
    }
    write_ablation(std::cout, rows);
    std::cerr << "written " << path << "\n";
    return exit_ok;
}

int cmd_project(const std::string& dir, const std::string& out_arg)
{
    const ExperimentConfig cfg = load_result_config(dir);
    const bool has_pred = std::find(cfg.spaces.begin(), cfg.spaces.end(), Space::predictive) != cfg.spaces.end();
    const bool has_util = std::find(cfg.spaces.begin(), cfg.spaces.end(), Space::utility) != cfg.spaces.end();
    if (!has_pred || !has_util) {
        throw ConfigError("sweep in '" + dir +
                          "' lacks the predictive or utility space; rerun sweep with --spaces utility,predictive");
    }
    const SweepResult sweep = load_results(dir);
    const FrontSet fset = extract_fronts(sweep, cfg);
    const fs::path out = out_arg.empty() ? fs::path(dir) / "projection" : fs::path(out_arg);
    fs::create_directories(out);

    for (const auto& n : fset.notices) {
        std::cerr << "notice: " << n << "\n";
    }
    std::ofstream anchors_file(out / "anchors", std::ios::binary);
    anchors_file << "comparison\tutopia_x\tutopia_y\tnadir_x\tnadir_y\treference_x\treference_y\n";
    for (const auto& c : fset.comparisons) {
        if (c.name.rfind("projection.", 0) != 0) {
            continue;
        }
        anchors_file << c.name;
        const auto& a = c.anchors;
        for (double v : {a.utopia.x, a.utopia.y, a.nadir.x, a.nadir.y, a.reference.x, a.reference.y}) {
            anchors_file << '\t' << format_double(v);
        }
        anchors_file << '\n';
    }
    std::ofstream summary(out / "summary", std::ios::binary);
    summary << "cell\tcomparison\tnhv_projected\tnhv_utility\n";
    for (const auto& p : fset.projections) {
        const std::string tag = std::string(to_string(p.justice)) + "." + std::string(to_string(p.cls)) + "." +
                                std::string(to_string(p.scope)) + "." + std::string(to_string(p.split));
        const auto write = [&](const std::string& prefix, const Front& f) {
            std::ofstream file(out / (prefix + "." + tag), std::ios::binary);
            write_front(file, f, sweep, p.split);
        };
        write("pred", p.predictive);
        write("proj", p.projected);
        write("util", p.utility);
        summary << tag << '\t' << p.comparison << '\t' << format_double(p.nhv_projected) << '\t'
                << format_double(p.nhv_utility) << '\n';
        std::cout << tag << "\tprojected " << fixed(p.nhv_projected) << "\tutility " << fixed(p.nhv_utility) << "\n";
    }
    if (!anchors_file || !summary) {
        throw Error("cannot write projection files under '" + out.string() + "'");
    }
    std::cerr << "written " << out.string() << "\n";
    return exit_ok;
}

int cmd_eval(const ConfigFlags& flags, const std::string& policy_path)
{
    const ExperimentConfig cfg = flags.build();
    std::ifstream in(policy_path);
    if (!in) {
        throw ConfigError("cannot open policy file '" + policy_path + "'");
    }
    PolicyParams policy;
    try {
        const auto j = nlohmann::json::parse(in);
        policy = make_policy(parse_policy_class(j.at("class").get<std::string>()),
                             parse_scope(j.at("scope").get<std::string>()), j.at("gamma").get<std::vector<double>>(),
                             j.value("beta", std::vector<double>{}));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("policy record: ") + e.what());
    }
    Population pop = load_population(cfg);
    if (cfg.split) {
        pop = split(pop, cfg.split->train_fraction, cfg.split->seed).first;
    }
    const UtilityVector u = eval_utilities(pop, policy, cfg.stakeholders);
    nlohmann::json out = {{"policy", policy_json(policy)},
                          {"u_dm", u.u_dm},
                          {"u_ds", u.u_ds},
                          {"u_sp_egal", u.u_sp_egal},
                          {"u_sp_rawls", u.u_sp_rawls},
                          {"accuracy", accuracy(pop, policy, cfg.stakeholders.eval_mode)}};
    try {
        out["eo"] = eo_disparity(pop, policy, cfg.stakeholders.eval_mode);
    } catch (const MetricError&) {
        out["eo"] = nullptr;
    }
    std::cout << out.dump() << "\n";
    return exit_ok;
}

int cmd_serve(const std::string& root, const std::string& host, int port, std::size_t workers, std::size_t cap)
{
    fs::create_directories(root);
    Service service(root, workers, cap);
    httplib::Server server;
    service.bind(server);
    std::cerr << "serving " << root << " on " << host << ":" << port << "\n";
    if (!server.listen(host, port)) {
        throw Error("cannot listen on " + host + ":" + std::to_string(port));
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Utility-space fairness trade-off engine"};
    app.require_subcommand(1);
    std::size_t workers = 1;
    app.add_option("--workers", workers, "worker threads for sweeps")->check(CLI::PositiveNumber);

    auto* gen = app.add_subcommand("gen", "generate a synthetic population file");
    std::string gen_dataset;
    std::string gen_out;
    DgmConfig dgm;
    gen->add_option("--dataset", gen_dataset, "credit | hiring")->required();
    gen->add_option("--n", dgm.n, "sample count");
    gen->add_option("--seed", dgm.seed, "generation seed");
    gen->add_option("--bias", dgm.bias, "P(G = 1)");
    gen->add_option("--delta", dgm.delta, "credit repayment coefficient");
    gen->add_option("--beta-l", dgm.beta_l, "credit savings -> loan coefficient");
    gen->add_option("--rate", dgm.rate, "credit interest rate");
    bool raw_probability = false;
    gen->add_flag("--noiseless", raw_probability, "credit: score is the noiseless sigmoid");
    gen->add_option("--out", gen_out, "output CSV")->required();

    auto* sweep = app.add_subcommand("sweep", "run a policy sweep and write the result directory");
    ConfigFlags sweep_flags;
    sweep_flags.attach(sweep);

    auto* ablate = app.add_subcommand("ablate", "stochastic gain against DM asymmetry and alignment");
    ConfigFlags ablate_flags;
    ablate_flags.attach(ablate);
    std::string ratios = "0.5,1,2,4,8,16,32,64";
    std::string alignment = "both";
    std::string ablate_out;
    ablate->add_option("--ratios", ratios, "comma list of |u11|/|u10| values");
    ablate->add_option("--alignment", alignment, "aligned | misaligned | both");
    ablate->add_option("--table", ablate_out, "output table path");

    auto* project = app.add_subcommand("project", "write predictive, projected and utility fronts");
    std::string project_dir;
    std::string project_out;
    project->add_option("--dir", project_dir, "sweep result directory")->required();
    project->add_option("--out", project_out, "output directory (default <dir>/projection)");

    auto* eval = app.add_subcommand("eval", "evaluate one exported policy record");
    ConfigFlags eval_flags;
    eval_flags.attach(eval);
    std::string policy_path;
    eval->add_option("--policy", policy_path, "policy JSON record")->required();

    auto* serve = app.add_subcommand("serve", "HTTP API over result directories");
    std::string root = output_root();
    std::string host = "127.0.0.1";
    int port = 8080;
    if (const char* env = std::getenv("FAIRFRONT_PORT"); env != nullptr && *env != '\0') {
        port = std::atoi(env);
    }
    std::size_t cap = default_policy_cap;
    serve->add_option("--root", root, "result root directory");
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "port");
    serve->add_option("--max-policies", cap, "largest accepted grid");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*gen) {
            dgm.marginalize_noise = !raw_probability;
            return cmd_gen(gen_dataset, dgm, gen_out);
        }
        if (*sweep) {
            return cmd_sweep(sweep_flags, workers);
        }
        if (*ablate) {
            return cmd_ablate(ablate_flags, ratios, alignment, ablate_out, workers);
        }
        if (*project) {
            return cmd_project(project_dir, project_out);
        }
        if (*eval) {
            return cmd_eval(eval_flags, policy_path);
        }
        if (*serve) {
            return cmd_serve(root, host, port, workers, cap);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_data;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
    return exit_internal;
}
