// Command-line front end: train / analyze / synth / hopsweep.
//
// Exit codes: 0 success, 1 user/config error (bad flags, malformed input
// files, out-of-range hops), 2 numerical failure (non-finite loss).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fgcn/fgcn.hpp"

namespace fs = std::filesystem;
using fgcn::json;

namespace {

struct RunConfig {
    std::string model = "fgcn";
    int hops = 2;
    int hidden_dim = 64;
    double dropout = 0.5;
    double l2 = 5e-4;
    double lr = 1e-2;
    int max_epochs = 2000;
    int min_epochs = 50;
    int patience = 30;
    std::uint64_t seed = 1;
    std::string data;
    std::string out;
    std::string scheme = "shared";
    double alpha = 1.0;
    // sbm knobs (synth and sbm: specs)
    int blocks = 4;
    int nodes_per_block = 50;
    double p_in = 0.15;
    double p_out = 0.02;
    double noise = 0.0;
    std::string label_rule = "node";
};

json run_config_json(const RunConfig& rc) {
    return json{{"model", rc.model},
                {"hops", rc.hops},
                {"hidden_dim", rc.hidden_dim},
                {"dropout", rc.dropout},
                {"l2", rc.l2},
                {"lr", rc.lr},
                {"max_epochs", rc.max_epochs},
                {"min_epochs", rc.min_epochs},
                {"patience", rc.patience},
                {"seed", rc.seed},
                {"data", rc.data},
                {"out", rc.out},
                {"scheme", rc.scheme}};
}

fgcn::SbmConfig parse_sbm_spec(const std::string& spec, std::uint64_t default_seed) {
    fgcn::SbmConfig cfg;
    cfg.seed = default_seed;
    std::string body = spec.substr(4);  // past "sbm:"
    std::istringstream ss(body);
    std::string kv;
    while (std::getline(ss, kv, ',')) {
        if (kv.empty()) continue;
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("sbm spec entry \"" + kv + "\" is not key=value");
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        try {
            if (key == "blocks") cfg.blocks = std::stoi(val);
            else if (key == "nodes_per_block") cfg.nodes_per_block = std::stoi(val);
            else if (key == "p_in") cfg.p_in = std::stod(val);
            else if (key == "p_out") cfg.p_out = std::stod(val);
            else if (key == "noise") cfg.feature_noise = std::stod(val);
            else if (key == "rule") cfg.label_rule = fgcn::label_rule_from_string(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else throw std::invalid_argument("unknown sbm spec key \"" + key + "\"");
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("bad sbm spec value for \"" + key + "\": " + val);
        }
    }
    return cfg;
}

fgcn::Dataset resolve_dataset(const RunConfig& rc) {
    if (rc.data.empty()) throw std::invalid_argument("--data is required");
    if (rc.data.rfind("sbm:", 0) == 0) return fgcn::generate_sbm(parse_sbm_spec(rc.data, rc.seed));
    return fgcn::load_dataset(rc.data);
}

fgcn::ModelConfig model_config(const RunConfig& rc, const fgcn::Dataset& ds) {
    fgcn::ModelConfig cfg;
    cfg.kind = fgcn::model_kind_from_string(rc.model);
    cfg.hops = rc.hops;
    cfg.input_dim = ds.X.cols;
    cfg.hidden_dim = rc.hidden_dim;
    cfg.label_dim = ds.Y.cols;
    cfg.multilabel = ds.multilabel;
    cfg.dropout = rc.dropout;
    fgcn::validate(cfg);
    return cfg;
}

fgcn::Hyper hyper_config(const RunConfig& rc) {
    if (rc.lr <= 0.0) throw std::invalid_argument("--lr must be positive");
    if (rc.l2 < 0.0) throw std::invalid_argument("--l2 must be non-negative");
    if (rc.max_epochs < 1 || rc.min_epochs < 0 || rc.patience < 1)
        throw std::invalid_argument("epoch/patience settings must be positive");
    fgcn::Hyper h;
    h.lr = rc.lr;
    h.l2 = rc.l2;
    h.max_epochs = rc.max_epochs;
    h.min_epochs = rc.min_epochs;
    h.patience = rc.patience;
    return h;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

int cmd_train(const RunConfig& rc) {
    if (rc.out.empty()) throw std::invalid_argument("--out is required");
    const fgcn::Dataset ds = resolve_dataset(rc);
    const fgcn::ModelConfig cfg = model_config(rc, ds);
    const fgcn::Hyper hyper = hyper_config(rc);

    const fgcn::ProtocolReport report = fgcn::run_protocol(cfg, ds, rc.seed, hyper);

    fs::create_directories(rc.out);
    json jr = to_json(report);
    jr["run"] = run_config_json(rc);
    write_text(fs::path(rc.out) / "report.json", jr.dump(2) + "\n");
    write_text(fs::path(rc.out) / "report.csv", protocol_csv(report));

    std::cout << "dataset " << ds.name << ": " << ds.num_nodes() << " nodes, model " << rc.model
              << ", hops " << rc.hops << ", seed " << rc.seed << "\n";
    double wall = 0.0;
    for (std::size_t i = 0; i < report.splits.size(); ++i) {
        const fgcn::TrainReport& tr = report.splits[i];
        std::cout << "split " << (i + 1) << ": stopped epoch " << tr.stopped_epoch << ", best "
                  << tr.best_epoch << ", test micro-F1 " << tr.test_micro_f1 << "\n";
        wall += tr.wall_clock_seconds;
    }
    std::cout << "mean test micro-F1 " << report.mean_test_micro_f1 << " (" << wall
              << "s trained)\n";
    std::cout << "wrote " << (fs::path(rc.out) / "report.json").string() << " and report.csv\n";
    return 0;
}

int cmd_analyze(const RunConfig& rc) {
    namespace kn = fgcn::kernel;
    const kn::Scheme scheme = kn::scheme_from_string(rc.scheme);
    const kn::PathTable table = kn::enumerate_paths(rc.hops);  // also enforces the hop range

    json echo{{"command", "analyze"}, {"scheme", rc.scheme}, {"hops", rc.hops}, {"alpha", rc.alpha}};
    std::cout << "config: " << echo.dump() << "\n";

    kn::HopPolynomial poly;
    switch (scheme) {
        case kn::Scheme::shared: poly = kn::expand_shared(rc.hops, rc.alpha); break;
        case kn::Scheme::shared_skip: poly = kn::expand_skip(rc.hops); break;
        case kn::Scheme::non_shared: poly = kn::expand_non_shared(rc.hops); break;
    }

    std::cout << "hop coefficient table (scheme=" << kn::to_string(scheme) << ", K=" << rc.hops
              << ", alpha=" << rc.alpha << "):\n";
    std::cout << "hop,alpha_power,coefficient,terms\n";
    const bool list_terms = rc.hops <= 6;
    std::ostringstream coeffs;
    for (int k = 0; k <= rc.hops; ++k) {
        const auto it = poly.terms.find(k);
        std::cout << k << "," << poly.alpha_power[k] << "," << poly.coefficient_total(k) << ",";
        if (list_terms && it != poly.terms.end()) {
            for (std::size_t i = 0; i < it->second.size(); ++i)
                std::cout << (i ? " + " : "") << kn::to_string(it->second[i]);
        } else {
            std::cout << "...";
        }
        std::cout << "\n";
        coeffs << (k ? "," : "") << poly.numeric_coefficient(k);
    }
    std::cout << "coefficients: " << coeffs.str() << "\n";

    std::cout << "path table (K=" << rc.hops << "):\n";
    std::cout << "hop,identity_count,fa_count,paths\n";
    for (const kn::PathRow& r : table.rows)
        std::cout << r.hop << "," << r.identity_count << "," << r.fa_count << "," << r.paths
                  << "\n";
    std::cout << "total paths: " << table.total_paths() << "\n";

    if (rc.hops <= 6 && !(scheme == kn::Scheme::shared_skip && rc.hops < 2)) {
        std::cout << "achievable hop subsets (scheme=" << kn::to_string(scheme)
                  << ", K=" << rc.hops << "):\n";
        for (kn::HopSubset s : kn::reachable_hop_subsets(rc.hops, scheme))
            std::cout << kn::subset_to_string(s, rc.hops) << "\n";
    } else {
        std::cout << "achievable hop subsets: skipped (exhaustive search is limited to K<=6)\n";
    }
    return 0;
}

int cmd_synth(const RunConfig& rc) {
    if (rc.out.empty()) throw std::invalid_argument("--out is required");
    fgcn::SbmConfig cfg;
    cfg.blocks = rc.blocks;
    cfg.nodes_per_block = rc.nodes_per_block;
    cfg.p_in = rc.p_in;
    cfg.p_out = rc.p_out;
    cfg.feature_noise = rc.noise;
    cfg.label_rule = fgcn::label_rule_from_string(rc.label_rule);
    cfg.seed = rc.seed;

    const fgcn::Dataset ds = fgcn::generate_sbm(cfg);
    json generator{{"command", "synth"},
                   {"blocks", cfg.blocks},
                   {"nodes_per_block", cfg.nodes_per_block},
                   {"p_in", cfg.p_in},
                   {"p_out", cfg.p_out},
                   {"noise", cfg.feature_noise},
                   {"label_rule", fgcn::to_string(cfg.label_rule)},
                   {"seed", cfg.seed}};
    fgcn::save_dataset(ds, rc.out, json{{"generator", generator}});

    int edges = 0;
    for (int i = 0; i < ds.num_nodes(); ++i) edges += ds.graph.degree(i);
    std::cout << "wrote dataset " << ds.name << " (" << ds.num_nodes() << " nodes, "
              << edges / 2 << " edges) to " << rc.out << "\n";
    return 0;
}

int cmd_hopsweep(const RunConfig& rc, int hops_min, int hops_max) {
    if (rc.out.empty()) throw std::invalid_argument("--out is required");
    if (hops_min < 1 || hops_max < hops_min)
        throw std::invalid_argument("--hops-min/--hops-max must satisfy 1 <= min <= max");
    const fgcn::Dataset ds = resolve_dataset(rc);
    const fgcn::Hyper hyper = hyper_config(rc);

    json echo = run_config_json(rc);
    echo["hops_min"] = hops_min;
    echo["hops_max"] = hops_max;

    std::ostringstream csv;
    csv << "# " << echo.dump() << "\n";
    csv << "model,hops,mean_test_micro_f1\n";
    for (int k = hops_min; k <= hops_max; ++k) {
        RunConfig step = rc;
        step.hops = k;
        const fgcn::ModelConfig cfg = model_config(step, ds);
        const fgcn::ProtocolReport report = fgcn::run_protocol(cfg, ds, rc.seed, hyper);
        csv << rc.model << "," << k << ","
            << fgcn::detail::shortest(report.mean_test_micro_f1) << "\n";
        std::cout << "hops " << k << ": mean test micro-F1 " << report.mean_test_micro_f1
                  << "\n";
    }
    const fs::path out_path(rc.out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_text(out_path, csv.str());
    std::cout << "wrote " << rc.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph propagation models: training protocol, kernel analysis, synthetic data"};
    app.require_subcommand(1);
    app.set_config("--config");

    RunConfig rc;
    int hops_min = 1, hops_max = 4;

    auto add_model_flags = [&](CLI::App* sub) {
        sub->add_option("--model", rc.model, "node_mlp|gcn|gcn_skip|gs_mean|gs_max|fgcn");
        sub->add_option("--hops", rc.hops, "propagation depth K");
        sub->add_option("--hidden-dim", rc.hidden_dim, "hidden width");
        sub->add_option("--dropout", rc.dropout, "dropout rate in [0,1)");
        sub->add_option("--l2", rc.l2, "L2 regularization strength");
        sub->add_option("--lr", rc.lr, "Adam learning rate");
        sub->add_option("--max-epochs", rc.max_epochs, "epoch cap");
        sub->add_option("--min-epochs", rc.min_epochs, "epochs before patience may stop");
        sub->add_option("--patience", rc.patience, "initial patience window");
    };
    auto add_sbm_flags = [&](CLI::App* sub) {
        sub->add_option("--blocks", rc.blocks, "number of blocks");
        sub->add_option("--nodes-per-block", rc.nodes_per_block, "nodes per block");
        sub->add_option("--p-in", rc.p_in, "intra-block edge probability");
        sub->add_option("--p-out", rc.p_out, "inter-block edge probability");
        sub->add_option("--noise", rc.noise, "feature noise scale");
        sub->add_option("--label-rule", rc.label_rule, "node|one_hop|two_hop");
    };

    CLI::App* train = app.add_subcommand("train", "run the 5-split protocol and write reports");
    add_model_flags(train);
    train->add_option("--seed", rc.seed, "protocol seed");
    train->add_option("--data", rc.data, "dataset directory or sbm:key=value spec");
    train->add_option("--out", rc.out, "output directory for report.json/report.csv");

    CLI::App* analyze = app.add_subcommand("analyze", "symbolic kernel analysis");
    analyze->add_option("--hops", rc.hops, "kernel depth K");
    analyze->add_option("--scheme", rc.scheme, "shared|skip|non_shared");
    analyze->add_option("--alpha", rc.alpha, "node-term scale for the shared expansion");

    CLI::App* synth = app.add_subcommand("synth", "generate a stochastic block model dataset");
    add_sbm_flags(synth);
    synth->add_option("--seed", rc.seed, "generator seed");
    synth->add_option("--out", rc.out, "dataset directory to write");

    CLI::App* sweep = app.add_subcommand("hopsweep", "protocol runs across a hop range");
    add_model_flags(sweep);
    sweep->add_option("--seed", rc.seed, "protocol seed");
    sweep->add_option("--data", rc.data, "dataset directory or sbm:key=value spec");
    sweep->add_option("--out", rc.out, "CSV file to write");
    sweep->add_option("--hops-min", hops_min, "first hop count");
    sweep->add_option("--hops-max", hops_max, "last hop count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(train)) return cmd_train(rc);
        if (app.got_subcommand(analyze)) return cmd_analyze(rc);
        if (app.got_subcommand(synth)) return cmd_synth(rc);
        if (app.got_subcommand(sweep)) return cmd_hopsweep(rc, hops_min, hops_max);
    } catch (const fgcn::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
