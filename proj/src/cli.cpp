#include "betarce/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "betarce/cfe.hpp"
#include "betarce/errors.hpp"
#include "betarce/harness.hpp"
#include "betarce/serialize.hpp"
#include "betarce/store.hpp"
#include "betarce/verification.hpp"
#include "betarce/version.hpp"

namespace betarce {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

int to_int(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw UsageError("invalid integer '" + s + "' in " + what);
    }
}

double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw UsageError("invalid number '" + s + "' in " + what);
    }
}

Vector parse_vector(const std::string& s, const std::string& flag) {
    const auto parts = split(s, ',');
    if (parts.empty()) throw UsageError(flag + " needs comma-separated numbers");
    Vector v(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Eigen::Index>(i)] = to_double(parts[i], flag);
    return v;
}

BetaPosterior parse_prior(const std::string& s) {
    const auto parts = split(s, ',');
    if (parts.size() == 1) {
        const double v = to_double(parts[0], "--prior");
        return {v, v};
    }
    if (parts.size() == 2) return {to_double(parts[0], "--prior"), to_double(parts[1], "--prior")};
    throw UsageError("--prior takes 'a' or 'a,b'");
}

std::string fixed(double v, int digits) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

struct ArchFlags {
    std::string model = "mlp";
    int layers = 3;
    int neurons = 128;
    double lr = 1e-3;
    int epochs = 100;
    int batch = 128;
    int patience = 5;
    double dropout = 0.0;

    void add(CLI::App* app) {
        app->add_option("--model", model, "Classifier kind: mlp or logistic")->capture_default_str();
        app->add_option("--layers", layers, "Hidden layers")->capture_default_str();
        app->add_option("--neurons", neurons, "Neurons per hidden layer")->capture_default_str();
        app->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
        app->add_option("--epochs", epochs, "Maximum epochs")->capture_default_str();
        app->add_option("--batch", batch, "Batch size")->capture_default_str();
        app->add_option("--patience", patience, "Early-stopping patience")->capture_default_str();
        app->add_option("--dropout", dropout, "Dropout rate")->capture_default_str();
    }

    ArchConfig config(std::uint64_t seed) const {
        ArchConfig c;
        c.model = model_kind_from_string(model);
        c.layers = layers;
        c.neurons_per_layer = neurons;
        c.learning_rate = lr;
        c.max_epochs = epochs;
        c.batch_size = batch;
        c.patience = patience;
        c.dropout = dropout;
        c.seed = seed;
        c.validate();
        return c;
    }
};

IntRange parse_range(const std::string& s, const std::string& flag) {
    const auto parts = split(s, ',');
    if (parts.size() != 2) throw UsageError(flag + " takes 'lo,hi'");
    return {to_int(parts[0], flag), to_int(parts[1], flag)};
}

void print_error(std::ostream& err, const std::string& code, const std::string& message) {
    err << Json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

std::vector<int> parse_int_list(const std::string& spec) {
    std::vector<int> out;
    for (const auto& part : split(spec, ',')) {
        const auto dots = part.find("..");
        if (dots == std::string::npos) {
            out.push_back(to_int(part, "integer list"));
            continue;
        }
        std::string hi_part = part.substr(dots + 2);
        int step = 1;
        if (const auto colon = hi_part.find(':'); colon != std::string::npos) {
            step = to_int(hi_part.substr(colon + 1), "range step");
            hi_part = hi_part.substr(0, colon);
        }
        const int lo = to_int(part.substr(0, dots), "range");
        const int hi = to_int(hi_part, "range");
        if (step < 1 || hi < lo) throw UsageError("bad range '" + part + "'");
        for (int v = lo; v <= hi; v += step) out.push_back(v);
    }
    if (out.empty()) throw UsageError("empty integer list");
    return out;
}

std::vector<double> parse_double_list(const std::string& spec) {
    std::vector<double> out;
    for (const auto& part : split(spec, ',')) out.push_back(to_double(part, "number list"));
    if (out.empty()) throw UsageError("empty number list");
    return out;
}

int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Counterfactual explanations certified robust to model retraining"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("betarce ") + kVersion);

    // make-synthetic
    auto* synth = app.add_subcommand("make-synthetic", "Write a two-Gaussian binary dataset as CSV");
    std::string synth_out;
    std::size_t synth_n = 1000;
    int synth_dim = 2;
    double synth_sep = 2.5, synth_spread = 1.0;
    std::uint64_t synth_seed = 0;
    synth->add_option("--out", synth_out, "Output CSV path")->required();
    synth->add_option("--n", synth_n, "Rows")->capture_default_str();
    synth->add_option("--dim", synth_dim, "Features")->capture_default_str();
    synth->add_option("--separation", synth_sep, "Distance between class means")->capture_default_str();
    synth->add_option("--spread", synth_spread, "Per-coordinate standard deviation")->capture_default_str();
    synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();

    // train-space
    auto* train = app.add_subcommand("train-space", "Train the base model and a k-member ensemble, persist both");
    std::string data_path, label = "label", space_name = "seed", store_dir;
    std::optional<double> label_threshold;
    int k = 32;
    std::uint64_t seed = 0;
    std::string layer_range = "3,5", neuron_range = "64,256";
    ArchFlags arch;
    train->add_option("--data", data_path, "Dataset CSV")->required();
    train->add_option("--label", label, "Label column")->capture_default_str();
    train->add_option("--label-threshold", label_threshold, "Binarize the label as value > threshold");
    train->add_option("--space", space_name, "Model change: seed, bootstrap or architecture")->capture_default_str();
    train->add_option("--k", k, "Ensemble size")->capture_default_str();
    train->add_option("--seed", seed, "Master seed")->capture_default_str();
    train->add_option("--out", store_dir, "Model store directory")->required();
    train->add_option("--layer-range", layer_range, "Architecture space layers lo,hi")->capture_default_str();
    train->add_option("--neuron-range", neuron_range, "Architecture space neurons lo,hi")->capture_default_str();
    arch.add(train);

    // explain
    auto* explain = app.add_subcommand("explain", "Robust counterfactual for one instance, printed as JSON");
    std::optional<int> row;
    std::string instance, prior_str = "0.5";
    double delta = 0.9, alpha = 0.9;
    std::optional<int> explain_k;
    SphereParams sphere;
    std::optional<double> max_radius;
    explain->add_option("--store", store_dir, "Model store directory");
    explain->add_option("--data", data_path, "Dataset CSV (for --row)");
    explain->add_option("--label", label, "Label column")->capture_default_str();
    explain->add_option("--label-threshold", label_threshold, "Binarize the label as value > threshold");
    explain->add_option("--row", row, "Row of the dataset to explain");
    explain->add_option("--instance", instance, "Scaled feature vector, comma-separated");
    explain->add_option("--delta", delta, "Robustness lower bound")->capture_default_str();
    explain->add_option("--alpha", alpha, "Confidence level")->capture_default_str();
    explain->add_option("--k", explain_k, "Expected ensemble size");
    explain->add_option("--prior", prior_str, "Beta prior 'a' or 'a,b'")->capture_default_str();
    explain->add_option("--eta", sphere.eta, "Initial radius")->capture_default_str();
    explain->add_option("--n", sphere.n, "Candidates per annulus")->capture_default_str();
    explain->add_option("--min-radius", sphere.min_radius, "Shrink floor")->capture_default_str();
    explain->add_option("--max-radius", max_radius, "Growth ceiling (default sqrt(d))");
    explain->add_option("--seed", seed, "Search seed")->capture_default_str();

    // verify
    auto* verify = app.add_subcommand("verify", "Check one counterfactual against a stored ensemble");
    std::string cf;
    std::optional<int> target;
    verify->add_option("--store", store_dir, "Model store directory")->required();
    verify->add_option("--cf", cf, "Scaled counterfactual, comma-separated")->required();
    verify->add_option("--target", target, "Desired class (default: base model's label of the counterfactual)");
    verify->add_option("--delta", delta, "Robustness lower bound")->capture_default_str();
    verify->add_option("--alpha", alpha, "Confidence level")->capture_default_str();
    verify->add_option("--prior", prior_str, "Beta prior 'a' or 'a,b'")->capture_default_str();

    // delta-max
    auto* dmax = app.add_subcommand("delta-max", "Print the largest verifiable delta per (k, alpha)");
    std::string k_spec = "1,2,4,12..124:8", alpha_spec = "0.7,0.8,0.9,0.95,0.975,0.99,0.999", interval = "one-sided";
    int digits = 3;
    dmax->add_option("--k", k_spec, "Estimator counts, e.g. 1..124 or 12..124:8")->capture_default_str();
    dmax->add_option("--alpha", alpha_spec, "Confidence levels")->capture_default_str();
    dmax->add_option("--prior", prior_str, "Symmetric Beta prior")->capture_default_str();
    dmax->add_option("--interval", interval, "one-sided or equal-tailed")->capture_default_str();
    dmax->add_option("--digits", digits, "Decimals printed")->capture_default_str();

    // coverage / sensitivity
    auto* coverage = app.add_subcommand("coverage", "Empirical robustness vs delta against fresh models");
    auto* sensitivity = app.add_subcommand("sensitivity", "Sweep alpha and k");
    std::string config_path, out_dir, alpha_grid, k_grid;
    std::optional<std::uint64_t> master_seed;
    for (auto* sub : {coverage, sensitivity}) {
        sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "Output directory (overrides config)");
        sub->add_option("--seed", master_seed, "Master seed (overrides config)");
    }
    sensitivity->add_option("--alpha-grid", alpha_grid, "Confidence levels (default: config alpha_grid)");
    sensitivity->add_option("--k-grid", k_grid, "Estimator counts (default: config k_grid)");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Recompute metrics of a finished run");
    std::string manifest_path;
    evaluate->add_option("--manifest", manifest_path, "manifest.json of a run")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        try {
            app.parse(reversed);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::CallForVersion&) {
            out << "betarce " << kVersion << '\n';
            return 0;
        } catch (const CLI::ParseError& e) {
            print_error(err, "usage_error", e.what());
            return 2;
        }

        if (synth->parsed()) {
            const auto d = make_two_gaussians(synth_n, synth_dim, synth_sep, synth_spread, synth_seed);
            write_dataset_csv(synth_out, d, "label");
            out << Json{{"path", synth_out}, {"rows", d.rows()}, {"features", d.dim()}}.dump() << '\n';
        } else if (train->parsed()) {
            const Dataset data = load_dataset(data_path, label, label_threshold);
            ModelSpaceSpec spec;
            spec.change_type = change_type_from_string(space_name);
            spec.base = arch.config(derive_seed(seed, {hash_label("model")}));
            spec.layer_range = parse_range(layer_range, "--layer-range");
            spec.neuron_range = parse_range(neuron_range, "--neuron-range");
            spec.split_seed = derive_seed(seed, {hash_label("split")});
            spec.validate();
            const auto base = train_from_setting(data, base_setting(spec.base, spec.split_seed));
            const auto ensemble = build_ensemble(data, spec, k, derive_seed(seed, {hash_label("ensemble")}));
            save_model_store(store_dir, ensemble, base, data.fingerprint());
            out << Json{{"store", store_dir}, {"k", k}, {"space", to_json(spec)},
                        {"dataset_fingerprint", fingerprint_hex(data.fingerprint())}}.dump() << '\n';
        } else if (explain->parsed()) {
            const BetaPosterior prior = parse_prior(prior_str);
            // Feasibility comes first so an impossible request fails before any I/O.
            if (explain_k) RobustnessSpec::make(delta, alpha, *explain_k, prior);
            if (store_dir.empty()) throw UsageError("--store is required");
            const ModelStore store = load_model_store(store_dir);
            if (!store.base) throw UsageError("model store has no base model (base.bin)");
            if (explain_k && *explain_k != store.ensemble.size())
                throw EnsembleSizeError("--k " + std::to_string(*explain_k) + " but the store holds " +
                                        std::to_string(store.ensemble.size()) + " members");
            const auto rspec = RobustnessSpec::make(delta, alpha, store.ensemble.size(), prior);
            Vector x;
            if (row) {
                if (data_path.empty()) throw UsageError("--row needs --data");
                const Dataset data = load_dataset(data_path, label, label_threshold);
                if (*row < 0 || *row >= data.rows()) throw UsageError("--row out of range");
                x = data.row(*row);
            } else if (!instance.empty()) {
                x = parse_vector(instance, "--instance");
            } else {
                throw UsageError("explain needs --row or --instance");
            }
            SphereParams params = SphereParams::defaults(static_cast<int>(x.size()));
            params.eta = sphere.eta;
            params.n = sphere.n;
            params.min_radius = sphere.min_radius;
            if (max_radius) params.max_radius = *max_radius;
            Rng rng(seed);
            const auto rec = betarce_explain(x, *store.base, store.ensemble, rspec, params, rng);
            Json j = to_json(rec);
            j["delta"] = delta;
            j["alpha"] = alpha;
            j["k"] = rspec.k;
            out << j.dump(2) << '\n';
        } else if (verify->parsed()) {
            const BetaPosterior prior = parse_prior(prior_str);
            const ModelStore store = load_model_store(store_dir);
            const Vector x = parse_vector(cf, "--cf");
            if (x.size() != store.ensemble.input_dim())
                throw DimensionError("--cf has " + std::to_string(x.size()) + " features, ensemble expects " +
                                     std::to_string(store.ensemble.input_dim()));
            int y = 0;
            if (target) {
                y = *target;
            } else if (store.base) {
                y = store.base->predict(x);
            } else {
                throw UsageError("--target is required when the store has no base model");
            }
            RobustnessSpec rspec{delta, alpha, store.ensemble.size(), prior};
            if (!(delta > 0.0 && delta < 1.0) || !(alpha > 0.0 && alpha < 1.0))
                throw DomainError("delta and alpha must lie in (0,1)");
            const auto outcome = run_verification(x, y, store.ensemble, rspec);
            Json j = to_json(outcome);
            j["target"] = y;
            out << j.dump(2) << '\n';
        } else if (dmax->parsed()) {
            const auto ks = parse_int_list(k_spec);
            const auto alphas = parse_double_list(alpha_spec);
            const auto prior = parse_prior(prior_str);
            const auto kind = interval_kind_from_string(interval);
            out << "k";
            for (double a : alphas) out << ',' << a;
            out << '\n';
            for (int kk : ks) {
                out << kk;
                for (double a : alphas) out << ',' << fixed(delta_max(kk, a, prior, kind), digits);
                out << '\n';
            }
        } else if (coverage->parsed() || sensitivity->parsed()) {
            RunConfig config = load_run_config(config_path);
            if (!out_dir.empty()) config.output_dir = out_dir;
            if (master_seed) config.master_seed = *master_seed;
            RunManifest manifest;
            if (coverage->parsed()) {
                manifest = run_coverage_experiment(config);
            } else {
                const auto alphas = alpha_grid.empty() ? config.alpha_grid : parse_double_list(alpha_grid);
                const auto ks = k_grid.empty() ? config.k_grid : parse_int_list(k_grid);
                manifest = run_sensitivity_experiment(config, alphas, ks);
            }
            out << results_csv_header() << '\n';
            for (const auto& c : manifest.cells)
                if (c.fold < 0) out << results_csv_row(fs::path(config.dataset_path).stem().string(), config, c) << '\n';
        } else if (evaluate->parsed()) {
            const auto cells = evaluate_manifest(manifest_path);
            std::ifstream is(manifest_path);
            const RunConfig config = run_config_from_json(Json::parse(is).at("config"));
            out << results_csv_header() << '\n';
            for (const auto& c : cells)
                out << results_csv_row(fs::path(config.dataset_path).stem().string(), config, c) << '\n';
        }
        return 0;
    } catch (const UsageError& e) {
        print_error(err, e.code(), e.what());
        return 2;
    } catch (const Error& e) {
        print_error(err, e.code(), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error(err, "internal_error", e.what());
        return 1;
    }
}

int cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cli(args, std::cout, std::cerr);
}

}  // namespace betarce
