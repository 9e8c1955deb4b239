#include "betarce/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "betarce/errors.hpp"
#include "betarce/rng.hpp"
#include "betarce/store.hpp"
#include "betarce/verification.hpp"
#include "betarce/version.hpp"

namespace betarce {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(b, e - b + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') quoted = !quoted;
        if (c == ',' && !quoted) {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

bool is_missing(const std::string& cell) {
    static const char* tokens[] = {"", "NA", "na", "NaN", "nan", "?", "null", "NULL"};
    return std::any_of(std::begin(tokens), std::end(tokens), [&](const char* t) { return cell == t; });
}

std::optional<double> parse_number(const std::string& cell) {
    double v = 0.0;
    const char* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

enum : std::uint64_t { kFolds = 1, kModel, kEnsemble, kEval, kSplit, kInstances, kBase, kRobust };

struct GridCell {
    int k;
    double alpha;
    double delta;
};

std::vector<std::size_t> complement_of(const std::vector<std::vector<std::size_t>>& folds, int held_out) {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < folds.size(); ++f)
        if (static_cast<int>(f) != held_out) out.insert(out.end(), folds[f].begin(), folds[f].end());
    std::sort(out.begin(), out.end());
    return out;
}

// Model seeds and spaces of one fold; everything derives from the master seed.
struct FoldPlan {
    TrainingSetting model_setting;
    ModelSpaceSpec space;
    ModelSpaceSpec eval_space;
    std::uint64_t ensemble_seed;
    std::uint64_t eval_seed;
};

FoldPlan plan_fold(const RunConfig& c, int fold) {
    const auto f = static_cast<std::uint64_t>(fold);
    ArchConfig base = c.model;
    base.seed = derive_seed(c.master_seed, {f, kModel});
    const std::uint64_t split = derive_seed(c.master_seed, {f, kSplit});
    FoldPlan plan{base_setting(base, split), c.space, c.eval_space, derive_seed(c.master_seed, {f, kEnsemble}),
                  derive_seed(c.master_seed, {f, kEval})};
    for (auto* s : {&plan.space, &plan.eval_space}) {
        s->base = base;
        s->split_seed = split;
    }
    return plan;
}

struct RecordRow {
    int fold;
    std::size_t row;
    GridCell cell;
    CfeRecord record;
    int eval_agreements = 0;
    int base_eval_agreements = 0;
    bool base_found = false;
};

int agreements_at(const Ensemble& eval, const Vector& x, int target) {
    Matrix m(1, x.size());
    m.row(0) = x.transpose();
    return count_agreements(eval, m, target)[0];
}

CellSummary summarize(int fold, const GridCell& cell, const std::vector<const RecordRow*>& rows,
                      const std::map<int, const Dataset*>& train_by_fold, int n_eval, int neighbors) {
    CellSummary s;
    s.fold = fold;
    s.k = cell.k;
    s.alpha = cell.alpha;
    s.delta = cell.delta;
    s.n_instances = static_cast<long>(rows.size());
    s.n_eval_models = n_eval;
    long agree = 0, base_agree = 0, n_base = 0;
    double lo = 0, hi = 0, l1 = 0, l2 = 0, plaus = 0, dist = 0;
    for (const auto* r : rows) {
        if (r->base_found) {
            ++n_base;
            base_agree += r->base_eval_agreements;
        }
        if (!r->record.x_robust) continue;
        ++s.n_certified;
        const Vector& x = *r->record.x_robust;
        agree += r->eval_agreements;
        const auto ci = credible_interval(r->record.outcome->posterior, cell.alpha);
        lo += ci.lower;
        hi += ci.upper;
        l1 += proximity(x, r->record.x_orig, Norm::L1);
        l2 += proximity(x, r->record.x_orig, Norm::L2);
        plaus += plausibility(x, *train_by_fold.at(r->fold), neighbors);
        dist += distance_to_base(x, r->record.x_base);
    }
    if (n_base > 0) s.base_empirical_robustness = static_cast<double>(base_agree) / static_cast<double>(n_base * n_eval);
    if (s.n_certified > 0) {
        const double pairs = static_cast<double>(s.n_certified) * n_eval;
        const double p = static_cast<double>(agree) / pairs;
        s.empirical_robustness = p;
        // Standard error over the CFE x model pair indicators.
        s.empirical_robustness_se = pairs > 1 ? std::sqrt(p * (1.0 - p) / (pairs - 1.0)) : 0.0;
        const double n = static_cast<double>(s.n_certified);
        s.ci_lower = lo / n;
        s.ci_upper = hi / n;
        s.ci_width = s.ci_upper - s.ci_lower;
        s.proximity_l1 = l1 / n;
        s.proximity_l2 = l2 / n;
        s.plausibility = plaus / n;
        s.dist_to_base = dist / n;
    }
    return s;
}

Json to_json(const CellSummary& s) {
    return Json{{"fold", s.fold},
                {"k", s.k},
                {"alpha", s.alpha},
                {"delta", s.delta},
                {"n_instances", s.n_instances},
                {"n_certified", s.n_certified},
                {"n_eval_models", s.n_eval_models},
                {"empirical_robustness", s.empirical_robustness},
                {"empirical_robustness_se", s.empirical_robustness_se},
                {"base_empirical_robustness", s.base_empirical_robustness},
                {"ci_lower", s.ci_lower},
                {"ci_upper", s.ci_upper},
                {"ci_width", s.ci_width},
                {"proximity_l1", s.proximity_l1},
                {"proximity_l2", s.proximity_l2},
                {"plausibility", s.plausibility},
                {"dist_to_base", s.dist_to_base}};
}

// Summaries per fold, then pooled, in grid order.
std::vector<CellSummary> summarize_all(const RunConfig& config, const std::vector<GridCell>& grid,
                                       const std::vector<RecordRow>& rows,
                                       const std::map<int, const Dataset*>& train_by_fold, int folds_done) {
    std::vector<CellSummary> out;
    auto same = [](const GridCell& a, const GridCell& b) {
        return a.k == b.k && a.alpha == b.alpha && a.delta == b.delta;
    };
    for (const auto& cell : grid) {
        std::vector<const RecordRow*> pooled;
        for (int f = 0; f < folds_done; ++f) {
            std::vector<const RecordRow*> sel;
            for (const auto& r : rows)
                if (r.fold == f && same(r.cell, cell)) sel.push_back(&r);
            pooled.insert(pooled.end(), sel.begin(), sel.end());
            out.push_back(summarize(f, cell, sel, train_by_fold, config.eval_models_per_fold, config.plausibility_neighbors));
        }
        out.push_back(summarize(-1, cell, pooled, train_by_fold, config.eval_models_per_fold, config.plausibility_neighbors));
    }
    return out;
}

Json record_row_json(const RecordRow& r) {
    return Json{{"fold", r.fold},
                {"row", r.row},
                {"k", r.cell.k},
                {"alpha", r.cell.alpha},
                {"delta", r.cell.delta},
                {"eval_agreements", r.eval_agreements},
                {"base_found", r.base_found},
                {"base_eval_agreements", r.base_eval_agreements},
                {"record", to_json(r.record)}};
}

RecordRow record_row_from_json(const Json& j) {
    RecordRow r{j.at("fold").get<int>(),
                j.at("row").get<std::size_t>(),
                {j.at("k").get<int>(), j.at("alpha").get<double>(), j.at("delta").get<double>()},
                cfe_record_from_json(j.at("record")),
                j.at("eval_agreements").get<int>(),
                j.at("base_eval_agreements").get<int>(),
                j.at("base_found").get<bool>()};
    return r;
}

Json ensemble_json(const Ensemble& e) {
    Json members = Json::array();
    for (const auto& m : e.members) members.push_back(to_json(m->provenance()));
    return Json{{"space", to_json(e.space)}, {"seed_stream", e.seed_stream}, {"members", members}};
}

std::string dataset_name(const RunConfig& c) { return fs::path(c.dataset_path).stem().string(); }

void write_results(const fs::path& path, const RunConfig& config, const std::vector<CellSummary>& cells) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << results_csv_header() << '\n';
    for (const auto& c : cells) os << results_csv_row(dataset_name(config), config, c) << '\n';
}

RunManifest run_grid(const RunConfig& config, const std::string& experiment, const std::vector<GridCell>& grid) {
    config.validate();
    // Feasibility gate: nothing trains unless every cell is verifiable.
    for (const auto& cell : grid) {
        try {
            RobustnessSpec::make(cell.delta, cell.alpha, cell.k, config.rspec.prior);
        } catch (const InfeasibleSpecError&) {
            std::ostringstream os;
            os << "infeasible cell (k=" << cell.k << ", alpha=" << cell.alpha << ", delta=" << cell.delta
               << "): delta_max=" << delta_max(cell.k, cell.alpha, config.rspec.prior);
            throw InfeasibleSpecError(os.str());
        }
    }
    const int kmax = std::max_element(grid.begin(), grid.end(), [](auto& a, auto& b) { return a.k < b.k; })->k;

    const Dataset data = load_dataset(config.dataset_path, config.label_column, config.label_threshold);
    SphereParams sphere = config.sphere;
    if (!config.sphere_max_radius_set) sphere.max_radius = std::sqrt(static_cast<double>(data.dim()));
    sphere.validate();

    fs::create_directories(config.output_dir);
    RunManifest manifest;
    manifest.path = config.output_dir / "manifest.json";
    Json& doc = manifest.document;
    doc["experiment"] = experiment;
    doc["library_version"] = kVersion;
    doc["config"] = to_json(config);
    doc["dataset"] = {{"path", config.dataset_path},
                      {"fingerprint", fingerprint_hex(data.fingerprint())},
                      {"rows", data.rows()},
                      {"features", data.dim()}};
    doc["sphere"] = {{"eta", sphere.eta}, {"n", sphere.n}, {"min_radius", sphere.min_radius}, {"max_radius", sphere.max_radius}};
    doc["choices"] = {{"eval_models", "shared by all instances of a fold, disjoint stream from the certification ensemble"},
                      {"standard_error", "over CFE x evaluation-model pairs"},
                      {"credible_interval", "equal-tailed at level alpha"},
                      {"certification", "one-sided lower bound"},
                      {"smaller_k", "prefix of the largest ensemble of the fold"},
                      {"instance_selection", "uniform over the held-out fold"}};
    doc["results_csv"] = "results.csv";
    doc["records"] = "records.jsonl";
    doc["folds"] = Json::array();

    const auto folds = partition_folds(static_cast<std::size_t>(data.rows()), config.folds, config.master_seed);
    std::vector<RecordRow> rows;
    std::vector<Dataset> trains;
    trains.reserve(static_cast<std::size_t>(config.folds));
    std::map<int, const Dataset*> train_by_fold;
    int folds_done = 0;

    auto flush = [&](const std::string& status) {
        manifest.cells = summarize_all(config, grid, rows, train_by_fold, folds_done);
        write_results(config.output_dir / "results.csv", config, manifest.cells);
        std::ofstream rec(config.output_dir / "records.jsonl");
        for (const auto& r : rows) rec << record_row_json(r).dump() << '\n';
        Json cells = Json::array();
        for (const auto& c : manifest.cells) cells.push_back(to_json(c));
        doc["cells"] = cells;
        doc["status"] = status;
        std::ofstream os(manifest.path);
        os << doc.dump(2) << '\n';
    };

    try {
        for (int fold = 0; fold < config.folds; ++fold) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto f = static_cast<std::uint64_t>(fold);
            const auto train_idx = complement_of(folds, fold);
            trains.push_back(data.subset(train_idx));
            const Dataset& train = trains.back();
            train_by_fold[fold] = &train;
            const Dataset test = data.subset(folds[static_cast<std::size_t>(fold)]);

            const FoldPlan plan = plan_fold(config, fold);
            const ClassifierPtr model = train_from_setting(train, plan.model_setting);
            const Ensemble ensemble = build_ensemble(train, plan.space, kmax, plan.ensemble_seed);
            const Ensemble eval = build_ensemble(train, plan.eval_space, config.eval_models_per_fold, plan.eval_seed);

            std::vector<std::size_t> picks(folds[static_cast<std::size_t>(fold)].size());
            std::iota(picks.begin(), picks.end(), std::size_t{0});
            Rng pick_rng = make_rng(config.master_seed, {f, kInstances});
            std::shuffle(picks.begin(), picks.end(), pick_rng);
            picks.resize(std::min(picks.size(), static_cast<std::size_t>(config.instances_per_fold)));

            Json fold_doc{{"fold", fold},
                          {"model", to_json(model->provenance())},
                          {"ensemble", ensemble_json(ensemble)},
                          {"eval", ensemble_json(eval)},
                          {"instances", Json::array()}};
            if (config.save_models) {
                const auto dir = config.output_dir / "models" / ("fold" + std::to_string(fold));
                save_model_store(dir / "space", ensemble, model, data.fingerprint());
                save_model_store(dir / "eval", eval, nullptr, data.fingerprint());
                fold_doc["store"] = {{"space", (fs::path("models") / ("fold" + std::to_string(fold)) / "space").string()},
                                     {"eval", (fs::path("models") / ("fold" + std::to_string(fold)) / "eval").string()}};
            }

            for (std::size_t i = 0; i < picks.size(); ++i) {
                const std::size_t row = folds[static_cast<std::size_t>(fold)][picks[i]];
                fold_doc["instances"].push_back(row);
                const Vector x = test.row(static_cast<Eigen::Index>(picks[i]));
                const int target = 1 - model->predict(x);
                std::optional<Vector> base;
                Rng base_rng = make_rng(config.master_seed, {f, i, kBase});
                try {
                    base = base_growing_spheres(*model, x, sphere, base_rng);
                } catch (const BaseNotFoundError&) {
                }
                const int base_agree = base ? agreements_at(eval, *base, target) : 0;
                for (const auto& cell : grid) {
                    const auto rspec = RobustnessSpec::make(cell.delta, cell.alpha, cell.k, config.rspec.prior);
                    Rng rng = make_rng(config.master_seed, {f, i, kRobust});
                    RecordRow r{fold, row, cell, {}, 0, base_agree, base.has_value()};
                    if (base) {
                        r.record = betarce_explain(x, *model, ensemble.prefix(cell.k), rspec, sphere, rng, base);
                    } else {
                        r.record.x_orig = x;
                        r.record.y_orig = 1 - target;
                        r.record.target_class = target;
                        r.record.status = CfeStatus::BaseNotFound;
                    }
                    if (r.record.x_robust) r.eval_agreements = agreements_at(eval, *r.record.x_robust, target);
                    rows.push_back(std::move(r));
                }
            }
            fold_doc["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            doc["folds"].push_back(fold_doc);
            ++folds_done;
        }
    } catch (const std::exception& e) {
        doc["error"] = e.what();
        flush("failed");
        throw;
    }
    flush("complete");
    return manifest;
}

}  // namespace

std::vector<std::vector<std::size_t>> partition_folds(std::size_t n, int folds, std::uint64_t master) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(master, {kFolds});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
    for (std::size_t i = 0; i < n; ++i) out[i * static_cast<std::size_t>(folds) / n].push_back(order[i]);
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

Dataset load_dataset(const fs::path& path, const std::string& label_column, std::optional<double> label_threshold) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open dataset " + path.string());
    std::string line;
    long line_no = 0;
    std::vector<std::string> header;
    while (std::getline(is, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw ParseError("missing header row", line_no);
    const auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end()) throw SchemaError("label column '" + label_column + "' not found in header");
    const auto label_pos = static_cast<std::size_t>(label_it - header.begin());

    std::vector<std::vector<double>> rows;
    std::vector<double> raw_labels;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()),
                             line_no);
        if (std::any_of(cells.begin(), cells.end(), is_missing)) continue;
        std::vector<double> values;
        values.reserve(cells.size() - 1);
        double label = 0.0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto v = parse_number(cells[c]);
            if (!v) throw ParseError("non-numeric value '" + cells[c] + "' in column '" + header[c] + "'", line_no);
            if (c == label_pos)
                label = *v;
            else
                values.push_back(*v);
        }
        rows.push_back(std::move(values));
        raw_labels.push_back(label);
    }
    if (rows.empty()) throw EmptyInputError("no complete rows in " + path.string());

    Dataset d;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != label_pos) d.feature_names.push_back(header[c]);
    for (double v : raw_labels) {
        if (label_threshold) {
            d.labels.push_back(v > *label_threshold ? 1 : 0);
        } else if (v == 0.0 || v == 1.0) {
            d.labels.push_back(static_cast<int>(v));
        } else {
            throw NonBinaryLabelError("label column '" + label_column + "' holds value " + fmt(v) +
                                      "; pass a threshold to binarize it");
        }
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto dim = static_cast<Eigen::Index>(d.feature_names.size());
    d.features.resize(n, dim);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) d.features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    for (Eigen::Index j = 0; j < dim; ++j) {
        const double lo = d.features.col(j).minCoeff();
        const double hi = d.features.col(j).maxCoeff();
        d.scaling.push_back({lo, hi});
        if (hi > lo)
            d.features.col(j) = (d.features.col(j).array() - lo) / (hi - lo);
        else
            d.features.col(j).setZero();
    }
    return d;
}

void write_dataset_csv(const fs::path& path, const Dataset& data, const std::string& label_column) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    for (const auto& name : data.feature_names) os << name << ',';
    os << label_column << '\n';
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const Vector raw = data.unscale(data.row(i));
        for (Eigen::Index j = 0; j < raw.size(); ++j) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", raw[j]);
            os << buf << ',';
        }
        os << data.labels[static_cast<std::size_t>(i)] << '\n';
    }
}

void RunConfig::validate() const {
    if (dataset_path.empty()) throw UsageError("run config needs a dataset path");
    if (folds < 2) throw DomainError("folds must be at least 2");
    if (instances_per_fold < 1 || eval_models_per_fold < 1) throw DomainError("instance and evaluation-model counts must be positive");
    if (plausibility_neighbors < 1) throw DomainError("plausibility neighbor count must be positive");
    if (delta_grid.empty()) throw DomainError("delta grid is empty");
    model.validate();
    space.validate();
    eval_space.validate();
}

Json to_json(const RunConfig& c) {
    Json j{{"dataset_path", c.dataset_path},
           {"label_column", c.label_column},
           {"label_threshold", c.label_threshold ? Json(*c.label_threshold) : Json(nullptr)},
           {"model", to_json(c.model)},
           {"space", to_json(c.space)},
           {"eval_space", to_json(c.eval_space)},
           {"delta", c.rspec.delta},
           {"alpha", c.rspec.alpha},
           {"k", c.rspec.k},
           {"prior", {c.rspec.prior.a, c.rspec.prior.b}},
           {"delta_grid", c.delta_grid},
           {"alpha_grid", c.alpha_grid},
           {"k_grid", c.k_grid},
           {"sphere", {{"eta", c.sphere.eta}, {"n", c.sphere.n}, {"min_radius", c.sphere.min_radius}}},
           {"folds", c.folds},
           {"instances_per_fold", c.instances_per_fold},
           {"eval_models_per_fold", c.eval_models_per_fold},
           {"plausibility_neighbors", c.plausibility_neighbors},
           {"master_seed", c.master_seed},
           {"output_dir", c.output_dir.string()},
           {"save_models", c.save_models}};
    if (c.sphere_max_radius_set) j["sphere"]["max_radius"] = c.sphere.max_radius;
    return j;
}

RunConfig run_config_from_json(const Json& j) {
    RunConfig c;
    try {
        c.dataset_path = j.value("dataset_path", c.dataset_path);
        c.label_column = j.value("label_column", c.label_column);
        if (j.contains("label_threshold") && !j["label_threshold"].is_null()) c.label_threshold = j["label_threshold"].get<double>();
        if (j.contains("model")) c.model = arch_config_from_json(j["model"], c.model);
        if (j.contains("space")) c.space = model_space_from_json(j["space"], c.space);
        if (j.contains("eval_space"))
            c.eval_space = model_space_from_json(j["eval_space"], c.eval_space);
        else
            c.eval_space = c.space;
        c.rspec.delta = j.value("delta", c.rspec.delta);
        c.rspec.alpha = j.value("alpha", c.rspec.alpha);
        c.rspec.k = j.value("k", c.rspec.k);
        if (j.contains("prior")) c.rspec.prior = BetaPosterior{j["prior"][0].get<double>(), j["prior"][1].get<double>()};
        if (j.contains("delta_grid")) c.delta_grid = j["delta_grid"].get<std::vector<double>>();
        if (j.contains("alpha_grid")) c.alpha_grid = j["alpha_grid"].get<std::vector<double>>();
        if (j.contains("k_grid")) c.k_grid = j["k_grid"].get<std::vector<int>>();
        if (j.contains("sphere")) {
            const auto& s = j["sphere"];
            c.sphere.eta = s.value("eta", c.sphere.eta);
            c.sphere.n = s.value("n", c.sphere.n);
            c.sphere.min_radius = s.value("min_radius", c.sphere.min_radius);
            if (s.contains("max_radius")) {
                c.sphere.max_radius = s["max_radius"].get<double>();
                c.sphere_max_radius_set = true;
            }
        }
        c.folds = j.value("folds", c.folds);
        c.instances_per_fold = j.value("instances_per_fold", c.instances_per_fold);
        c.eval_models_per_fold = j.value("eval_models_per_fold", c.eval_models_per_fold);
        c.plausibility_neighbors = j.value("plausibility_neighbors", c.plausibility_neighbors);
        c.master_seed = j.value("master_seed", c.master_seed);
        c.output_dir = j.contains("output_dir") ? fs::path(j["output_dir"].get<std::string>()) : default_output_dir();
        c.save_models = j.value("save_models", c.save_models);
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("invalid run config: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path.string());
    try {
        return run_config_from_json(Json::parse(is));
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("malformed JSON config: ") + e.what(), 0);
    }
}

fs::path default_output_dir() {
    if (const char* env = std::getenv("BETARCE_OUTPUT_DIR"); env && *env) return env;
    return "betarce-out";
}

std::string results_csv_header() {
    return "dataset,method,space,eval_space,fold,k,alpha,delta,n_instances,n_certified,n_eval_models,"
           "empirical_robustness,empirical_robustness_se,base_empirical_robustness,ci_lower,ci_upper,ci_width,"
           "proximity_l1,proximity_l2,plausibility,dist_to_base";
}

std::string results_csv_row(const std::string& dataset, const RunConfig& config, const CellSummary& c) {
    std::ostringstream os;
    os << dataset << ",betarce_gs," << to_string(config.space.change_type) << ','
       << to_string(config.eval_space.change_type) << ',' << (c.fold < 0 ? std::string("all") : std::to_string(c.fold))
       << ',' << c.k << ',' << fmt(c.alpha) << ',' << fmt(c.delta) << ',' << c.n_instances << ',' << c.n_certified
       << ',' << c.n_eval_models << ',' << fmt(c.empirical_robustness) << ',' << fmt(c.empirical_robustness_se) << ','
       << fmt(c.base_empirical_robustness) << ',' << fmt(c.ci_lower) << ',' << fmt(c.ci_upper) << ','
       << fmt(c.ci_width) << ',' << fmt(c.proximity_l1) << ',' << fmt(c.proximity_l2) << ',' << fmt(c.plausibility)
       << ',' << fmt(c.dist_to_base);
    return os.str();
}

RunManifest run_coverage_experiment(const RunConfig& config) {
    std::vector<GridCell> grid;
    for (double d : config.delta_grid) grid.push_back({config.rspec.k, config.rspec.alpha, d});
    return run_grid(config, "coverage", grid);
}

RunManifest run_sensitivity_experiment(const RunConfig& config, const std::vector<double>& alpha_grid,
                                       const std::vector<int>& k_grid) {
    if (alpha_grid.empty() || k_grid.empty()) throw DomainError("sensitivity grids must be nonempty");
    std::vector<GridCell> grid;
    for (int k : k_grid)
        for (double a : alpha_grid)
            for (double d : config.delta_grid) grid.push_back({k, a, d});
    return run_grid(config, "sensitivity", grid);
}

std::vector<CellSummary> evaluate_manifest(const fs::path& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw IoError("cannot open manifest " + manifest_path.string());
    Json doc;
    try {
        doc = Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("malformed manifest: ") + e.what(), 0);
    }
    const fs::path root = manifest_path.parent_path();
    RunConfig config = run_config_from_json(doc.at("config"));
    const Dataset data = load_dataset(config.dataset_path, config.label_column, config.label_threshold);
    if (fingerprint_hex(data.fingerprint()) != doc.at("dataset").at("fingerprint").get<std::string>())
        throw SchemaError("dataset content differs from the one recorded in the manifest");

    std::vector<RecordRow> rows;
    {
        std::ifstream rec(root / doc.at("records").get<std::string>());
        if (!rec) throw IoError("cannot open records of " + manifest_path.string());
        std::string line;
        while (std::getline(rec, line))
            if (!line.empty()) rows.push_back(record_row_from_json(Json::parse(line)));
    }

    const auto folds = partition_folds(static_cast<std::size_t>(data.rows()), config.folds, config.master_seed);
    std::vector<Dataset> trains;
    trains.reserve(folds.size());
    std::map<int, const Dataset*> train_by_fold;
    const auto& fold_docs = doc.at("folds");
    for (const auto& fd : fold_docs) {
        const int fold = fd.at("fold").get<int>();
        trains.push_back(data.subset(complement_of(folds, fold)));
        train_by_fold[fold] = &trains.back();
        Ensemble eval;
        if (fd.contains("store")) {
            eval = load_model_store(root / fd["store"].at("eval").get<std::string>()).ensemble;
        } else {
            for (const auto& s : fd.at("eval").at("members"))
                eval.members.push_back(train_from_setting(trains.back(), training_setting_from_json(s)));
        }
        for (auto& r : rows) {
            if (r.fold != fold) continue;
            r.eval_agreements = r.record.x_robust ? agreements_at(eval, *r.record.x_robust, r.record.target_class) : 0;
            r.base_eval_agreements =
                r.base_found ? agreements_at(eval, r.record.x_base, r.record.target_class) : 0;
        }
    }

    std::vector<GridCell> grid;
    for (const auto& c : doc.at("cells"))
        if (c.at("fold").get<int>() == -1) grid.push_back({c.at("k").get<int>(), c.at("alpha").get<double>(), c.at("delta").get<double>()});
    return summarize_all(config, grid, rows, train_by_fold, static_cast<int>(fold_docs.size()));
}

}  // namespace betarce
