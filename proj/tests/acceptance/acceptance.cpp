// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
// Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/fakes.hpp"
#include "../support/oracles.hpp"
#include "../support/reference_table.hpp"
#include "betarce/cfe.hpp"
#include "betarce/cli.hpp"
#include "betarce/harness.hpp"
#include "betarce/metrics.hpp"
#include "betarce/stats.hpp"
#include "betarce/store.hpp"
#include "betarce/verification.hpp"

using namespace betarce;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------- 1
Verdict table_reproduction() {
    const auto t0 = Clock::now();
    std::ostringstream out, err;
    const int code = cli({"delta-max", "--k", "1,2,4,12..124:8", "--alpha", "0.7,0.8,0.9,0.95,0.975,0.99,0.999",
                          "--prior", "1", "--interval", "equal-tailed", "--digits", "6"},
                         out, err);
    const double secs = seconds_since(t0);
    if (code != 0) return {false, "delta-max exited " + std::to_string(code) + ": " + err.str()};
    std::istringstream is(out.str());
    std::string line;
    std::getline(is, line);
    double worst = 0.0;
    int cells = 0;
    for (const auto& ref : reference::kDeltaMaxTable) {
        if (!std::getline(is, line)) return {false, "table too short"};
        std::istringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');
        if (std::stoi(cell) != ref.k) return {false, "row order differs at k=" + std::to_string(ref.k)};
        for (double want : ref.delta) {
            std::getline(ls, cell, ',');
            worst = std::max(worst, std::fabs(std::stod(cell) - want));
            ++cells;
        }
    }
    const bool pass = cells == 126 && worst <= 0.001 && secs < 1.0;
    return {pass, std::to_string(cells) + " cells, max |diff| " + fmt("%.2e", worst) + ", " + fmt("%.3f", secs) +
                      " s (uniform prior, equal-tailed interval)"};
}

// ---------------------------------------------------------------- 2
Verdict feasibility_anchor() {
    const double v = delta_max(32, 0.975, BetaPosterior::jeffreys());
    return {v >= 0.9, "delta_max(32, 0.975, Jeffreys) = " + fmt("%.6f", v)};
}

// ---------------------------------------------------------------- 3
Verdict quantile_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240607);
    std::uniform_real_distribution<double> shape(0.5, 100.0);
    const std::vector<double> levels{0.025, 0.05, 0.5, 0.95};
    const long draws = 10'000'000;
    int bad = 0, checked = 0;
    double worst_z = 0.0;
    std::vector<double> scratch;
    for (int p = 0; p < 50; ++p) {
        const double a = shape(rng), b = shape(rng);
        const auto mc = oracle::beta_mc_quantiles(a, b, draws, levels, rng(), &scratch);
        for (std::size_t i = 0; i < levels.size(); ++i) {
            const double q = beta_inv_cdf(levels[i], a, b);
            const double se = oracle::quantile_se(levels[i], draws, oracle::beta_density(q, a, b));
            const double z = std::fabs(q - mc[i]) / se;
            worst_z = std::max(worst_z, z);
            bad += z > 3.0;
            ++checked;
        }
    }
    const double secs = seconds_since(t0);
    return {bad == 0 && secs < 30.0, std::to_string(checked) + " quantiles, " + std::to_string(bad) +
                                         " beyond 3 SE, max |z| " + fmt("%.2f", worst_z) + ", " + fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------------- 4
Verdict lemma_check() {
    const auto t0 = Clock::now();
    const std::vector<double> xs{0.51, 0.6, 0.7, 0.8, 0.9, 0.99};
    int stated = 0, reversed = 0, total = 0;
    std::string first_violation;
    for (double a : {0.5, 1.0})
        for (int n = 1; n <= 40; ++n)
            for (int m = 1; m < n && n + m <= 40; ++m)
                for (double x : xs) {
                    const double lhs = reg_inc_beta(x, a + n, a + m);
                    const double rhs = reg_inc_beta(x, a + m, a + n);
                    // Upper tails avoid the rounding tie when both CDFs round to one.
                    const double lhs_up = reg_inc_beta_upper(x, a + n, a + m);
                    const double rhs_up = reg_inc_beta_upper(x, a + m, a + n);
                    ++total;
                    if (lhs > rhs)
                        ++stated;
                    else if (first_violation.empty())
                        first_violation = "a=" + fmt("%g", a) + " n=" + std::to_string(n) + " m=" + std::to_string(m) +
                                          " x=" + fmt("%g", x) + ": " + fmt("%.4g", lhs) + " <= " + fmt("%.4g", rhs);
                    reversed += lhs_up > rhs_up;
                }
    const double secs = seconds_since(t0);
    std::printf("INFO criterion 4: reversed inequality F(a+m,b+n) > F(a+n,b+m) holds at %d/%d points\n", reversed, total);
    return {stated == total && secs < 5.0, "stated inequality holds at " + std::to_string(stated) + "/" +
                                               std::to_string(total) + " points" +
                                               (first_violation.empty() ? "" : "; e.g. " + first_violation)};
}

// ---------------------------------------------------------------- 5, 6, 7, 9
struct CoverageRun {
    RunConfig config;
    RunManifest manifest;
    double seconds = 0.0;
    std::string error;
};

RunConfig coverage_config(const fs::path& root, const fs::path& out) {
    const fs::path csv = root / "two_gaussians.csv";
    if (!fs::exists(csv)) write_dataset_csv(csv, make_two_gaussians(1000, 2, 2.5, 1.0, 1), "label");
    RunConfig c;
    c.dataset_path = csv.string();
    c.space.change_type = ChangeType::Seed;
    c.eval_space.change_type = ChangeType::Seed;
    c.rspec = RobustnessSpec{0.9, 0.9, 32, BetaPosterior::jeffreys()};
    c.delta_grid = {0.7, 0.8, 0.9};
    c.folds = 3;
    c.instances_per_fold = 20;
    c.eval_models_per_fold = 30;
    c.master_seed = 7;
    c.save_models = true;
    c.output_dir = out;
    return c;
}

CoverageRun run_coverage(const fs::path& root, const std::string& name) {
    CoverageRun r;
    r.config = coverage_config(root, root / name);
    const auto t0 = Clock::now();
    try {
        r.manifest = run_coverage_experiment(r.config);
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    r.seconds = seconds_since(t0);
    return r;
}

Verdict coverage(const CoverageRun& run) {
    if (!run.error.empty()) return {false, "run failed: " + run.error};
    bool pass = run.seconds < 600.0;
    std::ostringstream os;
    for (double delta : run.config.delta_grid) {
        double pooled = -1.0, worst_fold = 2.0;
        for (const auto& c : run.manifest.cells) {
            if (c.delta != delta) continue;
            if (c.fold < 0)
                pooled = c.empirical_robustness;
            else
                worst_fold = std::min(worst_fold, c.empirical_robustness);
        }
        pass = pass && pooled >= delta && worst_fold >= delta - 0.03;
        os << "delta=" << delta << ": mean " << fmt("%.3f", pooled) << ", min fold " << fmt("%.3f", worst_fold) << "; ";
    }
    os << fmt("%.0f", run.seconds) << " s";
    return {pass, os.str()};
}

Verdict cost_of_robustness(const CoverageRun& run) {
    if (!run.error.empty()) return {false, "run failed: " + run.error};
    double d7 = -1, d9 = -1;
    for (const auto& c : run.manifest.cells) {
        if (c.fold >= 0) continue;
        if (c.delta == 0.7) d7 = c.dist_to_base;
        if (c.delta == 0.9) d9 = c.dist_to_base;
    }
    return {d9 >= d7 && d7 >= 0, "mean dist_to_base delta=0.9 " + fmt("%.4f", d9) + " vs delta=0.7 " + fmt("%.4f", d7)};
}

// Replays every certified record against the ensemble saved with its run,
// plus a search on crafted boundaries.
Verdict certificate_soundness(const std::vector<const CoverageRun*>& runs) {
    long replayed = 0, failed = 0;
    for (const auto* run : runs) {
        if (!run->error.empty()) return {false, "run failed: " + run->error};
        std::map<int, ModelStore> stores;
        std::ifstream is(run->config.output_dir / "records.jsonl");
        for (std::string line; std::getline(is, line);) {
            const Json j = Json::parse(line);
            const CfeRecord rec = cfe_record_from_json(j.at("record"));
            if (!rec.certified()) continue;
            const int fold = j.at("fold").get<int>();
            if (!stores.count(fold))
                stores[fold] = load_model_store(run->config.output_dir / "models" / ("fold" + std::to_string(fold)) / "space");
            const int k = j.at("k").get<int>();
            const RobustnessSpec rspec{j.at("delta").get<double>(), j.at("alpha").get<double>(), k, run->config.rspec.prior};
            const auto out = run_verification(*rec.x_robust, rec.target_class, stores[fold].ensemble.prefix(k), rspec);
            const bool valid = stores[fold].base->predict(*rec.x_robust) == rec.target_class;
            ++replayed;
            failed += !(out.robust && valid && out.successes == rec.outcome->successes);
        }
    }
    std::vector<double> cuts;
    for (int i = 0; i < 32; ++i) cuts.push_back(0.4 + 0.01 * i);
    const auto ensemble = fakes::threshold_ensemble(cuts, 3);
    const auto model = fakes::vertical_boundary(0.45, 3);
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng rng(s);
        Vector x(3);
        x << 0.1 + 0.01 * static_cast<double>(s), 0.5, 0.5;
        const auto rspec = RobustnessSpec::make(0.8, 0.9, 32);
        const auto rec = betarce_explain(x, *model, ensemble, rspec, SphereParams::defaults(3), rng);
        if (!rec.certified()) continue;
        ++replayed;
        failed += !run_verification(*rec.x_robust, rec.target_class, ensemble, rspec).robust;
    }
    return {failed == 0 && replayed > 0, std::to_string(replayed) + " certified records replayed, " +
                                             std::to_string(failed) + " failed"};
}

// ---------------------------------------------------------------- 8
Verdict metric_oracles() {
    std::vector<std::string> problems;
    {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Dataset train;
        train.features.resize(500, 4);
        for (Eigen::Index i = 0; i < 500; ++i)
            for (Eigen::Index j = 0; j < 4; ++j) train.features(i, j) = u(rng);
        train.labels.assign(500, 0);
        int mismatches = 0;
        for (int q = 0; q < 200; ++q) {
            Vector x(4);
            for (int j = 0; j < 4; ++j) x[j] = u(rng);
            std::vector<double> d;
            for (Eigen::Index i = 0; i < 500; ++i) d.push_back((train.features.row(i).transpose() - x).norm());
            std::sort(d.begin(), d.end());
            const double brute = (d[0] + d[1] + d[2] + d[3] + d[4]) / 5.0;
            mismatches += std::fabs(plausibility(x, train, 5) - brute) > 1e-12;
        }
        if (mismatches) problems.push_back(std::to_string(mismatches) + " plausibility mismatches");
    }
    {
        const auto left = fakes::vertical_boundary(0.5, 1);
        const auto right = fakes::vertical_boundary(0.8, 1);
        const auto zero = std::make_shared<fakes::ConstantClassifier>(1, 0.0);
        auto v = [](double x) { return Vector::Constant(1, x); };
        struct Case {
            std::vector<std::pair<Vector, int>> cfes;
            std::vector<ClassifierPtr> models;
            double expected;
        };
        const std::vector<Case> cases{
            {{{v(0.9), 1}, {v(0.95), 1}}, {left, right}, 1.0},
            {{{v(0.6), 1}}, {left, right}, 0.5},
            {{{v(0.6), 1}, {v(0.3), 0}, {v(0.9), 0}}, {left, right, zero}, 5.0 / 9.0},
        };
        for (std::size_t i = 0; i < cases.size(); ++i)
            if (std::fabs(empirical_robustness(cases[i].cfes, cases[i].models) - cases[i].expected) > 1e-15)
                problems.push_back("micro-case " + std::to_string(i + 1));
    }
    double frac = 0.0;
    {
        Rng rng(88);
        const int n = 100000;
        const Matrix z = sample_annulus_unclipped(Vector::Zero(2), 0.5, 1.0, n, rng);
        int inner = 0;
        for (Eigen::Index i = 0; i < z.rows(); ++i) inner += z.row(i).norm() <= 0.75;
        frac = static_cast<double>(inner) / n;
        if (std::fabs(frac - 5.0 / 12.0) > 0.01) problems.push_back("annulus ratio");
    }
    std::string detail = "plausibility 200 queries, 3 micro-cases, annulus ratio " + fmt("%.4f", frac) + " vs 0.4167";
    for (const auto& p : problems) detail += "; FAILED " + p;
    return {problems.empty(), detail};
}

Verdict reproducibility(const CoverageRun& a, const CoverageRun& b) {
    if (!a.error.empty() || !b.error.empty()) return {false, "run failed"};
    const auto ca = slurp(a.config.output_dir / "results.csv");
    const auto cb = slurp(b.config.output_dir / "results.csv");
    return {!ca.empty() && ca == cb, "results.csv " + std::to_string(ca.size()) + " bytes, " +
                                         (ca == cb ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    auto on = [&](int c) { return wanted.empty() || wanted.count(c) > 0; };

    const fs::path root = fs::current_path() / "acceptance-work";
    fs::remove_all(root);
    fs::create_directories(root);

    bool all = true;
    auto report = [&](int n, const std::string& name, const Verdict& v) {
        std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", n, name.c_str(), v.detail.c_str());
        std::fflush(stdout);
        all = all && v.pass;
    };

    if (on(1)) report(1, "delta_max table", table_reproduction());
    if (on(2)) report(2, "feasibility anchor", feasibility_anchor());
    if (on(3)) report(3, "posterior quantile oracle", quantile_oracle());
    if (on(4)) report(4, "F-dominance lemma as stated", lemma_check());

    const bool need_run = on(5) || on(6) || on(7) || on(9);
    CoverageRun first, second;
    if (need_run) first = run_coverage(root, "run1");
    if (on(9)) second = run_coverage(root, "run2");
    if (on(5)) report(5, "coverage at desk scale", coverage(first));
    if (on(6)) report(6, "cost of robustness", cost_of_robustness(first));
    if (on(7)) {
        std::vector<const CoverageRun*> runs{&first};
        if (on(9)) runs.push_back(&second);
        report(7, "certificate soundness", certificate_soundness(runs));
    }
    if (on(8)) report(8, "metric oracles", metric_oracles());
    if (on(9)) report(9, "reproducibility", reproducibility(first, second));

    return all ? 0 : 1;
}
