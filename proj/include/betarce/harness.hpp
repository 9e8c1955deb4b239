#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "betarce/cfe.hpp"
#include "betarce/dataset.hpp"
#include "betarce/metrics.hpp"
#include "betarce/models.hpp"
#include "betarce/serialize.hpp"
#include "betarce/stats.hpp"

namespace betarce {

/// Reads a headed comma-separated file. Rows with a missing cell (empty,
/// NA, NaN, ? or null) are dropped, features are min-max scaled (constant
/// columns become zero). Labels must be 0/1 unless `label_threshold` is
/// given, in which case y = value > threshold.
Dataset load_dataset(const std::filesystem::path& path, const std::string& label_column,
                     std::optional<double> label_threshold = std::nullopt);

/// Writes features in raw units plus the label column.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data, const std::string& label_column);

/// Seeded partition of row indices 0..n-1 into `folds` near-equal parts,
/// each sorted. Fold f is held out when it is explained and scored.
std::vector<std::vector<std::size_t>> partition_folds(std::size_t n, int folds, std::uint64_t master);

struct RunConfig {
    std::string dataset_path;
    std::string label_column = "label";
    std::optional<double> label_threshold;
    /// Base classifier M; also the base of both model spaces.
    ArchConfig model;
    ModelSpaceSpec space;
    /// Space the evaluation models are drawn from; may differ from `space`.
    ModelSpaceSpec eval_space;
    RobustnessSpec rspec;
    std::vector<double> delta_grid{0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> alpha_grid;
    std::vector<int> k_grid;
    /// Growth ceiling defaults to sqrt(d) when absent.
    SphereParams sphere;
    bool sphere_max_radius_set = false;
    int folds = 3;
    int instances_per_fold = 30;
    int eval_models_per_fold = 30;
    int plausibility_neighbors = 5;
    std::uint64_t master_seed = 0;
    std::filesystem::path output_dir = "betarce-out";
    bool save_models = false;

    void validate() const;
};

Json to_json(const RunConfig& c);
RunConfig run_config_from_json(const Json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Output directory used when neither flag nor config names one.
std::filesystem::path default_output_dir();

/// One (fold, k, alpha, delta) cell; fold == -1 pools all folds.
struct CellSummary {
    int fold = -1;
    int k = 0;
    double alpha = 0.0;
    double delta = 0.0;
    long n_instances = 0;
    long n_certified = 0;
    long n_eval_models = 0;
    double empirical_robustness = 0.0;
    double empirical_robustness_se = 0.0;
    double base_empirical_robustness = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    double ci_width = 0.0;
    double proximity_l1 = 0.0;
    double proximity_l2 = 0.0;
    double plausibility = 0.0;
    double dist_to_base = 0.0;
};

/// Fixed column order of results.csv.
std::string results_csv_header();
std::string results_csv_row(const std::string& dataset, const RunConfig& config, const CellSummary& cell);

struct RunManifest {
    Json document;
    std::filesystem::path path;
    std::vector<CellSummary> cells;
};

/// Empirical robustness of certified counterfactuals for each delta in
/// config.delta_grid, at (config.rspec.k, config.rspec.alpha), against
/// freshly sampled models from config.eval_space.
RunManifest run_coverage_experiment(const RunConfig& config);

/// Same pipeline swept over k_grid x alpha_grid x delta_grid. Every cell is
/// checked for feasibility before any training starts.
RunManifest run_sensitivity_experiment(const RunConfig& config, const std::vector<double>& alpha_grid,
                                       const std::vector<int>& k_grid);

/// Recomputes every cell summary of a finished run from its records and the
/// dataset, rebuilding evaluation models from their recorded settings.
std::vector<CellSummary> evaluate_manifest(const std::filesystem::path& manifest_path);

}  // namespace betarce
