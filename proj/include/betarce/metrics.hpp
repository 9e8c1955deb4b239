#pragma once

#include <string>
#include <utility>
#include <vector>

#include "betarce/dataset.hpp"
#include "betarce/models.hpp"

namespace betarce {

enum class Norm { L1, L2 };

struct MetricsCounts {
    long n_cfes = 0;
    long n_eval_models = 0;
    int n_neighbors = 5;
};

struct MetricsReport {
    double empirical_robustness = 0.0;
    double proximity_l1 = 0.0;
    double proximity_l2 = 0.0;
    double plausibility = 0.0;
    double dist_to_base = 0.0;
    MetricsCounts counts;
};

/// Mean over all (cfe, model) pairs of [model(x_cf) == target].
double empirical_robustness(const std::vector<std::pair<Vector, int>>& cfes, const std::vector<ClassifierPtr>& eval_models);

double proximity(const Vector& x_cf, const Vector& x_orig, Norm norm);

/// Mean L2 distance from x_cf to its n nearest training rows (exact scan,
/// ties broken by row index).
double plausibility(const Vector& x_cf, const Dataset& train, int n);

/// L1 distance between a robustified counterfactual and its base.
double distance_to_base(const Vector& x_robust, const Vector& x_base);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

/// Mean and standard error of the mean.
MeanSe mean_and_se(const std::vector<double>& values);

}  // namespace betarce
