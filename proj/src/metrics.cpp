#include "betarce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "betarce/errors.hpp"

namespace betarce {

namespace {

void check_dims(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw DimensionError("vectors have different dimensions (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
}

}  // namespace

double empirical_robustness(const std::vector<std::pair<Vector, int>>& cfes, const std::vector<ClassifierPtr>& eval_models) {
    if (cfes.empty() || eval_models.empty()) throw EmptyInputError("empirical robustness needs counterfactuals and models");
    const auto d = cfes.front().first.size();
    Matrix x(static_cast<Eigen::Index>(cfes.size()), d);
    for (std::size_t i = 0; i < cfes.size(); ++i) {
        if (cfes[i].first.size() != d) throw DimensionError("counterfactuals have mixed dimensions");
        x.row(static_cast<Eigen::Index>(i)) = cfes[i].first.transpose();
    }
    long agree = 0;
    for (const auto& model : eval_models) {
        if (model->input_dim() != d) throw DimensionError("evaluation model dimension does not match counterfactuals");
        const auto labels = model->predict(x);
        for (std::size_t i = 0; i < labels.size(); ++i) agree += labels[i] == cfes[i].second ? 1 : 0;
    }
    return static_cast<double>(agree) / static_cast<double>(cfes.size() * eval_models.size());
}

double proximity(const Vector& x_cf, const Vector& x_orig, Norm norm) {
    check_dims(x_cf, x_orig);
    return norm == Norm::L1 ? (x_cf - x_orig).lpNorm<1>() : (x_cf - x_orig).norm();
}

double plausibility(const Vector& x_cf, const Dataset& train, int n) {
    if (n < 1) throw DomainError("neighbor count must be positive");
    if (n > train.rows())
        throw DomainError("neighbor count " + std::to_string(n) + " exceeds dataset size " + std::to_string(train.rows()));
    if (x_cf.size() != train.dim()) throw DimensionError("counterfactual dimension does not match dataset");
    std::vector<std::pair<double, Eigen::Index>> dist;
    dist.reserve(static_cast<std::size_t>(train.rows()));
    for (Eigen::Index i = 0; i < train.rows(); ++i)
        dist.emplace_back((train.features.row(i).transpose() - x_cf).squaredNorm(), i);
    std::partial_sort(dist.begin(), dist.begin() + n, dist.end());
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += std::sqrt(dist[static_cast<std::size_t>(i)].first);
    return total / n;
}

double distance_to_base(const Vector& x_robust, const Vector& x_base) { return proximity(x_robust, x_base, Norm::L1); }

MeanSe mean_and_se(const std::vector<double>& values) {
    if (values.empty()) return {};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace betarce
