#include "betarce/cfe.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "betarce/errors.hpp"
#include "betarce/verification.hpp"

namespace betarce {

namespace {

constexpr Eigen::Index kVerifyChunk = 64;

// Index of the accepted candidate closest to the center, if any.
using BatchFinder = std::function<std::optional<Eigen::Index>(const Matrix&)>;

std::vector<Eigen::Index> by_distance(const Matrix& z, const Vector& center, const std::vector<Eigen::Index>& idx) {
    std::vector<std::pair<double, Eigen::Index>> keyed;
    keyed.reserve(idx.size());
    for (auto i : idx) keyed.emplace_back((z.row(i).transpose() - center).squaredNorm(), i);
    std::sort(keyed.begin(), keyed.end());
    std::vector<Eigen::Index> out;
    out.reserve(keyed.size());
    for (const auto& [d, i] : keyed) out.push_back(i);
    return out;
}

std::vector<Eigen::Index> with_label(const Classifier& model, const Matrix& z, int label) {
    const auto labels = model.predict(z);
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) out.push_back(static_cast<Eigen::Index>(i));
    return out;
}

// Shrink the ball around `center` by halving while it still holds an accepted
// candidate, then grow annuli outward in steps of the final radius.
std::optional<Vector> sphere_schedule(const Vector& center, const SphereParams& params, Rng& rng,
                                      const BatchFinder& find, SearchStats& stats) {
    auto draw = [&](double r0, double r1) {
        ++stats.annuli;
        stats.candidates += params.n;
        return sample_annulus(center, r0, r1, params.n, rng);
    };

    double eta = params.eta;
    Matrix z = draw(0.0, eta);
    if (auto hit = find(z)) {
        Vector last = z.row(*hit).transpose();
        for (;;) {
            if (0.5 * eta < params.min_radius) return last;
            eta *= 0.5;
            z = draw(0.0, eta);
            hit = find(z);
            if (!hit) break;
            last = z.row(*hit).transpose();
        }
    }

    double a0 = eta;
    double a1 = 2.0 * eta;
    for (;;) {
        const double outer = std::min(a1, params.max_radius);
        if (a0 >= outer) return std::nullopt;
        z = draw(a0, outer);
        if (auto hit = find(z)) return Vector(z.row(*hit).transpose());
        if (a1 >= params.max_radius) return std::nullopt;
        a0 = a1;
        a1 += eta;
    }
}

}  // namespace

SphereParams SphereParams::defaults(int dim) {
    SphereParams p;
    p.max_radius = std::sqrt(static_cast<double>(dim));
    return p;
}

void SphereParams::validate() const {
    if (n < 1) throw DomainError("sphere sample count n must be positive");
    if (!(min_radius > 0.0 && min_radius < eta && eta < max_radius))
        throw DomainError("sphere radii must satisfy 0 < min_radius < eta < max_radius");
}

std::string to_string(CfeStatus s) {
    switch (s) {
        case CfeStatus::Robustified: return "robustified";
        case CfeStatus::BaseAlreadyRobust: return "base_already_robust";
        case CfeStatus::SearchExhausted: return "search_exhausted";
        case CfeStatus::BaseNotFound: return "base_not_found";
    }
    return "base_not_found";
}

CfeStatus cfe_status_from_string(const std::string& s) {
    for (auto st : {CfeStatus::Robustified, CfeStatus::BaseAlreadyRobust, CfeStatus::SearchExhausted,
                    CfeStatus::BaseNotFound})
        if (to_string(st) == s) return st;
    throw DomainError("unknown record status '" + s + "'");
}

Matrix sample_annulus_unclipped(const Vector& center, double r0, double r1, int n, Rng& rng) {
    if (!(r0 >= 0.0 && r0 < r1)) {
        std::ostringstream os;
        os << "annulus needs 0 <= r0 < r1, got r0=" << r0 << " r1=" << r1;
        throw DomainError(os.str());
    }
    if (n < 1) throw DomainError("annulus sample count must be positive");
    const auto d = center.size();
    const double dd = static_cast<double>(d);
    const double inner = std::pow(r0 / r1, dd);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix out(n, d);
    for (int i = 0; i < n; ++i) {
        Vector dir(d);
        double norm = 0.0;
        do {
            for (Eigen::Index j = 0; j < d; ++j) dir[j] = normal(rng);
            norm = dir.norm();
        } while (norm == 0.0);
        // Inverse of the volume CDF, scaled by r1 to stay finite in high d.
        const double r = r1 * std::pow(unif(rng) * (1.0 - inner) + inner, 1.0 / dd);
        out.row(i) = (center + (r / norm) * dir).transpose();
    }
    return out;
}

Matrix sample_annulus(const Vector& center, double r0, double r1, int n, Rng& rng) {
    Matrix out = sample_annulus_unclipped(center, r0, r1, n, rng);
    return out.cwiseMax(0.0).cwiseMin(1.0);
}

Vector base_growing_spheres(const Classifier& model, const Vector& x_orig, const SphereParams& params, Rng& rng,
                            SearchStats* stats) {
    params.validate();
    if (x_orig.size() != model.input_dim()) throw DimensionError("instance dimension does not match the model");
    const int target = 1 - model.predict(x_orig);
    SearchStats local;
    BatchFinder find = [&](const Matrix& z) -> std::optional<Eigen::Index> {
        const auto valid = by_distance(z, x_orig, with_label(model, z, target));
        if (valid.empty()) return std::nullopt;
        return valid.front();
    };
    auto found = sphere_schedule(x_orig, params, rng, find, local);
    if (stats) *stats = local;
    if (!found) throw BaseNotFoundError("no point with the opposite label within the search radius");
    return *found;
}

CfeRecord betarce_explain(const Vector& x_orig, const Classifier& model, const Ensemble& ensemble,
                          const RobustnessSpec& rspec, const SphereParams& params, Rng& rng,
                          const std::optional<Vector>& x_base) {
    params.validate();
    const double limit = delta_max(rspec.k, rspec.alpha, rspec.prior);
    if (!(rspec.delta < limit)) {
        std::ostringstream os;
        os << "delta=" << rspec.delta << " is not verifiable with k=" << rspec.k << " and alpha=" << rspec.alpha
           << " (delta_max=" << limit << ")";
        throw InfeasibleSpecError(os.str());
    }
    if (ensemble.size() != rspec.k)
        throw EnsembleSizeError("ensemble has " + std::to_string(ensemble.size()) + " members but k=" +
                                std::to_string(rspec.k));
    if (x_orig.size() != model.input_dim() || ensemble.input_dim() != model.input_dim())
        throw DimensionError("instance, model and ensemble dimensions must agree");

    CfeRecord rec;
    rec.x_orig = x_orig;
    rec.y_orig = model.predict(x_orig);
    rec.target_class = 1 - rec.y_orig;

    if (x_base) {
        if (x_base->size() != x_orig.size()) throw DimensionError("base counterfactual dimension mismatch");
        rec.x_base = *x_base;
    } else {
        try {
            rec.x_base = base_growing_spheres(model, x_orig, params, rng);
        } catch (const BaseNotFoundError&) {
            rec.status = CfeStatus::BaseNotFound;
            return rec;
        }
    }

    if (model.predict(rec.x_base) == rec.target_class) {
        auto outcome = run_verification(rec.x_base, rec.target_class, ensemble, rspec);
        ++rec.search_stats.robustness_checks;
        if (outcome.robust) {
            rec.status = CfeStatus::BaseAlreadyRobust;
            rec.x_robust = rec.x_base;
            rec.outcome = outcome;
            return rec;
        }
    }

    // Validity costs one model query, so it filters before the k-member check.
    // Valid candidates are verified nearest-first; the first certified one is
    // the batch minimizer.
    BatchFinder find = [&](const Matrix& z) -> std::optional<Eigen::Index> {
        const auto valid = by_distance(z, rec.x_base, with_label(model, z, rec.target_class));
        for (std::size_t start = 0; start < valid.size(); start += kVerifyChunk) {
            const std::size_t stop = std::min(valid.size(), start + static_cast<std::size_t>(kVerifyChunk));
            Matrix chunk(static_cast<Eigen::Index>(stop - start), z.cols());
            for (std::size_t i = start; i < stop; ++i) chunk.row(static_cast<Eigen::Index>(i - start)) = z.row(valid[i]);
            const auto counts = count_agreements(ensemble, chunk, rec.target_class);
            for (std::size_t i = 0; i < counts.size(); ++i) {
                ++rec.search_stats.robustness_checks;
                if (outcome_from_count(counts[i], rspec).robust) return valid[start + i];
            }
        }
        return std::nullopt;
    };

    SearchStats schedule_stats;
    auto found = sphere_schedule(rec.x_base, params, rng, find, schedule_stats);
    rec.search_stats.annuli = schedule_stats.annuli;
    rec.search_stats.candidates = schedule_stats.candidates;
    if (!found) {
        rec.status = CfeStatus::SearchExhausted;
        return rec;
    }
    rec.x_robust = *found;
    rec.outcome = run_verification(*found, rec.target_class, ensemble, rspec);
    rec.status = CfeStatus::Robustified;
    rec.dist_to_base = (*found - rec.x_base).lpNorm<1>();
    return rec;
}

}  // namespace betarce
