#pragma once

#include <optional>
#include <string>

#include "betarce/models.hpp"
#include "betarce/stats.hpp"

namespace betarce {

/// Growing-spheres schedule: initial radius eta, n candidates per annulus,
/// shrink floor and growth ceiling.
struct SphereParams {
    double eta = 0.1;
    int n = 1000;
    double min_radius = 1e-4;
    double max_radius = 1.0;

    /// Defaults with the ceiling at the diagonal of the unit feature box.
    static SphereParams defaults(int dim);
    void validate() const;
};

enum class CfeStatus { Robustified, BaseAlreadyRobust, SearchExhausted, BaseNotFound };

std::string to_string(CfeStatus s);
CfeStatus cfe_status_from_string(const std::string& s);

struct SearchStats {
    int annuli = 0;
    long candidates = 0;
    long robustness_checks = 0;
};

struct CfeRecord {
    Vector x_orig;
    int y_orig = 0;
    Vector x_base;
    std::optional<Vector> x_robust;
    int target_class = 1;
    std::optional<VerificationOutcome> outcome;
    CfeStatus status = CfeStatus::BaseNotFound;
    double dist_to_base = 0.0;
    SearchStats search_stats;

    bool certified() const { return status == CfeStatus::Robustified || status == CfeStatus::BaseAlreadyRobust; }
};

/// n points uniform by volume in {x : r0 <= |x - center| <= r1}, not clipped.
Matrix sample_annulus_unclipped(const Vector& center, double r0, double r1, int n, Rng& rng);

/// Same draw clipped to the feature box [0,1]^d.
Matrix sample_annulus(const Vector& center, double r0, double r1, int n, Rng& rng);

/// Closest point to x_orig with the opposite label under `model`.
/// Throws BaseNotFoundError when the growth ceiling is reached first.
Vector base_growing_spheres(const Classifier& model, const Vector& x_orig, const SphereParams& params, Rng& rng,
                            SearchStats* stats = nullptr);

/// Moves a base counterfactual to the nearest found point that stays valid
/// under `model` and is certified (delta, alpha)-robust by `ensemble`.
/// Throws InfeasibleSpecError when rspec cannot be verified with rspec.k members.
CfeRecord betarce_explain(const Vector& x_orig, const Classifier& model, const Ensemble& ensemble,
                          const RobustnessSpec& rspec, const SphereParams& params, Rng& rng,
                          const std::optional<Vector>& x_base = std::nullopt);

}  // namespace betarce
