#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace betarce {

/// Beta(a, b) over the robustness probability of one counterfactual.
struct BetaPosterior {
    double a = 0.5;
    double b = 0.5;

    BetaPosterior() = default;
    BetaPosterior(double a_, double b_);

    static BetaPosterior jeffreys() { return {0.5, 0.5}; }
    static BetaPosterior uniform() { return {1.0, 1.0}; }

    bool operator==(const BetaPosterior&) const = default;
};

/// Which quantile bounds the robustness probability from below.
/// OneSided: F^-1(1 - alpha), the certification rule.
/// EqualTailed: F^-1((1 - alpha) / 2), the lower end of the central alpha interval.
enum class IntervalKind { OneSided, EqualTailed };

std::string to_string(IntervalKind kind);
IntervalKind interval_kind_from_string(const std::string& s);

/// (delta, alpha, k) with delta verifiable by k agreeing estimators.
struct RobustnessSpec {
    double delta = 0.9;
    double alpha = 0.9;
    int k = 32;
    BetaPosterior prior = BetaPosterior::jeffreys();

    /// Throws InfeasibleSpecError when delta >= delta_max(k, alpha, prior).
    static RobustnessSpec make(double delta, double alpha, int k,
                               BetaPosterior prior = BetaPosterior::jeffreys());
};

struct VerificationOutcome {
    bool robust = false;
    BetaPosterior posterior;
    int successes = 0;
    int trials = 0;
};

struct CredibleInterval {
    double lower = 0.0;
    double upper = 1.0;
    double width() const { return upper - lower; }
};

double log_beta(double a, double b);
double beta_pdf(double x, double a, double b);

/// Regularized incomplete Beta function I_x(a, b).
double reg_inc_beta(double x, double a, double b);
/// 1 - I_x(a, b), accurate in the upper tail.
double reg_inc_beta_upper(double x, double a, double b);

/// Quantile of Beta(a, b); u must lie strictly inside (0, 1).
double beta_inv_cdf(double u, double a, double b);

BetaPosterior posterior_update(const BetaPosterior& prior, std::span<const bool> outcomes);
BetaPosterior posterior_update(const BetaPosterior& prior, int successes, int trials);

/// True when P(p > delta) > alpha under `posterior`, decided by the
/// (1 - alpha) quantile.
bool verify_delta_alpha(const BetaPosterior& posterior, double delta, double alpha);

/// Largest delta that k estimators can certify at confidence alpha.
/// Requires alpha > 0.5 and a symmetric prior.
double delta_max(int k, double alpha, const BetaPosterior& prior = BetaPosterior::jeffreys(),
                 IntervalKind kind = IntervalKind::OneSided);

/// Central credible interval holding `level` of the posterior mass.
CredibleInterval credible_interval(const BetaPosterior& posterior, double level);

}  // namespace betarce
