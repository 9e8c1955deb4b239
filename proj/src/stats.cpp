#include "betarce/stats.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "betarce/errors.hpp"

namespace betarce {

namespace {

constexpr int kMaxFractionTerms = 20000;
constexpr double kFractionEps = 1e-16;
constexpr double kTiny = 1e-300;

void check_shape(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        std::ostringstream os;
        os << "Beta shape parameters must be finite and positive, got (" << a << ", " << b << ")";
        throw DomainError(os.str());
    }
}

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_fraction(double x, double a, double b) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxFractionTerms; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kFractionEps) return h;
    }
    return h;
}

// x^a (1-x)^b / (a B(a,b))
double front_factor(double x, double a, double b) {
    return std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b)) / a;
}

// Returns (I_x(a,b), 1 - I_x(a,b)), each computed from the side that avoids cancellation.
std::pair<double, double> inc_beta_pair(double x, double a, double b) {
    check_shape(a, b);
    if (!(x >= 0.0 && x <= 1.0)) {
        std::ostringstream os;
        os << "incomplete Beta argument must lie in [0,1], got " << x;
        throw DomainError(os.str());
    }
    if (x == 0.0) return {0.0, 1.0};
    if (x == 1.0) return {1.0, 0.0};
    if (x < (a + 1.0) / (a + b + 2.0)) {
        const double lower = front_factor(x, a, b) * beta_fraction(x, a, b);
        return {lower, 1.0 - lower};
    }
    const double upper = front_factor(1.0 - x, b, a) * beta_fraction(1.0 - x, b, a);
    return {1.0 - upper, upper};
}

}  // namespace

BetaPosterior::BetaPosterior(double a_, double b_) : a(a_), b(b_) { check_shape(a_, b_); }

std::string to_string(IntervalKind kind) {
    return kind == IntervalKind::OneSided ? "one-sided" : "equal-tailed";
}

IntervalKind interval_kind_from_string(const std::string& s) {
    if (s == "one-sided") return IntervalKind::OneSided;
    if (s == "equal-tailed") return IntervalKind::EqualTailed;
    throw DomainError("unknown interval kind '" + s + "' (expected one-sided or equal-tailed)");
}

RobustnessSpec RobustnessSpec::make(double delta, double alpha, int k, BetaPosterior prior) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
    if (k < 1) throw DomainError("k must be a positive integer");
    const double limit = delta_max(k, alpha, prior);
    if (!(delta < limit)) {
        std::ostringstream os;
        os << "delta=" << delta << " is not verifiable with k=" << k << " and alpha=" << alpha
           << " (delta_max=" << limit << ")";
        throw InfeasibleSpecError(os.str());
    }
    return RobustnessSpec{delta, alpha, k, prior};
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double beta_pdf(double x, double a, double b) {
    check_shape(a, b);
    if (x < 0.0 || x > 1.0) return 0.0;
    if (x == 0.0 || x == 1.0) {
        const double e = x == 0.0 ? a : b;
        if (e < 1.0) return std::numeric_limits<double>::infinity();
        if (e > 1.0) return 0.0;
        return std::exp(-log_beta(a, b));
    }
    return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b));
}

double reg_inc_beta(double x, double a, double b) { return inc_beta_pair(x, a, b).first; }

double reg_inc_beta_upper(double x, double a, double b) { return inc_beta_pair(x, a, b).second; }

double beta_inv_cdf(double u, double a, double b) {
    check_shape(a, b);
    if (!(u > 0.0 && u < 1.0)) {
        std::ostringstream os;
        os << "quantile level must lie strictly inside (0,1), got " << u;
        throw DomainError(os.str());
    }
    // Solve in the smaller tail so the residual keeps relative precision.
    const bool lower_tail = u <= 0.5;
    const double target = lower_tail ? u : 1.0 - u;
    auto residual = [&](double x) {
        auto [lo, hi] = inc_beta_pair(x, a, b);
        return lower_tail ? lo - target : target - hi;
    };

    double lo = 0.0;
    double hi = 1.0;
    double x = a / (a + b);
    for (int iter = 0; iter < 400; ++iter) {
        const double g = residual(x);
        if (std::fabs(g) <= 1e-15 * target) return x;
        if (g < 0.0)
            lo = x;
        else
            hi = x;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(hi, 1e-300)) break;
        const double density = beta_pdf(x, a, b);
        double next = std::numeric_limits<double>::quiet_NaN();
        if (density > 0.0 && std::isfinite(density)) next = x - g / density;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
    }
    return x;
}

BetaPosterior posterior_update(const BetaPosterior& prior, std::span<const bool> outcomes) {
    int successes = 0;
    for (bool o : outcomes) successes += o ? 1 : 0;
    return posterior_update(prior, successes, static_cast<int>(outcomes.size()));
}

BetaPosterior posterior_update(const BetaPosterior& prior, int successes, int trials) {
    if (successes < 0 || trials < successes) throw DomainError("successes must lie in [0, trials]");
    return BetaPosterior{prior.a + successes, prior.b + (trials - successes)};
}

bool verify_delta_alpha(const BetaPosterior& posterior, double delta, double alpha) {
    return beta_inv_cdf(1.0 - alpha, posterior.a, posterior.b) >= delta;
}

double delta_max(int k, double alpha, const BetaPosterior& prior, IntervalKind kind) {
    if (k < 1) throw PreconditionError("k must be a positive integer");
    if (!(alpha > 0.5 && alpha < 1.0)) {
        std::ostringstream os;
        os << "delta_max requires alpha in (0.5, 1), got " << alpha;
        throw PreconditionError(os.str());
    }
    if (prior.a != prior.b) throw PreconditionError("delta_max requires a symmetric prior (a == b)");
    const double tail = kind == IntervalKind::OneSided ? 1.0 - alpha : 0.5 * (1.0 - alpha);
    return beta_inv_cdf(tail, prior.a + k, prior.b);
}

CredibleInterval credible_interval(const BetaPosterior& posterior, double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("credible level must lie in (0,1)");
    const double tail = 0.5 * (1.0 - level);
    return {beta_inv_cdf(tail, posterior.a, posterior.b),
            beta_inv_cdf(1.0 - tail, posterior.a, posterior.b)};
}

}  // namespace betarce
