#include "betarce/verification.hpp"

#include "betarce/errors.hpp"

namespace betarce {

VerificationOutcome outcome_from_count(int successes, const RobustnessSpec& spec) {
    VerificationOutcome out;
    out.successes = successes;
    out.trials = spec.k;
    out.posterior = posterior_update(spec.prior, successes, spec.k);
    out.robust = verify_delta_alpha(out.posterior, spec.delta, spec.alpha);
    return out;
}

VerificationOutcome run_verification(const Vector& x_cf, int y_cf, const Ensemble& ensemble,
                                     const RobustnessSpec& spec) {
    if (ensemble.size() != spec.k)
        throw EnsembleSizeError("ensemble has " + std::to_string(ensemble.size()) + " members but k=" +
                                std::to_string(spec.k));
    if (x_cf.size() != ensemble.input_dim())
        throw DimensionError("counterfactual has " + std::to_string(x_cf.size()) + " features, ensemble expects " +
                             std::to_string(ensemble.input_dim()));
    Matrix row(1, x_cf.size());
    row.row(0) = x_cf.transpose();
    return outcome_from_count(count_agreements(ensemble, row, y_cf)[0], spec);
}

}  // namespace betarce
