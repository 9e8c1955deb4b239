#pragma once

#include "betarce/models.hpp"
#include "betarce/stats.hpp"

namespace betarce {

/// Queries every ensemble member once on x_cf, updates spec.prior with the
/// agreements and applies the (delta, alpha) check. No early exit: the
/// returned posterior always reflects all k trials.
VerificationOutcome run_verification(const Vector& x_cf, int y_cf, const Ensemble& ensemble,
                                     const RobustnessSpec& spec);

/// Outcome for an already known agreement count.
VerificationOutcome outcome_from_count(int successes, const RobustnessSpec& spec);

}  // namespace betarce
