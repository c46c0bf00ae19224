#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "econcal/holdings.hpp"
#include "econcal/rng.hpp"
#include "econcal/utility.hpp"

namespace econcal {

/// u(outcome | current): weight of moving to `outcome` from `current`.
using ConditionalUtility = std::function<double(const Holdings& outcome, const Holdings& current)>;

/// Conditional form of a utility family. Neighbour-dependent families see a
/// fixed comparison mean.
ConditionalUtility conditional_utility(const UtilitySpec& spec, double comparison_mean = 0.0);

struct ReversibilityOptions {
  /// Midpoint lattice points per axis for the weight quadrature; the result
  /// is cross-checked on a lattice twice as fine.
  std::size_t lattice = 64;
  /// Probe holdings are drawn uniformly from (0, probe_scale / k_c].
  double probe_scale = 2.0;
  double quadrature_tolerance = 0.01;
};

struct ReversibilityReport {
  double max_violation = 0.0;
  std::size_t probes_used = 0;
  std::size_t probes_skipped = 0;
};

/// Detailed-balance check of the pairwise exchange process. With
/// sigma(p', p) = u(p' | p) rho(p), reports the largest
///   |sigma_i(pi', pi) sigma_j(pj', pj) - sigma_i(pi, pi') sigma_j(pj, pj')| / (sum + 1e-30)
/// over random conserving quadruples where either product is nonzero.
/// rho(p) is the e^{-k.q}-weighted mean of u(p | q) over the states q from
/// which p is reachable. `k` has one entry per commodity (money first).
/// Throws NumericalError when the two quadrature lattices disagree by more
/// than the tolerance.
ReversibilityReport reversibility_check(const ConditionalUtility& ui, const ConditionalUtility& uj,
                                        const std::vector<double>& k, std::size_t n_probes,
                                        Rng& rng, const ReversibilityOptions& options = {});

}  // namespace econcal
