#include "econcal/reversibility.hpp"

#include <cmath>

#include "econcal/errors.hpp"

namespace econcal {
namespace {

// Weighted mean of u(p | q) over reachable q. The substitution
// q = -log(1 - s) / k turns the e^{-k.q} weight into the uniform measure on
// the unit cube, which is then sampled on a midpoint lattice.
double reach_weight(const ConditionalUtility& u, const Holdings& p, const std::vector<double>& k,
                    std::size_t per_axis) {
  const std::size_t dims = k.size();
  std::size_t total = 1;
  for (std::size_t d = 0; d < dims; ++d) total *= per_axis;
  const double h = 1.0 / static_cast<double>(per_axis);
  double num = 0.0;
  std::size_t reached = 0;
  Holdings q;
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t rest = n;
    for (std::size_t d = 0; d < dims; ++d) {
      const double s = (static_cast<double>(rest % per_axis) + 0.5) * h;
      q[d] = -std::log1p(-s) / k[d];
      rest /= per_axis;
    }
    const double v = u(p, q);
    if (!(v > 0.0) || !std::isfinite(v)) continue;
    num += v;
    ++reached;
  }
  return reached > 0 ? num / static_cast<double>(reached) : 0.0;
}

}  // namespace

ConditionalUtility conditional_utility(const UtilitySpec& spec, double comparison_mean) {
  const std::size_t gc = goods_count_of(spec);
  return [spec, gc, comparison_mean](const Holdings& outcome, const Holdings& current) {
    const AgentDensity d = make_density(spec, EncounterContext{current, comparison_mean});
    return d.evaluate(outcome, gc);
  };
}

ReversibilityReport reversibility_check(const ConditionalUtility& ui, const ConditionalUtility& uj,
                                        const std::vector<double>& k, std::size_t n_probes,
                                        Rng& rng, const ReversibilityOptions& options) {
  if (k.empty() || k.size() > commodity_count(kMaxGoods))
    throw UsageError("reversibility_check: k needs one entry per commodity");
  for (double v : k)
    if (!(v > 0.0)) throw UsageError("reversibility_check: k must be positive");

  auto rho = [&](const ConditionalUtility& u, const Holdings& p) {
    const double coarse = reach_weight(u, p, k, options.lattice);
    const double fine = reach_weight(u, p, k, 2 * options.lattice);
    const double scale = std::max(std::abs(coarse), std::abs(fine));
    if (scale > 0.0 && std::abs(coarse - fine) > options.quadrature_tolerance * scale)
      throw NumericalError("reversibility_check: quadrature did not converge");
    return coarse;
  };

  ReversibilityReport rep;
  for (std::size_t n = 0; n < n_probes; ++n) {
    Holdings pi, pj, pi2, pj2;
    for (std::size_t c = 0; c < k.size(); ++c) {
      const double box = options.probe_scale / k[c];
      pi[c] = box * (1.0 - uniform01(rng));
      pj[c] = box * (1.0 - uniform01(rng));
      const double pool = pi[c] + pj[c];
      pi2[c] = pool * uniform01(rng);
      pj2[c] = pool - pi2[c];
    }
    const double fwd_u = ui(pi2, pi) * uj(pj2, pj);
    const double rev_u = ui(pi, pi2) * uj(pj, pj2);
    if (!(fwd_u > 0.0) && !(rev_u > 0.0)) {
      ++rep.probes_skipped;
      continue;
    }
    const double fwd = fwd_u * rho(ui, pi) * rho(uj, pj);
    const double rev = rev_u * rho(ui, pi2) * rho(uj, pj2);
    if (!(fwd > 0.0) && !(rev > 0.0)) {
      ++rep.probes_skipped;
      continue;
    }
    ++rep.probes_used;
    rep.max_violation = std::max(rep.max_violation, std::abs(fwd - rev) / (fwd + rev + 1e-30));
  }
  return rep;
}

}  // namespace econcal
