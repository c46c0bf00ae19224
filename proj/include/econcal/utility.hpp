#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "econcal/holdings.hpp"

namespace econcal {

// Utility families. Every utility is an unnormalized density for the
// outcome of a pairwise encounter; zero marks outcomes outside the support.

/// m^(eta-1) * prod_j g_j^(alpha_j-1)
struct CobbDouglas {
  double eta = 1.0;
  std::vector<double> alphas;
};

/// m^(eta-1) * (g1+g2)^(alpha-1)
struct Substitutes {
  double eta = 1.0;
  double alpha = 1.0;
};

/// m^(eta-1) * min(g1,g2)^(alpha-1)
struct Complements {
  double eta = 1.0;
  double alpha = 1.0;
};

/// m^(eta-1) * g2^(alpha-1) * exp(-g1^2 / (k (g1-c))), zero for g1 <= c.
struct Satiable {
  double eta = 3.0;
  double alpha = 3.0;
  double c = 0.3;
  double k = 0.6;
};

/// One good. Outcome weight m'^(eta-1) g'^(alpha-1), gated by the implied
/// price (m'-m)/(g-g'): a seller refuses prices below mu1, a buyer refuses
/// prices above mu2.
struct PriceBandSeparable {
  double eta = 3.0;
  double alpha = 3.0;
  double mu1 = 0.9;
  double mu2 = 1.1;
};

/// As PriceBandSeparable but with outcome weight (m+m')^(eta-1) (g+g')^(alpha-1),
/// where (m, g) are the holdings before the encounter.
struct PriceBandAggregate {
  double eta = 3.0;
  double alpha = 3.0;
  double mu1 = 0.9;
  double mu2 = 1.1;
};

/// U(x) = e^x
struct ExpComparison {};

/// U(x) = (a e^x + b e^-x) / (e^x + e^-x), a > b > 0
struct SigmoidComparison {
  double a = 1.5;
  double b = 0.5;
};

using Comparison = std::variant<ExpComparison, SigmoidComparison>;

/// One good. m^(eta-1) g^(alpha-1) U(g - g_n), g_n the mean goods of the
/// agent's comparison neighbourhood.
struct Interdependent {
  double eta = 3.0;
  double alpha = 3.0;
  Comparison comparison = ExpComparison{};
};

using UtilitySpec = std::variant<CobbDouglas, Substitutes, Complements, Satiable,
                                 PriceBandSeparable, PriceBandAggregate, Interdependent>;

/// Number of goods (excluding money) the family is defined over.
std::size_t goods_count_of(const UtilitySpec& spec);
std::string family_name(const UtilitySpec& spec);
double money_exponent(const UtilitySpec& spec);

/// Throws ConfigError describing every violated invariant.
void validate(const UtilitySpec& spec);
std::vector<std::string> violations(const UtilitySpec& spec);

/// What a family may condition on besides the outcome itself.
struct EncounterContext {
  Holdings current{};
  double comparison_mean = 0.0;
};

// ---------------------------------------------------------------------------
// Factorized form used by the samplers. Every family is a product of
// per-commodity factors, optionally with goods coupled jointly, optionally
// gated by an implied-price condition.

enum class FactorKind : std::uint8_t {
  Power,              // x^e
  ShiftedPower,       // (x + shift)^e
  Satiable,           // exp(-x^2 / (k (x - c))), 0 for x <= c
  ComparisonExp,      // x^e exp(x - g_n)
  ComparisonSigmoid,  // x^e U(x - g_n)
};

struct AxisFactor {
  FactorKind kind = FactorKind::Power;
  double exponent = 0.0;
  double shift = 0.0;
  double c = 0.0;
  double k = 1.0;
  double reference = 0.0;
  double a = 1.0;
  double b = 1.0;

  double operator()(double x) const;
  bool is_power() const { return kind == FactorKind::Power; }
};

enum class JointGoods : std::uint8_t { None, Substitutes, Complements };

struct PriceGate {
  bool active = false;
  double mu_sell = 0.0;  // mu1
  double mu_buy = 0.0;   // mu2
  Holdings current{};
};

struct AgentDensity {
  AxisFactor money;
  std::array<AxisFactor, kMaxGoods> goods{};
  JointGoods joint = JointGoods::None;
  double joint_exponent = 0.0;
  PriceGate gate;

  /// Goods part only (both goods), honouring a joint coupling.
  double goods_weight(double g1, double g2) const;
  /// Product of all factors, without the price gate.
  double base(const Holdings& outcome, std::size_t goods_count) const;
  /// This agent's own gate rule for moving from gate.current to `outcome`.
  bool accepts(const Holdings& outcome) const;
  double evaluate(const Holdings& outcome, std::size_t goods_count) const;
};

AgentDensity make_density(const UtilitySpec& spec, const EncounterContext& context);

/// Implied price of moving from `current` to `outcome` (money per unit good),
/// or nullopt when the goods step is below `min_step`.
std::optional<double> implied_price(const Holdings& current, const Holdings& outcome,
                                    double min_step = 1e-12);

/// Joint gate for a pair whose outcomes conserve the pool. When only one side
/// is price sensitive its whole band [mu1, mu2] applies in both directions.
bool pair_accepts(const AgentDensity& di, const AgentDensity& dj, const Holdings& outcome_i,
                  const Holdings& outcome_j, double min_step = 1e-12);

/// Utility of `outcome` for an agent with `spec` in `context`. Returns nullopt
/// at a domain boundary (non-finite value, e.g. 0 raised to a negative power);
/// callers treat that as zero probability.
std::optional<double> utility(const UtilitySpec& spec, const Holdings& outcome,
                              const EncounterContext& context = {});

}  // namespace econcal
