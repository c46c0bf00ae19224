#include "econcal/utility.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "econcal/errors.hpp"

namespace econcal {
namespace {

inline double power(double x, double e) {
  if (e == 0.0) return 1.0;
  if (e == 1.0) return x;
  if (e == 2.0) return x * x;
  return std::pow(x, e);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

AxisFactor power_factor(double exponent) {
  AxisFactor f;
  f.kind = FactorKind::Power;
  f.exponent = exponent;
  return f;
}

AxisFactor shifted_factor(double exponent, double shift) {
  AxisFactor f;
  f.kind = FactorKind::ShiftedPower;
  f.exponent = exponent;
  f.shift = shift;
  return f;
}

void check_positive(std::vector<std::string>& out, const char* what, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream s;
    s << what << " must be a positive finite number (got " << v << ")";
    out.push_back(s.str());
  }
}

}  // namespace

double AxisFactor::operator()(double x) const {
  switch (kind) {
    case FactorKind::Power:
      return power(x, exponent);
    case FactorKind::ShiftedPower:
      return power(x + shift, exponent);
    case FactorKind::Satiable:
      if (x <= c) return 0.0;
      return std::exp(-x * x / (k * (x - c)));
    case FactorKind::ComparisonExp:
      return power(x, exponent) * std::exp(x - reference);
    case FactorKind::ComparisonSigmoid: {
      const double d = x - reference;
      return power(x, exponent) * (b + (a - b) / (1.0 + std::exp(-2.0 * d)));
    }
  }
  return 0.0;
}

double AgentDensity::goods_weight(double g1, double g2) const {
  switch (joint) {
    case JointGoods::Substitutes:
      return power(g1 + g2, joint_exponent);
    case JointGoods::Complements:
      return power(std::min(g1, g2), joint_exponent);
    case JointGoods::None:
      break;
  }
  return goods[0](g1) * goods[1](g2);
}

double AgentDensity::base(const Holdings& outcome, std::size_t goods_count) const {
  double w = money(outcome.money);
  if (goods_count >= 2 || joint != JointGoods::None) {
    w *= goods_weight(outcome.goods[0], outcome.goods[1]);
  } else if (goods_count == 1) {
    w *= goods[0](outcome.goods[0]);
  }
  return w;
}

bool AgentDensity::accepts(const Holdings& outcome) const {
  if (!gate.active) return true;
  const auto price = implied_price(gate.current, outcome);
  if (!price) return false;
  const bool selling = outcome.goods[0] < gate.current.goods[0];
  return selling ? *price >= gate.mu_sell : *price <= gate.mu_buy;
}

double AgentDensity::evaluate(const Holdings& outcome, std::size_t goods_count) const {
  if (!accepts(outcome)) return 0.0;
  return base(outcome, goods_count);
}

std::optional<double> implied_price(const Holdings& current, const Holdings& outcome,
                                    double min_step) {
  const double dg = current.goods[0] - outcome.goods[0];
  if (std::abs(dg) < min_step) return std::nullopt;
  return (outcome.money - current.money) / dg;
}

bool pair_accepts(const AgentDensity& di, const AgentDensity& dj, const Holdings& outcome_i,
                  const Holdings& outcome_j, double min_step) {
  if (!di.gate.active && !dj.gate.active) return true;
  if (di.gate.active && dj.gate.active) {
    if (!implied_price(di.gate.current, outcome_i, min_step)) return false;
    return di.accepts(outcome_i) && dj.accepts(outcome_j);
  }
  const AgentDensity& d = di.gate.active ? di : dj;
  const Holdings& out = di.gate.active ? outcome_i : outcome_j;
  const auto price = implied_price(d.gate.current, out, min_step);
  return price && *price >= d.gate.mu_sell && *price <= d.gate.mu_buy;
}

AgentDensity make_density(const UtilitySpec& spec, const EncounterContext& context) {
  AgentDensity d;
  std::visit(
      Overloaded{
          [&](const CobbDouglas& s) {
            d.money = power_factor(s.eta - 1.0);
            for (std::size_t j = 0; j < s.alphas.size() && j < kMaxGoods; ++j)
              d.goods[j] = power_factor(s.alphas[j] - 1.0);
          },
          [&](const Substitutes& s) {
            d.money = power_factor(s.eta - 1.0);
            d.joint = JointGoods::Substitutes;
            d.joint_exponent = s.alpha - 1.0;
          },
          [&](const Complements& s) {
            d.money = power_factor(s.eta - 1.0);
            d.joint = JointGoods::Complements;
            d.joint_exponent = s.alpha - 1.0;
          },
          [&](const Satiable& s) {
            d.money = power_factor(s.eta - 1.0);
            d.goods[0].kind = FactorKind::Satiable;
            d.goods[0].c = s.c;
            d.goods[0].k = s.k;
            d.goods[1] = power_factor(s.alpha - 1.0);
          },
          [&](const PriceBandSeparable& s) {
            d.money = power_factor(s.eta - 1.0);
            d.goods[0] = power_factor(s.alpha - 1.0);
            d.gate = PriceGate{true, s.mu1, s.mu2, context.current};
          },
          [&](const PriceBandAggregate& s) {
            d.money = shifted_factor(s.eta - 1.0, context.current.money);
            d.goods[0] = shifted_factor(s.alpha - 1.0, context.current.goods[0]);
            d.gate = PriceGate{true, s.mu1, s.mu2, context.current};
          },
          [&](const Interdependent& s) {
            d.money = power_factor(s.eta - 1.0);
            AxisFactor& g = d.goods[0];
            g.exponent = s.alpha - 1.0;
            g.reference = context.comparison_mean;
            if (const auto* sig = std::get_if<SigmoidComparison>(&s.comparison)) {
              g.kind = FactorKind::ComparisonSigmoid;
              g.a = sig->a;
              g.b = sig->b;
            } else {
              g.kind = FactorKind::ComparisonExp;
            }
          },
      },
      spec);
  return d;
}

std::optional<double> utility(const UtilitySpec& spec, const Holdings& outcome,
                              const EncounterContext& context) {
  if (!non_negative(outcome)) throw UsageError("utility: outcome holdings must be non-negative");
  const AgentDensity d = make_density(spec, context);
  const double v = d.evaluate(outcome, goods_count_of(spec));
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

std::size_t goods_count_of(const UtilitySpec& spec) {
  return std::visit(Overloaded{
                        [](const CobbDouglas& s) { return s.alphas.size(); },
                        [](const Substitutes&) { return std::size_t{2}; },
                        [](const Complements&) { return std::size_t{2}; },
                        [](const Satiable&) { return std::size_t{2}; },
                        [](const PriceBandSeparable&) { return std::size_t{1}; },
                        [](const PriceBandAggregate&) { return std::size_t{1}; },
                        [](const Interdependent&) { return std::size_t{1}; },
                    },
                    spec);
}

std::string family_name(const UtilitySpec& spec) {
  return std::visit(Overloaded{
                        [](const CobbDouglas&) { return std::string("cobb_douglas"); },
                        [](const Substitutes&) { return std::string("substitutes"); },
                        [](const Complements&) { return std::string("complements"); },
                        [](const Satiable&) { return std::string("satiable"); },
                        [](const PriceBandSeparable&) { return std::string("price_band_separable"); },
                        [](const PriceBandAggregate&) { return std::string("price_band_aggregate"); },
                        [](const Interdependent&) { return std::string("interdependent"); },
                    },
                    spec);
}

double money_exponent(const UtilitySpec& spec) {
  return std::visit([](const auto& s) { return s.eta; }, spec);
}

std::vector<std::string> violations(const UtilitySpec& spec) {
  std::vector<std::string> out;
  std::visit(Overloaded{
                 [&](const CobbDouglas& s) {
                   check_positive(out, "cobb_douglas.eta", s.eta);
                   if (s.alphas.empty() || s.alphas.size() > kMaxGoods)
                     out.push_back("cobb_douglas.alphas must have 1 or 2 entries");
                   for (double a : s.alphas) check_positive(out, "cobb_douglas.alphas[]", a);
                 },
                 [&](const Substitutes& s) {
                   check_positive(out, "substitutes.eta", s.eta);
                   check_positive(out, "substitutes.alpha", s.alpha);
                 },
                 [&](const Complements& s) {
                   check_positive(out, "complements.eta", s.eta);
                   check_positive(out, "complements.alpha", s.alpha);
                 },
                 [&](const Satiable& s) {
                   check_positive(out, "satiable.eta", s.eta);
                   check_positive(out, "satiable.alpha", s.alpha);
                   check_positive(out, "satiable.c", s.c);
                   check_positive(out, "satiable.k", s.k);
                 },
                 [&](const PriceBandSeparable& s) {
                   check_positive(out, "price_band.eta", s.eta);
                   check_positive(out, "price_band.alpha", s.alpha);
                   check_positive(out, "price_band.mu1", s.mu1);
                   if (!(s.mu1 < s.mu2)) out.push_back("price_band requires mu1 < mu2");
                 },
                 [&](const PriceBandAggregate& s) {
                   check_positive(out, "price_band_aggregate.eta", s.eta);
                   check_positive(out, "price_band_aggregate.alpha", s.alpha);
                   check_positive(out, "price_band_aggregate.mu1", s.mu1);
                   if (!(s.mu1 < s.mu2)) out.push_back("price_band_aggregate requires mu1 < mu2");
                 },
                 [&](const Interdependent& s) {
                   check_positive(out, "interdependent.eta", s.eta);
                   check_positive(out, "interdependent.alpha", s.alpha);
                   if (const auto* sig = std::get_if<SigmoidComparison>(&s.comparison)) {
                     check_positive(out, "interdependent.sigmoid.b", sig->b);
                     if (!(sig->a > sig->b)) out.push_back("interdependent sigmoid requires a > b");
                   }
                 },
             },
             spec);
  return out;
}

void validate(const UtilitySpec& spec) {
  const auto v = violations(spec);
  if (v.empty()) return;
  std::string msg = "invalid utility spec:";
  for (const auto& s : v) msg += "\n  - " + s;
  throw ConfigError(msg);
}

}  // namespace econcal
