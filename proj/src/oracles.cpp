#include "econcal/oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace econcal {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream s;
    s << what << " must be positive and finite (got " << v << ")";
    throw DomainError(s.str());
  }
}

// Relative switch radius for the removable singularity of the substitutes ratio.
constexpr double kSubstitutesSeriesRadius = 1e-6;

// d/du of log(expm1(u) / -expm1(-alpha u)).
double substitutes_q_prime(double alpha, double u) {
  if (std::abs(u) < 1e-3) {
    const double a2 = alpha * alpha;
    return 0.5 * (1.0 + alpha) + (1.0 - a2) * u / 12.0 + (a2 * a2 - 1.0) * u * u * u / 720.0;
  }
  return 1.0 + 1.0 / std::expm1(u) - alpha / std::expm1(alpha * u);
}

std::size_t family_goods(const FreeEnergyFamily& f) {
  return std::visit(Overloaded{
                        [](const CdFree& c) { return c.alphas.size(); },
                        [](const SubstitutesFree&) { return std::size_t{2}; },
                        [](const ComplementsFree&) { return std::size_t{2}; },
                        [](const ExpWeightedFree&) { return std::size_t{1}; },
                    },
                    f);
}

bool needs_nu_above_one(const FreeEnergySpec& spec) {
  return std::any_of(spec.components.begin(), spec.components.end(), [](const auto& c) {
    return std::holds_alternative<ExpWeightedFree>(c.family);
  });
}

void check_arguments(const FreeEnergySpec& spec, double beta, const std::vector<double>& nu) {
  require_positive(beta, "beta");
  if (nu.size() != spec.goods_count()) throw UsageError("free_energy: one nu per good");
  for (double v : nu) require_positive(v, "nu");
  if (needs_nu_above_one(spec) && !(nu[0] > 1.0)) throw DomainError("free_energy: nu must exceed 1");
}

double per_agent(const FreeEnergyFamily& f, double beta, const std::vector<double>& nu) {
  return std::visit(Overloaded{
                        [&](const CdFree& c) {
                          double v = c.eta * std::log(beta);
                          for (std::size_t j = 0; j < c.alphas.size(); ++j) v += c.alphas[j] * std::log(nu[j]);
                          return v;
                        },
                        [&](const SubstitutesFree& s) {
                          return s.eta * std::log(beta) + substitutes_log_ratio(s.alpha, nu[0], nu[1]);
                        },
                        [&](const ComplementsFree& c) {
                          return c.eta * std::log(beta) + (c.alpha - 1.0) * std::log(nu[0] + nu[1]) +
                                 std::log(nu[0]) + std::log(nu[1]);
                        },
                        [&](const ExpWeightedFree& e) {
                          return e.eta * std::log(beta) + e.alpha * std::log(nu[0] - 1.0);
                        },
                    },
                    f);
}

void per_agent_gradient(const FreeEnergyFamily& f, double beta, const std::vector<double>& nu,
                        double weight, std::vector<double>& g) {
  std::visit(Overloaded{
                 [&](const CdFree& c) {
                   g[0] += weight * c.eta / beta;
                   for (std::size_t j = 0; j < c.alphas.size(); ++j) g[j + 1] += weight * c.alphas[j] / nu[j];
                 },
                 [&](const SubstitutesFree& s) {
                   const double qp = substitutes_q_prime(s.alpha, std::log(nu[0] / nu[1]));
                   g[0] += weight * s.eta / beta;
                   g[1] += weight * qp / nu[0];
                   g[2] += weight * (1.0 + s.alpha - qp) / nu[1];
                 },
                 [&](const ComplementsFree& c) {
                   const double common = (c.alpha - 1.0) / (nu[0] + nu[1]);
                   g[0] += weight * c.eta / beta;
                   g[1] += weight * (common + 1.0 / nu[0]);
                   g[2] += weight * (common + 1.0 / nu[1]);
                 },
                 [&](const ExpWeightedFree& e) {
                   g[0] += weight * e.eta / beta;
                   g[1] += weight * e.alpha / (nu[0] - 1.0);
                 },
             },
             f);
}

// Objective beta M + nu.G - F and its gradient, x = (beta, nu...).
struct LegendreProblem {
  const FreeEnergySpec& spec;
  std::vector<double> amounts;
  bool shifted;

  bool in_domain(const std::vector<double>& x) const {
    for (double v : x)
      if (!(v > 0.0) || !std::isfinite(v)) return false;
    return !shifted || x[1] > 1.0;
  }
  double value(const std::vector<double>& x) const {
    double v = -free_energy(spec, x[0], {x.begin() + 1, x.end()});
    for (std::size_t k = 0; k < x.size(); ++k) v += x[k] * amounts[k];
    return v;
  }
  std::vector<double> gradient(const std::vector<double>& x) const {
    std::vector<double> g = free_energy_gradient(spec, x[0], {x.begin() + 1, x.end()});
    for (std::size_t k = 0; k < x.size(); ++k) g[k] = amounts[k] - g[k];
    return g;
  }
  double relative_gradient(const std::vector<double>& g) const {
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) worst = std::max(worst, std::abs(g[k]) / amounts[k]);
    return worst;
  }
  double lower(std::size_t k) const { return shifted && k == 1 ? 1.0 : 0.0; }
};

constexpr double kGradientTolerance = 1e-8;

// Returns true on convergence; x holds the last iterate either way.
bool newton(const LegendreProblem& p, std::vector<double>& x, int& iterations) {
  const auto n = static_cast<Eigen::Index>(x.size());
  for (int it = 0; it < 200; ++it) {
    iterations = it;
    const std::vector<double> g = p.gradient(x);
    const double rel = p.relative_gradient(g);
    if (rel < kGradientTolerance) return true;

    // Hessian of the objective by central differences of the analytic gradient.
    Eigen::MatrixXd H(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const double h = 1e-6 * (x[ku] - p.lower(ku));
      auto xp = x, xm = x;
      xp[ku] += h;
      xm[ku] -= h;
      const auto gp = p.gradient(xp), gm = p.gradient(xm);
      for (Eigen::Index r = 0; r < n; ++r)
        H(r, k) = (gp[static_cast<std::size_t>(r)] - gm[static_cast<std::size_t>(r)]) / (2.0 * h);
    }
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::VectorXd G(n);
    for (Eigen::Index k = 0; k < n; ++k) G(k) = g[static_cast<std::size_t>(k)];
    Eigen::VectorXd d = H.ldlt().solve(-G);
    if (!d.allFinite() || d.dot(G) >= 0.0) {
      for (Eigen::Index k = 0; k < n; ++k) d(k) = -G(k) / std::max(std::abs(H(k, k)), 1e-300);
    }

    const double f0 = p.value(x);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      std::vector<double> y = x;
      for (Eigen::Index k = 0; k < n; ++k) y[static_cast<std::size_t>(k)] += t * d(k);
      if (!p.in_domain(y)) continue;
      const double f1 = p.value(y);
      if (f1 <= f0 + 1e-4 * t * d.dot(G) || p.relative_gradient(p.gradient(y)) < rel) {
        x = std::move(y);
        moved = true;
        break;
      }
    }
    if (!moved) return false;
  }
  return p.relative_gradient(p.gradient(x)) < kGradientTolerance;
}

// Derivative-free descent in coordinates t with x = lower + exp(t).
std::vector<double> nelder_mead(const LegendreProblem& p, const std::vector<double>& start) {
  const std::size_t n = start.size();
  auto to_x = [&](const std::vector<double>& t) {
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = p.lower(k) + std::exp(t[k]);
    return x;
  };
  auto f = [&](const std::vector<double>& t) {
    const auto x = to_x(t);
    if (!p.in_domain(x)) return std::numeric_limits<double>::infinity();
    const double v = p.value(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  std::vector<std::vector<double>> simplex(n + 1);
  for (std::size_t k = 0; k < n; ++k) simplex[0].push_back(std::log(start[k] - p.lower(k)));
  for (std::size_t k = 0; k < n; ++k) {
    simplex[k + 1] = simplex[0];
    simplex[k + 1][k] += 0.1;
  }
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);
  for (int it = 0; it < 4000 * static_cast<int>(n); ++it) {
    std::vector<std::size_t> order(n + 1);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    if (std::abs(fv[worst] - fv[best]) <= 1e-15 * (std::abs(fv[best]) + 1e-300)) break;
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);
    auto blend = [&](double c) {
      std::vector<double> t(n);
      for (std::size_t k = 0; k < n; ++k) t[k] = centroid[k] + c * (simplex[worst][k] - centroid[k]);
      return t;
    };
    const auto r = blend(-1.0);
    const double fr = f(r);
    if (fr < fv[best]) {
      const auto e = blend(-2.0);
      const double fe = f(e);
      if (fe < fr) {
        simplex[worst] = e;
        fv[worst] = fe;
      } else {
        simplex[worst] = r;
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      simplex[worst] = r;
      fv[worst] = fr;
    } else {
      const auto c = blend(fr < fv[worst] ? -0.5 : 0.5);
      const double fc = f(c);
      if (fc < std::min(fr, fv[worst])) {
        simplex[worst] = c;
        fv[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t k = 0; k < n; ++k) simplex[i][k] = 0.5 * (simplex[i][k] + simplex[best][k]);
          fv[i] = f(simplex[i]);
        }
      }
    }
  }
  const auto best = std::min_element(fv.begin(), fv.end()) - fv.begin();
  return to_x(simplex[static_cast<std::size_t>(best)]);
}

}  // namespace

double cd_entropy(std::size_t n, double eta, const std::vector<double>& alphas, double money,
                  const std::vector<double>& goods) {
  if (n == 0) throw DomainError("cd_entropy: n must be positive");
  if (alphas.size() != goods.size()) throw UsageError("cd_entropy: one alpha per good");
  require_positive(money, "money");
  const double N = static_cast<double>(n);
  double s = eta * std::log(money / N);
  for (std::size_t j = 0; j < goods.size(); ++j) {
    require_positive(goods[j], "goods");
    s += alphas[j] * std::log(goods[j] / N);
  }
  return N * s;
}

double hetero_cd_entropy(const std::vector<AgentExponents>& agents, double money,
                         const std::vector<double>& goods) {
  if (agents.empty()) throw DomainError("hetero_cd_entropy: agent list is empty");
  if (goods.empty()) throw DomainError("hetero_cd_entropy: goods amounts are empty");
  require_positive(money, "money");
  for (double g : goods) require_positive(g, "goods");
  const double N = static_cast<double>(agents.size());
  double eta_sum = 0.0;
  std::vector<double> alpha_sum(goods.size(), 0.0);
  for (const auto& a : agents) {
    if (a.alphas.size() != goods.size()) throw UsageError("hetero_cd_entropy: one alpha per good");
    eta_sum += a.eta;
    for (std::size_t j = 0; j < goods.size(); ++j) alpha_sum[j] += a.alphas[j];
  }
  double s = eta_sum * std::log(money / N);
  for (std::size_t j = 0; j < goods.size(); ++j) s += alpha_sum[j] * std::log(goods[j] / N);
  return s;
}

double interdependent_exp_entropy(std::size_t n, double eta, double alpha, double money,
                                  double goods) {
  if (n == 0) throw DomainError("interdependent_exp_entropy: n must be positive");
  require_positive(money, "money");
  require_positive(goods, "goods");
  const double N = static_cast<double>(n);
  const double g = goods / N;
  return N * (eta * std::log(money / N) + g + alpha * std::log(g));
}

double price_band_cd_equivalence_oracle(std::size_t n, double eta, double alpha, double money,
                                        double goods) {
  return cd_entropy(n, eta, {alpha}, money, {goods});
}

double substitutes_log_ratio(double alpha, double nu1, double nu2) {
  require_positive(alpha, "alpha");
  require_positive(nu1, "nu1");
  require_positive(nu2, "nu2");
  const double u = std::log(nu1 / nu2);
  double q;
  if (std::abs(nu1 - nu2) < kSubstitutesSeriesRadius * nu2) {
    q = -std::log(alpha) + 0.5 * (1.0 + alpha) * u + (1.0 - alpha * alpha) * u * u / 24.0;
  } else {
    q = std::log(std::expm1(u) / -std::expm1(-alpha * u));
  }
  return (1.0 + alpha) * std::log(nu2) + q;
}

std::size_t FreeEnergySpec::goods_count() const {
  return components.empty() ? 0 : family_goods(components.front().family);
}

std::size_t FreeEnergySpec::agent_count() const {
  std::size_t n = 0;
  for (const auto& c : components) n += c.count;
  return n;
}

void FreeEnergySpec::validate() const {
  std::vector<std::string> v;
  if (components.empty()) v.push_back("free energy needs at least one component");
  for (const auto& c : components) {
    if (c.count == 0) v.push_back("free energy component counts must be positive");
    if (family_goods(c.family) != goods_count()) v.push_back("free energy components trade different goods");
    const bool ok = std::visit(Overloaded{
                                   [](const CdFree& f) {
                                     bool good = f.eta > 0.0 && !f.alphas.empty();
                                     for (double a : f.alphas) good = good && a > 0.0;
                                     return good;
                                   },
                                   [](const auto& f) { return f.eta > 0.0 && f.alpha > 0.0; },
                               },
                               c.family);
    if (!ok) v.push_back("free energy exponents must be positive");
  }
  if (v.empty()) return;
  std::string msg = "invalid free energy spec:";
  for (const auto& e : v) msg += "\n  - " + e;
  throw ConfigError(msg);
}

double free_energy(const FreeEnergySpec& spec, double beta, const std::vector<double>& nu) {
  check_arguments(spec, beta, nu);
  double F = 0.0;
  for (const auto& c : spec.components) F += static_cast<double>(c.count) * per_agent(c.family, beta, nu);
  return F;
}

std::vector<double> free_energy_gradient(const FreeEnergySpec& spec, double beta,
                                         const std::vector<double>& nu) {
  check_arguments(spec, beta, nu);
  std::vector<double> g(nu.size() + 1, 0.0);
  for (const auto& c : spec.components)
    per_agent_gradient(c.family, beta, nu, static_cast<double>(c.count), g);
  return g;
}

LegendreResult legendre_solve(const FreeEnergySpec& spec, double money,
                              const std::vector<double>& goods) {
  spec.validate();
  require_positive(money, "money");
  if (goods.size() != spec.goods_count()) throw UsageError("legendre_entropy: one amount per good");
  for (double g : goods) require_positive(g, "goods");

  LegendreProblem p{spec, {money}, needs_nu_above_one(spec)};
  p.amounts.insert(p.amounts.end(), goods.begin(), goods.end());

  // Starting point from the Cobb-Douglas stationarity conditions.
  double eta_sum = 0.0, alpha_sum = 0.0;
  for (const auto& c : spec.components) {
    const double n = static_cast<double>(c.count);
    std::visit(Overloaded{
                   [&](const CdFree& f) {
                     eta_sum += n * f.eta;
                     alpha_sum += n * std::accumulate(f.alphas.begin(), f.alphas.end(), 0.0) /
                                  static_cast<double>(f.alphas.size());
                   },
                   [&](const auto& f) {
                     eta_sum += n * f.eta;
                     alpha_sum += n * f.alpha;
                   },
               },
               c.family);
  }
  std::vector<double> x{eta_sum / money};
  for (double g : goods) x.push_back((p.shifted ? 1.0 : 0.0) + alpha_sum / g);

  LegendreResult out;
  if (!newton(p, x, out.iterations)) {
    out.used_fallback = true;
    x = nelder_mead(p, p.in_domain(x) ? x : std::vector<double>(x));
    int more = 0;
    const bool ok = newton(p, x, more);
    out.iterations += more;
    if (!ok) throw LegendreError("legendre_entropy: optimizer did not converge", x);
  }
  out.entropy = p.value(x);
  out.beta = x[0];
  out.nu.assign(x.begin() + 1, x.end());
  return out;
}

double legendre_entropy(const FreeEnergySpec& spec, double money, const std::vector<double>& goods) {
  return legendre_solve(spec, money, goods).entropy;
}

std::vector<double> free_energy_comparison_surface(const FreeEnergySpec& spec,
                                                   const std::vector<MeterReading>& readings) {
  std::vector<double> out;
  out.reserve(readings.size());
  for (const auto& r : readings) out.push_back(-free_energy(spec, r.beta, r.nu));
  return out;
}

}  // namespace econcal
