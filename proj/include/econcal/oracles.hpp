#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "econcal/calorimetry.hpp"
#include "econcal/errors.hpp"

namespace econcal {

// Reference entropies and free energies. Amounts are macro totals; every
// function throws DomainError on non-positive arguments.

/// N (eta log(M/N) + sum_j alpha_j log(G_j/N))
double cd_entropy(std::size_t n, double eta, const std::vector<double>& alphas, double money,
                  const std::vector<double>& goods);

struct AgentExponents {
  double eta = 1.0;
  std::vector<double> alphas;
};

/// (sum eta^i) log m_bar + sum_j (sum alpha_j^i) log g_bar_j, means over agents.
double hetero_cd_entropy(const std::vector<AgentExponents>& agents, double money,
                         const std::vector<double>& goods);

/// N (eta log m_bar + g_bar + alpha log g_bar)
double interdependent_exp_entropy(std::size_t n, double eta, double alpha, double money,
                                  double goods);

/// One-good CD entropy, the stationary law of identical-threshold price-band
/// agents whatever the band.
double price_band_cd_equivalence_oracle(std::size_t n, double eta, double alpha, double money,
                                        double goods);

// Free energies F(beta, nu), with S = min over (beta, nu) of beta M + nu.G - F.

/// N (eta log beta + sum_j alpha_j log nu_j)
struct CdFree {
  double eta = 1.0;
  std::vector<double> alphas;
};

/// N (eta log beta + log((nu1 - nu2) / (nu2^-alpha - nu1^-alpha)))
struct SubstitutesFree {
  double eta = 1.0;
  double alpha = 1.0;
};

/// N (eta log beta + (alpha - 1) log(nu1 + nu2) + log nu1 + log nu2)
struct ComplementsFree {
  double eta = 1.0;
  double alpha = 1.0;
};

/// N (eta log beta + alpha log(nu - 1)), one good, nu > 1.
struct ExpWeightedFree {
  double eta = 1.0;
  double alpha = 1.0;
};

using FreeEnergyFamily = std::variant<CdFree, SubstitutesFree, ComplementsFree, ExpWeightedFree>;

struct FreeEnergyComponent {
  std::size_t count = 0;
  FreeEnergyFamily family;
};

/// Sum of independent sub-populations; a single family is a one-element list.
struct FreeEnergySpec {
  std::vector<FreeEnergyComponent> components;

  std::size_t goods_count() const;
  std::size_t agent_count() const;
  /// Throws ConfigError on empty lists, zero counts, non-positive exponents
  /// or mixed goods counts.
  void validate() const;
};

double free_energy(const FreeEnergySpec& spec, double beta, const std::vector<double>& nu);

/// (dF/dbeta, dF/dnu_1, ...)
std::vector<double> free_energy_gradient(const FreeEnergySpec& spec, double beta,
                                         const std::vector<double>& nu);

/// log((nu1 - nu2) / (nu2^-alpha - nu1^-alpha)), continuous across nu1 = nu2.
double substitutes_log_ratio(double alpha, double nu1, double nu2);

struct LegendreResult {
  double entropy = 0.0;
  double beta = 0.0;
  std::vector<double> nu;
  int iterations = 0;
  bool used_fallback = false;
};

class LegendreError : public NumericalError {
 public:
  LegendreError(const std::string& what, std::vector<double> last_iterate)
      : NumericalError(what), last_iterate(std::move(last_iterate)) {}
  std::vector<double> last_iterate;
};

/// Damped Newton on the stationarity conditions with a Nelder-Mead fallback;
/// converged when every gradient component is below 1e-8 of its amount.
LegendreResult legendre_solve(const FreeEnergySpec& spec, double money,
                              const std::vector<double>& goods);
double legendre_entropy(const FreeEnergySpec& spec, double money, const std::vector<double>& goods);

/// -F at each node's measured (beta, nu).
std::vector<double> free_energy_comparison_surface(const FreeEnergySpec& spec,
                                                   const std::vector<MeterReading>& readings);

}  // namespace econcal
