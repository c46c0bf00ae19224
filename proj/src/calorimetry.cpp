#include "econcal/calorimetry.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "econcal/errors.hpp"

namespace econcal {
namespace {

const std::vector<double>& axis(const MacroGrid& g, std::size_t d) {
  return d == 0 ? g.money : d == 1 ? g.goods1 : g.goods2;
}

double value_of(const MeterReading& r, std::size_t c) { return c == 0 ? r.beta : r.nu.at(c - 1); }
double se_of(const MeterReading& r, std::size_t c) { return c == 0 ? r.se_beta : r.se_nu.at(c - 1); }

std::string describe_node(const MacroGrid& grid, std::size_t k) {
  const Totals t = grid.totals_at(k);
  std::ostringstream s;
  s << "node " << k << " (M=" << t.money << ", G1=" << t.goods[0];
  if (grid.goods_count() == 2) s << ", G2=" << t.goods[1];
  s << ")";
  return s.str();
}

struct Regression {
  std::vector<double> slopes;
  std::vector<double> slope_se;
};

// Weighted least squares of y on [1, x_1..x_p]; covariance inflated by the
// reduced chi-square when the scatter exceeds the stated errors.
Regression weighted_regression(const std::vector<std::vector<double>>& xs,
                               const std::vector<double>& y, const std::vector<double>& sigma) {
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto p = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd X(n, p + 1);
  Eigen::VectorXd Y(n), W(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Eigen::Index c = 0; c < p; ++c) X(i, c + 1) = xs[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
    Y(i) = y[static_cast<std::size_t>(i)];
    W(i) = 1.0 / (sigma[static_cast<std::size_t>(i)] * sigma[static_cast<std::size_t>(i)]);
  }
  const Eigen::MatrixXd A = X.transpose() * W.asDiagonal() * X;
  const Eigen::VectorXd b = X.transpose() * W.asDiagonal() * Y;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  const Eigen::VectorXd coef = ldlt.solve(b);
  Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(p + 1, p + 1));
  const Eigen::VectorXd resid = Y - X * coef;
  const double chi2 = resid.dot(W.asDiagonal() * resid);
  if (n > p + 1) cov *= std::max(1.0, chi2 / static_cast<double>(n - p - 1));
  Regression out;
  for (Eigen::Index c = 0; c < p; ++c) {
    out.slopes.push_back(coef(c + 1));
    out.slope_se.push_back(std::sqrt(std::max(0.0, cov(c + 1, c + 1))));
  }
  return out;
}

}  // namespace

std::array<std::size_t, 3> MacroGrid::shape() const {
  return {money.size(), goods1.size(), goods2.empty() ? std::size_t{1} : goods2.size()};
}

std::size_t MacroGrid::node_count() const {
  const auto s = shape();
  return s[0] * s[1] * s[2];
}

std::size_t MacroGrid::flat_index(const std::array<std::size_t, 3>& idx) const {
  const auto s = shape();
  return (idx[0] * s[1] + idx[1]) * s[2] + idx[2];
}

std::array<std::size_t, 3> MacroGrid::node_index(std::size_t flat) const {
  const auto s = shape();
  return {flat / (s[1] * s[2]), (flat / s[2]) % s[1], flat % s[2]};
}

Totals MacroGrid::totals_at(std::size_t flat) const {
  const auto idx = node_index(flat);
  Totals t;
  t.money = money[idx[0]];
  t.goods[0] = goods1[idx[1]];
  if (!goods2.empty()) t.goods[1] = goods2[idx[2]];
  return t;
}

void MacroGrid::validate() const {
  std::vector<std::string> v;
  const char* names[] = {"grid.money", "grid.goods1", "grid.goods2"};
  for (std::size_t d = 0; d < 3; ++d) {
    const auto& a = axis(*this, d);
    if (a.empty()) {
      if (d < 2) v.push_back(std::string(names[d]) + " must not be empty");
      continue;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!(a[i] > 0.0) || !std::isfinite(a[i])) {
        v.push_back(std::string(names[d]) + " values must be positive and finite");
        break;
      }
      if (i > 0 && !(a[i] > a[i - 1])) {
        v.push_back(std::string(names[d]) + " values must be strictly increasing");
        break;
      }
    }
  }
  const auto s = shape();
  for (std::size_t d = 0; d < 3; ++d)
    if (reference_node[d] >= s[d]) v.push_back("grid.reference_node lies outside the grid");
  if (!std::isfinite(reference_entropy)) v.push_back("grid.reference_entropy must be finite");
  if (v.empty()) return;
  std::string msg = "invalid grid:";
  for (const auto& e : v) msg += "\n  - " + e;
  throw ConfigError(msg);
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {lo};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  out.back() = hi;
  return out;
}

std::size_t ReadingField::flagged_count() const {
  return static_cast<std::size_t>(
      std::count_if(readings.begin(), readings.end(), [](const MeterReading& r) { return r.flagged; }));
}

void parallel_for(std::size_t n, std::size_t parallelism,
                  const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n || failed.load()) return;
      try {
        task(k);
      } catch (...) {
        errors[k] = std::current_exception();
        failed.store(true);
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

ReadingField grid_sweep(const EconomyFactory& factory, const MacroGrid& grid,
                        const MeterSpec& meter, const MeasurementProtocol& protocol,
                        std::uint64_t seed, std::size_t parallelism, const SamplerPolicy& policy) {
  grid.validate();
  meter.validate();
  protocol.validate();
  ReadingField field;
  field.grid = grid;
  const std::size_t n = grid.node_count();
  field.readings.resize(n);
  std::vector<SamplerStats> stats(n);
  parallel_for(n, parallelism, [&](std::size_t k) {
    try {
      Rng rng = derive_stream(seed, k);
      CoupledSystem coupled = attach_meter(factory(grid.totals_at(k)), meter);
      MeterReading r = measure_values(coupled, protocol, rng, policy);
      r.macro_state = grid.totals_at(k);
      field.readings[k] = std::move(r);
      stats[k] = coupled.stats();
    } catch (const NumericalError& e) {
      throw NumericalError(describe_node(grid, k) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError(describe_node(grid, k) + ": " + e.what());
    }
  });
  for (const auto& s : stats) field.stats += s;
  return field;
}

double edge_increment(const MeterReading& a, const MeterReading& b, IncrementRule rule) {
  if (a.nu.size() != b.nu.size()) throw UsageError("edge_increment: readings trade different goods");
  const std::size_t cc = commodity_count(a.nu.size());
  std::size_t differing = 0;
  double inc = 0.0;
  for (std::size_t c = 0; c < cc; ++c) {
    const double step = b.macro_state[c] - a.macro_state[c];
    if (step == 0.0) continue;
    ++differing;
    const double value =
        rule == IncrementRule::Trapezoid ? 0.5 * (value_of(a, c) + value_of(b, c)) : value_of(a, c);
    inc += value * step;
  }
  if (differing > 1) throw UsageError("edge_increment: readings are not grid-adjacent");
  return inc;
}

std::vector<std::pair<std::size_t, std::size_t>> grid_edges(const MacroGrid& grid) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const auto s = grid.shape();
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    const auto idx = grid.node_index(k);
    for (std::size_t d = 0; d < 3; ++d) {
      if (idx[d] + 1 >= s[d]) continue;
      auto next = idx;
      ++next[d];
      out.emplace_back(k, grid.flat_index(next));
    }
  }
  return out;
}

PotentialFit fit_potential(std::size_t n_nodes, const std::vector<GraphEdge>& edges,
                           std::size_t reference, double reference_value) {
  if (n_nodes < 2) throw UsageError("fit_potential: need at least two nodes");
  if (reference >= n_nodes) throw UsageError("fit_potential: reference node out of range");
  std::vector<std::vector<std::size_t>> adj(n_nodes);
  for (const auto& e : edges) {
    if (e.a >= n_nodes || e.b >= n_nodes || e.a == e.b) throw UsageError("fit_potential: bad edge");
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  if (!connected(n_nodes, [&](std::size_t v) -> const std::vector<std::size_t>& { return adj[v]; }))
    throw NumericalError("fit_potential: singular system, the node graph is disconnected");

  // Unknowns are all nodes except the reference, which is moved to the rhs.
  auto unknown = [&](std::size_t v) { return static_cast<Eigen::Index>(v < reference ? v : v - 1); };
  const auto m = static_cast<Eigen::Index>(n_nodes - 1);
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (const auto& e : edges) {
    // Residual S_b - S_a - inc.
    const bool fa = e.a != reference, fb = e.b != reference;
    const double known = (fa ? 0.0 : -reference_value) + (fb ? 0.0 : reference_value);
    const double target = e.increment - known;
    if (fa) {
      trips.emplace_back(unknown(e.a), unknown(e.a), 1.0);
      rhs(unknown(e.a)) -= target;
    }
    if (fb) {
      trips.emplace_back(unknown(e.b), unknown(e.b), 1.0);
      rhs(unknown(e.b)) += target;
    }
    if (fa && fb) {
      trips.emplace_back(unknown(e.a), unknown(e.b), -1.0);
      trips.emplace_back(unknown(e.b), unknown(e.a), -1.0);
    }
  }
  Eigen::SparseMatrix<double> L(m, m);
  L.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(L);
  if (solver.info() != Eigen::Success) throw NumericalError("fit_potential: factorization failed");
  const Eigen::VectorXd x = solver.solve(rhs);
  const double scale = std::max(rhs.norm(), 1e-300);
  if (solver.info() != Eigen::Success || !((L * x - rhs).norm() <= 1e-10 * scale))
    throw NumericalError("fit_potential: solve missed the 1e-10 relative residual");

  PotentialFit fit;
  fit.potential.resize(n_nodes);
  for (std::size_t v = 0; v < n_nodes; ++v)
    fit.potential[v] = v == reference ? reference_value : x(unknown(v));
  for (const auto& e : edges) {
    const double r = fit.potential[e.b] - fit.potential[e.a] - e.increment;
    fit.rss += r * r;
    fit.tss += e.increment * e.increment;
  }
  return fit;
}

EntropyField fit_entropy(const ReadingField& field, IncrementRule rule) {
  const MacroGrid& grid = field.grid;
  if (field.readings.size() != grid.node_count())
    throw UsageError("fit_entropy: every grid node needs a reading");
  std::vector<GraphEdge> edges;
  for (const auto& [a, b] : grid_edges(grid))
    edges.push_back({a, b, edge_increment(field.readings[a], field.readings[b], rule)});
  const PotentialFit fit =
      fit_potential(grid.node_count(), edges, grid.reference_flat(), grid.reference_entropy);
  EntropyField out;
  out.grid = grid;
  out.readings = field.readings;
  out.fitted_S = fit.potential;
  out.rss = fit.rss;
  out.tss = fit.tss;
  out.goodness_of_fit = fit.tss > 0.0 ? fit.rss / fit.tss : 0.0;
  out.flagged = field.flagged_count();
  return out;
}

double goodness_of_agreement(const std::vector<double>& fitted, const std::vector<double>& oracle) {
  if (fitted.size() != oracle.size() || fitted.empty())
    throw UsageError("goodness_of_agreement: surfaces must cover the same nodes");
  const double n = static_cast<double>(fitted.size());
  const double mf = std::accumulate(fitted.begin(), fitted.end(), 0.0) / n;
  const double mo = std::accumulate(oracle.begin(), oracle.end(), 0.0) / n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    const double d = (fitted[i] - mf) - (oracle[i] - mo);
    num += d * d;
    den += (oracle[i] - mo) * (oracle[i] - mo);
  }
  if (!(den > 0.0)) throw DomainError("goodness_of_agreement: oracle is constant over the grid");
  return num / den;
}

ConcavityReport concavity_check(const MacroGrid& grid, const std::vector<double>& S,
                                double tolerance) {
  if (S.size() != grid.node_count()) throw UsageError("concavity_check: one value per node");
  const auto s = grid.shape();
  std::vector<std::size_t> tested;
  for (std::size_t d = 0; d < 3; ++d)
    if (s[d] >= 3) tested.push_back(d);
  ConcavityReport rep;
  rep.tolerance = tolerance;
  rep.worst_eigenvalue = -std::numeric_limits<double>::infinity();
  if (tested.empty()) {
    rep.worst_eigenvalue = 0.0;
    return rep;
  }
  const auto at = [&](std::array<std::size_t, 3> idx) { return S[grid.flat_index(idx)]; };
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    const auto idx = grid.node_index(k);
    bool interior = true;
    for (std::size_t d : tested) interior = interior && idx[d] > 0 && idx[d] + 1 < s[d];
    if (!interior) continue;
    ++rep.interior_nodes;
    const auto D = static_cast<Eigen::Index>(tested.size());
    Eigen::MatrixXd H(D, D);
    for (Eigen::Index p = 0; p < D; ++p) {
      const std::size_t d = tested[static_cast<std::size_t>(p)];
      const auto& ax = axis(grid, d);
      auto lo = idx, hi = idx;
      --lo[d];
      ++hi[d];
      const double hm = ax[idx[d]] - ax[lo[d]], hp = ax[hi[d]] - ax[idx[d]];
      H(p, p) = 2.0 * ((at(hi) - at(idx)) / hp - (at(idx) - at(lo)) / hm) / (hp + hm);
      for (Eigen::Index q = p + 1; q < D; ++q) {
        const std::size_t e = tested[static_cast<std::size_t>(q)];
        const auto& bx = axis(grid, e);
        auto pp = idx, pm = idx, mp = idx, mm = idx;
        ++pp[d], ++pp[e];
        ++pm[d], --pm[e];
        --mp[d], ++mp[e];
        --mm[d], --mm[e];
        const double wd = ax[idx[d] + 1] - ax[idx[d] - 1];
        const double we = bx[idx[e] + 1] - bx[idx[e] - 1];
        H(p, q) = H(q, p) = (at(pp) - at(pm) - at(mp) + at(mm)) / (wd * we);
      }
    }
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H, Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .maxCoeff();
    if (top > rep.worst_eigenvalue) {
      rep.worst_eigenvalue = top;
      rep.worst_node = k;
    }
  }
  if (rep.interior_nodes == 0) rep.worst_eigenvalue = 0.0;
  rep.pass = rep.worst_eigenvalue <= tolerance;
  return rep;
}

double hessian_noise_scale(const EntropyField& field) {
  const MacroGrid& grid = field.grid;
  const auto s = grid.shape();
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    const auto idx = grid.node_index(k);
    double sum = 0.0;
    bool interior = true;
    for (std::size_t d = 0; d < 3; ++d) {
      if (s[d] < 3) continue;
      if (idx[d] == 0 || idx[d] + 1 == s[d]) {
        interior = false;
        break;
      }
      auto lo = idx, hi = idx;
      --lo[d];
      ++hi[d];
      const auto& ax = axis(grid, d);
      const double se_lo = se_of(field.readings[grid.flat_index(lo)], d);
      const double se_hi = se_of(field.readings[grid.flat_index(hi)], d);
      const double sigma = std::sqrt(se_lo * se_lo + se_hi * se_hi) / (ax[hi[d]] - ax[lo[d]]);
      sum += sigma * sigma;
    }
    if (interior) worst = std::max(worst, std::sqrt(sum));
  }
  return worst;
}

ConcavityReport concavity_check(const EntropyField& field) {
  return concavity_check(field.grid, field.fitted_S, 3.0 * hessian_noise_scale(field));
}

bool PureMoneyReport::goods_independent() const {
  for (std::size_t j = 0; j < goods_slopes.size(); ++j)
    if (std::abs(goods_slopes[j]) > 3.0 * goods_slope_se[j]) return false;
  return true;
}

PureMoneyReport pure_money_check(const ReadingField& goods_grid, const ReadingField& money_line) {
  PureMoneyReport rep;
  const auto& gr = goods_grid.readings;
  if (gr.empty() || money_line.readings.size() < 2)
    throw UsageError("pure_money_check: need readings on the goods grid and at least two on the money line");
  auto sigma_log = [](const MeterReading& r) { return std::max(r.se_beta, 1e-12 * r.beta) / r.beta; };

  double wsum = 0.0, mean = 0.0;
  for (const auto& r : gr) {
    const double w = 1.0 / std::pow(std::max(r.se_beta, 1e-12 * r.beta), 2);
    wsum += w;
    mean += w * r.beta;
  }
  mean /= wsum;
  for (const auto& r : gr) {
    rep.max_rel_beta_variation = std::max(rep.max_rel_beta_variation, std::abs(r.beta - mean) / mean);
    rep.max_beta_z =
        std::max(rep.max_beta_z, std::abs(r.beta - mean) / std::max(r.se_beta, 1e-12 * r.beta));
  }

  const std::size_t gc = gr.front().nu.size();
  std::vector<std::vector<double>> xs;
  std::vector<std::size_t> varying;
  for (std::size_t j = 0; j < gc; ++j) {
    std::vector<double> x;
    for (const auto& r : gr) x.push_back(std::log(r.macro_state.goods[j]));
    if (*std::max_element(x.begin(), x.end()) > *std::min_element(x.begin(), x.end())) {
      xs.push_back(std::move(x));
      varying.push_back(j);
    }
  }
  rep.goods_slopes.assign(gc, 0.0);
  rep.goods_slope_se.assign(gc, 0.0);
  if (!xs.empty() && gr.size() > xs.size() + 1) {
    std::vector<double> y, sig;
    for (const auto& r : gr) {
      y.push_back(std::log(r.beta));
      sig.push_back(sigma_log(r));
    }
    const Regression reg = weighted_regression(xs, y, sig);
    for (std::size_t c = 0; c < varying.size(); ++c) {
      rep.goods_slopes[varying[c]] = reg.slopes[c];
      rep.goods_slope_se[varying[c]] = reg.slope_se[c];
    }
  }

  std::vector<double> lm, y, sig;
  for (const auto& r : money_line.readings) {
    lm.push_back(std::log(r.macro_state.money));
    y.push_back(std::log(r.beta));
    sig.push_back(sigma_log(r));
  }
  const Regression reg = weighted_regression({lm}, y, sig);
  rep.money_value_exponent = reg.slopes[0];
  rep.money_value_exponent_se = reg.slope_se[0];
  return rep;
}

}  // namespace econcal
