#include "causalfm/frontdoor.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "causalfm/error.hpp"
#include "causalfm/rng.hpp"

namespace causalfm {

namespace {

struct Stratum {
  double count[2] = {0.0, 0.0};
  std::map<double, double> m_count[2];
  std::map<double, double> y_sum[2];
};

std::string describe(std::span<const double> x) {
  std::ostringstream out;
  out << "x=(";
  for (std::size_t j = 0; j < x.size(); ++j) out << (j ? "," : "") << x[j];
  out << ')';
  return out.str();
}

// Row weights allow the bootstrap to reuse the same tabulation.
std::vector<double> plugin(const Dataset& train, const QuerySet& q, std::span<const double> weight) {
  if (train.d_aux() != 1) throw InputError("front-door plug-in needs exactly one mediator column");
  if (q.d_x != train.d_x()) throw InputError("stratum dimension does not match the covariates");
  std::map<std::vector<double>, Stratum> strata;
  std::map<double, int> levels;
  for (std::size_t i = 0; i < train.n(); ++i) {
    const double a = train.a(i);
    if (a != 0.0 && a != 1.0) throw InputError("front-door plug-in needs a binary treatment");
    const double m = train.aux(i)[0];
    levels[m] = 1;
    if (weight[i] == 0.0) continue;
    const auto xi = train.x(i);
    Stratum& s = strata[std::vector<double>(xi.begin(), xi.end())];
    const int arm = static_cast<int>(a);
    s.count[arm] += weight[i];
    s.m_count[arm][m] += weight[i];
    s.y_sum[arm][m] += weight[i] * train.y(i);
  }
  if (levels.size() > kMaxMediatorLevels) {
    throw InputError("mediator has " + std::to_string(levels.size()) + " levels; at most " +
                     std::to_string(kMaxMediatorLevels) + " supported");
  }
  std::vector<double> cate(q.m());
  for (std::size_t k = 0; k < q.m(); ++k) {
    const std::span<const double> xq(q.x.data() + k * q.d_x, q.d_x);
    const auto it = strata.find(std::vector<double>(xq.begin(), xq.end()));
    if (it == strata.end()) throw SparseStratumError(describe(xq), "empty stratum " + describe(xq));
    const Stratum& s = it->second;
    for (int a : {0, 1}) {
      if (s.count[a] < static_cast<double>(kMinStratumCount)) {
        const std::string cell = describe(xq) + ",a=" + std::to_string(a);
        throw SparseStratumError(cell, "stratum " + cell + " has fewer than " +
                                           std::to_string(kMinStratumCount) + " rows");
      }
    }
    const double n_x = s.count[0] + s.count[1];
    double tau = 0.0;
    for (const auto& [m, unused] : levels) {
      auto freq = [&](int a) {
        const auto f = s.m_count[a].find(m);
        return f == s.m_count[a].end() ? 0.0 : f->second / s.count[a];
      };
      const double dp = freq(1) - freq(0);
      if (freq(0) == 0.0 && freq(1) == 0.0) continue;
      double inner = 0.0;
      for (int a : {0, 1}) {
        const auto c = s.m_count[a].find(m);
        if (c == s.m_count[a].end() || c->second == 0.0) {
          std::ostringstream cell;
          cell << describe(xq) << ",a=" << a << ",m=" << m;
          throw SparseStratumError(cell.str(), "empty stratum " + cell.str());
        }
        inner += (s.count[a] / n_x) * (s.y_sum[a].at(m) / c->second);
      }
      tau += dp * inner;
    }
    cate[k] = tau;
  }
  return cate;
}

}  // namespace

std::vector<double> frontdoor_plugin(const Dataset& train, const QuerySet& x_strata) {
  const std::vector<double> ones(train.n(), 1.0);
  return plugin(train, x_strata, ones);
}

FrontdoorEstimate frontdoor_plugin_se(const Dataset& train, const QuerySet& x_strata, std::size_t n_boot,
                                      std::uint64_t seed) {
  if (n_boot < 2) throw PreconditionError("bootstrap needs at least two replicates");
  FrontdoorEstimate est;
  est.cate = frontdoor_plugin(train, x_strata);
  const std::size_t n = train.n();
  std::vector<double> sum(est.cate.size(), 0.0), sq(est.cate.size(), 0.0);
  std::vector<double> weight(n);
  for (std::size_t b = 0; b < n_boot; ++b) {
    Rng rng(seed, b);
    std::fill(weight.begin(), weight.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      weight[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1))] += 1.0;
    }
    const auto rep = plugin(train, x_strata, weight);
    for (std::size_t k = 0; k < rep.size(); ++k) {
      sum[k] += rep[k];
      sq[k] += rep[k] * rep[k];
    }
  }
  est.se.resize(est.cate.size());
  const double b = static_cast<double>(n_boot);
  for (std::size_t k = 0; k < est.se.size(); ++k) {
    const double var = (sq[k] - sum[k] * sum[k] / b) / (b - 1.0);
    est.se[k] = std::sqrt(std::max(var, 0.0));
  }
  return est;
}

}  // namespace causalfm
