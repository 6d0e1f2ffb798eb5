#include "agentdiff/stats.hpp"

#include <map>
#include <numeric>
#include <thread>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "agentdiff/error.hpp"
#include "agentdiff/text.hpp"

namespace agentdiff::stats {

double mean(std::span<const double> x) {
  if (x.empty()) return kNaN;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) return kNaN;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double quantile(std::vector<double> x, double q) {
  if (x.empty()) return kNaN;
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

// Σ (t³ − t) over tie groups.
double tie_sum(std::span<const double> ranks) {
  std::map<double, double> counts;
  for (double r : ranks) counts[r] += 1.0;
  double s = 0.0;
  for (const auto& [r, t] : counts) s += t * t * t - t;
  return s;
}

double two_sided_from_tails(double lower, double upper) {
  return std::clamp(2.0 * std::min(lower, upper), 0.0, 1.0);
}

}  // namespace

double student_t_two_sided_p(double t, double df) {
  if (std::isnan(t) || !(df > 0)) return kNaN;
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

double normal_two_sided_p(double z) {
  if (std::isnan(z)) return kNaN;
  return std::clamp(std::erfc(std::abs(z) / std::sqrt(2.0)), 0.0, 1.0);
}

StatResult paired_t(std::span<const double> diffs) {
  StatResult r;
  r.method = "paired_t";
  r.n = diffs.size();
  if (diffs.size() < 2) {
    r.degenerate = true;
    if (!diffs.empty()) r.estimate = diffs[0];
    return r;
  }
  r.estimate = mean(diffs);
  r.df = static_cast<double>(diffs.size() - 1);
  const double sd = std::sqrt(variance(diffs));
  if (!(sd > 0.0)) {
    r.degenerate = true;
    return r;
  }
  const double se = sd / std::sqrt(static_cast<double>(diffs.size()));
  r.statistic = r.estimate / se;
  r.p_two_sided = student_t_two_sided_p(r.statistic, *r.df);
  r.ci95 = std::make_pair(r.estimate - boost::math::quantile(boost::math::students_t(*r.df), 0.975) * se,
                          r.estimate + boost::math::quantile(boost::math::students_t(*r.df), 0.975) * se);
  return r;
}

StatResult welch_t(std::span<const double> x, std::span<const double> y) {
  StatResult r;
  r.method = "welch_t";
  r.n1 = x.size();
  r.n2 = y.size();
  r.n = x.size() + y.size();
  if (x.size() < 2 || y.size() < 2) {
    r.degenerate = true;
    return r;
  }
  const double mx = mean(x);
  const double my = mean(y);
  r.estimate = mx - my;
  const double vx = variance(x) / static_cast<double>(x.size());
  const double vy = variance(y) / static_cast<double>(y.size());
  const double se2 = vx + vy;
  if (!(se2 > 0.0)) {
    r.degenerate = true;
    return r;
  }
  r.statistic = r.estimate / std::sqrt(se2);
  r.df = se2 * se2 /
         (vx * vx / static_cast<double>(x.size() - 1) + vy * vy / static_cast<double>(y.size() - 1));
  r.p_two_sided = student_t_two_sided_p(r.statistic, *r.df);
  return r;
}

StatResult wilcoxon_signed_rank(std::span<const double> diffs) {
  StatResult r;
  r.method = "wilcoxon_signed_rank";
  std::vector<double> nz;
  for (double d : diffs) {
    if (d != 0.0) nz.push_back(d);
  }
  r.n = nz.size();
  if (!diffs.empty()) r.estimate = median(std::vector<double>(diffs.begin(), diffs.end()));
  if (nz.empty()) {
    r.degenerate = true;
    return r;
  }
  std::vector<double> absd(nz.size());
  for (std::size_t i = 0; i < nz.size(); ++i) absd[i] = std::abs(nz[i]);
  const auto ranks = average_ranks(absd);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < nz.size(); ++i) {
    if (nz[i] > 0) w_plus += ranks[i];
  }
  r.statistic = w_plus;
  const std::size_t n = nz.size();
  if (n <= 25) {
    // Doubled ranks are integers even with midrank ties.
    std::vector<long> r2(n);
    long total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r2[i] = std::lround(2.0 * ranks[i]);
      total += r2[i];
    }
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    for (long v : r2) {
      for (long s = total; s >= v; --s) count[s] += count[s - v];
    }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    const long w2 = std::lround(2.0 * w_plus);
    double lower = 0.0;
    double upper = 0.0;
    for (long s = 0; s <= total; ++s) {
      if (s <= w2) lower += count[s];
      if (s >= w2) upper += count[s];
    }
    r.p_two_sided = two_sided_from_tails(lower / all, upper / all);
    r.exact = true;
    return r;
  }
  const double nn = static_cast<double>(n);
  const double mu = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_sum(ranks) / 48.0;
  if (!(var > 0.0)) {
    r.degenerate = true;
    return r;
  }
  r.p_two_sided = normal_two_sided_p((w_plus - mu) / std::sqrt(var));
  return r;
}

StatResult mann_whitney_u(std::span<const double> x, std::span<const double> y) {
  StatResult r;
  r.method = "mann_whitney_u";
  r.n1 = x.size();
  r.n2 = y.size();
  r.n = x.size() + y.size();
  if (x.empty() || y.empty()) {
    r.degenerate = true;
    return r;
  }
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = average_ranks(pooled);
  double r1 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) r1 += ranks[i];
  const double n1 = static_cast<double>(x.size());
  const double n2 = static_cast<double>(y.size());
  const double u = r1 - n1 * (n1 + 1.0) / 2.0;
  r.statistic = u;
  r.estimate = u / (n1 * n2);  // common-language effect size
  if (r.n <= 20) {
    const std::size_t n = pooled.size();
    std::vector<long> r2(n);
    long total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r2[i] = std::lround(2.0 * ranks[i]);
      total += r2[i];
    }
    // dp[k][s]: number of k-subsets with doubled rank sum s.
    std::vector<std::vector<double>> dp(x.size() + 1,
                                        std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
    dp[0][0] = 1.0;
    for (long v : r2) {
      for (std::size_t k = x.size(); k >= 1; --k) {
        for (long s = total; s >= v; --s) dp[k][s] += dp[k - 1][s - v];
      }
    }
    const long obs = std::lround(2.0 * r1);
    double lower = 0.0;
    double upper = 0.0;
    double all = 0.0;
    for (long s = 0; s <= total; ++s) {
      const double c = dp[x.size()][s];
      all += c;
      if (s <= obs) lower += c;
      if (s >= obs) upper += c;
    }
    r.p_two_sided = two_sided_from_tails(lower / all, upper / all);
    r.exact = true;
    return r;
  }
  const double nn = n1 + n2;
  const double mu = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((nn + 1.0) - tie_sum(ranks) / (nn * (nn - 1.0)));
  if (!(var > 0.0)) {
    r.degenerate = true;
    return r;
  }
  double diff = u - mu;
  diff = diff > 0 ? std::max(0.0, diff - 0.5) : std::min(0.0, diff + 0.5);
  r.p_two_sided = normal_two_sided_p(diff / std::sqrt(var));
  return r;
}

StatResult fisher_exact_2x2(const std::array<std::array<long, 2>, 2>& t) {
  StatResult r;
  r.method = "fisher_exact";
  for (const auto& row : t) {
    for (long v : row) {
      if (v < 0) throw Error("fisher_exact_2x2: negative count");
    }
  }
  const long a = t[0][0], b = t[0][1], c = t[1][0], d = t[1][1];
  const long r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d, n = r1 + r2;
  r.n = static_cast<std::size_t>(n);
  r.n1 = static_cast<std::size_t>(r1);
  r.n2 = static_cast<std::size_t>(r2);
  r.estimate = (b * c == 0) ? (a * d == 0 ? kNaN : std::numeric_limits<double>::infinity())
                            : static_cast<double>(a) * d / (static_cast<double>(b) * c);
  r.statistic = r.estimate;
  r.exact = true;
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) {
    r.degenerate = true;
    r.p_two_sided = 1.0;
    return r;
  }
  auto lchoose = [](long nn, long k) {
    return std::lgamma(nn + 1.0) - std::lgamma(k + 1.0) - std::lgamma(nn - k + 1.0);
  };
  const double denom = lchoose(n, c1);
  auto prob = [&](long x) { return std::exp(lchoose(r1, x) + lchoose(r2, c1 - x) - denom); };
  const double p_obs = prob(a);
  double p = 0.0;
  for (long x = std::max(0L, c1 - r2); x <= std::min(r1, c1); ++x) {
    const double px = prob(x);
    if (px <= p_obs * (1.0 + 1e-7)) p += px;
  }
  r.p_two_sided = std::clamp(p, 0.0, 1.0);
  return r;
}

StatResult pearson(std::span<const double> x, std::span<const double> y) {
  StatResult r;
  r.method = "pearson";
  r.n = std::min(x.size(), y.size());
  if (x.size() != y.size() || x.size() < 3) {
    r.degenerate = true;
    return r;
  }
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    r.degenerate = true;
    return r;
  }
  const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  r.estimate = rho;
  r.df = static_cast<double>(x.size() - 2);
  if (std::abs(rho) >= 1.0) {
    r.statistic = std::copysign(std::numeric_limits<double>::infinity(), rho);
    r.p_two_sided = 0.0;
    return r;
  }
  r.statistic = rho * std::sqrt(*r.df / (1.0 - rho * rho));
  r.p_two_sided = student_t_two_sided_p(r.statistic, *r.df);
  return r;
}

StatResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    StatResult r;
    r.method = "spearman";
    r.degenerate = true;
    return r;
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  StatResult r = pearson(rx, ry);
  r.method = "spearman";
  return r;
}

StatResult cohen_kappa(const std::vector<std::vector<double>>& table) {
  StatResult r;
  r.method = "cohen_kappa";
  const std::size_t k = table.size();
  for (const auto& row : table) {
    if (row.size() != k) throw Error("cohen_kappa: contingency table must be square");
  }
  double n = 0.0;
  std::vector<double> rows(k, 0.0), cols(k, 0.0);
  double agree = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      n += table[i][j];
      rows[i] += table[i][j];
      cols[j] += table[i][j];
    }
    agree += table[i][i];
  }
  r.n = static_cast<std::size_t>(std::llround(n));
  if (!(n > 0.0)) {
    r.degenerate = true;
    return r;
  }
  const double po = agree / n;
  double pe = 0.0;
  double cross = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double pi = rows[i] / n;
    const double pj = cols[i] / n;
    pe += pi * pj;
    cross += pi * pj * (pi + pj);
  }
  if (!(pe < 1.0)) {
    r.degenerate = true;
    return r;
  }
  r.estimate = (po - pe) / (1.0 - pe);
  const double var0 = (pe + pe * pe - cross) / (n * (1.0 - pe) * (1.0 - pe));
  if (var0 > 0.0) {
    r.statistic = r.estimate / std::sqrt(var0);
    r.p_two_sided = normal_two_sided_p(r.statistic);
  } else {
    r.degenerate = true;
  }
  return r;
}

StatResult cohen_kappa(std::span<const int> rater1, std::span<const int> rater2) {
  if (rater1.size() != rater2.size()) throw Error("cohen_kappa: label vectors differ in length");
  std::map<int, std::size_t> index;
  for (int v : rater1) index.emplace(v, 0);
  for (int v : rater2) index.emplace(v, 0);
  std::size_t next = 0;
  for (auto& [label, idx] : index) idx = next++;
  std::vector<std::vector<double>> table(index.size(), std::vector<double>(index.size(), 0.0));
  for (std::size_t i = 0; i < rater1.size(); ++i) {
    table[index[rater1[i]]][index[rater2[i]]] += 1.0;
  }
  return cohen_kappa(table);
}

std::vector<double> benjamini_hochberg(std::span<const double> p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
  std::vector<double> q(m);
  double running = 1.0;
  for (std::size_t r = m; r-- > 0;) {
    const std::size_t i = order[r];
    running = std::min(running, p[i] * (static_cast<double>(m) / static_cast<double>(r + 1)));
    q[i] = std::min(1.0, running);
  }
  return q;
}

// --- Regression -------------------------------------------------------------

namespace {

struct Prepared {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> labels;          // per canonical cluster
  std::vector<std::vector<Eigen::Index>> members;  // rows per cluster
};

Prepared prepare(const Design& d) {
  const auto n = d.X.rows();
  if (d.y.size() != n || static_cast<Eigen::Index>(d.clusters.size()) != n ||
      static_cast<Eigen::Index>(d.columns.size()) != d.X.cols()) {
    throw Error("regression design has inconsistent dimensions");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (d.clusters[a] != d.clusters[b]) return d.clusters[a] < d.clusters[b];
    if (d.y[a] != d.y[b]) return d.y[a] < d.y[b];
    for (Eigen::Index c = 0; c < d.X.cols(); ++c) {
      if (d.X(a, c) != d.X(b, c)) return d.X(a, c) < d.X(b, c);
    }
    return false;
  });
  Prepared p;
  p.X.resize(n, d.X.cols());
  p.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = order[static_cast<std::size_t>(i)];
    p.X.row(i) = d.X.row(src);
    p.y[i] = d.y[src];
    const auto& label = d.clusters[src];
    if (p.labels.empty() || p.labels.back() != label) {
      p.labels.push_back(label);
      p.members.emplace_back();
    }
    p.members.back().push_back(i);
  }
  return p;
}

void check_rank(const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
  Eigen::Index rank = 0;
  for (Eigen::Index c = 1; c <= X.cols(); ++c) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X.leftCols(c));
    const Eigen::Index rc = qr.rank();
    if (rc <= rank) throw RankDeficient(names[static_cast<std::size_t>(c - 1)]);
    rank = rc;
  }
}

// CR1 covariance from a fixed bread and residuals.
Eigen::MatrixXd cr1(const Eigen::MatrixXd& X, const Eigen::MatrixXd& bread,
                    const Eigen::VectorXd& u,
                    const std::vector<std::vector<Eigen::Index>>& members) {
  const auto n = static_cast<double>(X.rows());
  const auto k = static_cast<double>(X.cols());
  const auto g = static_cast<double>(members.size());
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  Eigen::VectorXd score(X.cols());
  for (const auto& rows : members) {
    score.setZero();
    for (auto i : rows) score += X.row(i).transpose() * u[i];
    meat.noalias() += score * score.transpose();
  }
  const double scale = (g / (g - 1.0)) * ((n - 1.0) / (n - k));
  return scale * bread * meat * bread;
}

}  // namespace

OlsFit ols_cluster_robust(const Design& design) {
  Prepared p = prepare(design);
  const auto n = p.X.rows();
  const auto k = p.X.cols();
  if (n <= k) throw Error("regression needs more observations than covariates");
  if (p.members.size() < 2) throw Error("regression needs at least 2 clusters");
  check_rank(p.X, design.columns);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(p.X);
  OlsFit fit;
  fit.beta = qr.solve(p.y);
  fit.residuals = p.y - p.X * fit.beta;
  const Eigen::MatrixXd bread = (p.X.transpose() * p.X).inverse();
  fit.covariance = cr1(p.X, bread, fit.residuals, p.members);
  fit.n = static_cast<std::size_t>(n);
  fit.k = static_cast<std::size_t>(k);
  fit.n_clusters = p.members.size();
  for (Eigen::Index j = 0; j < k; ++j) {
    Coefficient c;
    c.name = design.columns[static_cast<std::size_t>(j)];
    c.beta = fit.beta[j];
    const double var = fit.covariance(j, j);
    c.se = var > 0.0 ? std::sqrt(var) : 0.0;
    c.degenerate = !(c.se > 1e-12 * std::max(1.0, std::abs(c.beta)));
    if (c.degenerate) c.se = 0.0;
    c.t = c.degenerate ? (c.beta == 0.0 ? 0.0 : kNaN) : c.beta / c.se;
    fit.coefficients.push_back(c);
  }
  return fit;
}

StatResult wild_cluster_bootstrap(const Design& design, std::size_t coefficient,
                                  std::size_t replicates, std::uint64_t seed, unsigned workers) {
  StatResult r;
  r.method = "wild_cluster_bootstrap";
  Prepared p = prepare(design);
  const auto n = p.X.rows();
  const auto k = p.X.cols();
  if (p.members.size() < 2) throw Error("wild cluster bootstrap needs at least 2 clusters");
  if (coefficient >= static_cast<std::size_t>(k)) throw Error("coefficient index out of range");
  if (n <= k) throw Error("regression needs more observations than covariates");
  check_rank(p.X, design.columns);
  const auto j = static_cast<Eigen::Index>(coefficient);
  r.n = static_cast<std::size_t>(n);
  r.n1 = p.members.size();

  const Eigen::MatrixXd bread = (p.X.transpose() * p.X).inverse();
  const Eigen::MatrixXd proj = bread * p.X.transpose();  // β = proj · y
  auto t_stat = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd beta = proj * y;
    const Eigen::VectorXd u = y - p.X * beta;
    // Only the (j, j) entry of the CR1 covariance is needed.
    const double g = static_cast<double>(p.members.size());
    double meat = 0.0;
    for (const auto& rows : p.members) {
      double s = 0.0;
      for (auto i : rows) s += proj(j, i) * u[i];
      meat += s * s;
    }
    const double scale = (g / (g - 1.0)) * ((n - 1.0) / static_cast<double>(n - k));
    const double var = scale * meat;
    const double se = var > 0.0 ? std::sqrt(var) : 0.0;
    if (!(se > 1e-12 * std::max(1.0, std::abs(beta[j])))) {
      return beta[j] == 0.0 || std::abs(beta[j]) < 1e-12 ? 0.0
                                                        : std::copysign(std::numeric_limits<double>::infinity(), beta[j]);
    }
    return beta[j] / se;
  };

  const double t_obs = t_stat(p.y);
  r.estimate = (proj * p.y)[j];
  r.statistic = t_obs;

  // Restricted model: drop column j.
  Eigen::VectorXd fitted_r;
  if (k == 1) {
    fitted_r = Eigen::VectorXd::Zero(n);
  } else {
    Eigen::MatrixXd Xr(n, k - 1);
    for (Eigen::Index c = 0, out = 0; c < k; ++c) {
      if (c != j) Xr.col(out++) = p.X.col(c);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xr);
    fitted_r = Xr * qr.solve(p.y);
  }
  const Eigen::VectorXd resid_r = p.y - fitted_r;

  std::vector<std::uint64_t> label_hash(p.labels.size());
  for (std::size_t g = 0; g < p.labels.size(); ++g) label_hash[g] = text::fnv1a(p.labels[g]);

  const double abs_obs = std::abs(t_obs);
  auto run_range = [&](std::size_t begin, std::size_t end) {
    std::size_t hits = 0;
    Eigen::VectorXd ystar(n);
    for (std::size_t b = begin; b < end; ++b) {
      const std::uint64_t rep = derive_seed(seed, b);
      for (std::size_t g = 0; g < p.members.size(); ++g) {
        const double w = Rng(derive_seed(rep, label_hash[g])).rademacher();
        for (auto i : p.members[g]) ystar[i] = fitted_r[i] + w * resid_r[i];
      }
      const double ts = t_stat(ystar);
      // Relative slack so ties with the observed statistic are not lost to
      // rounding in the refit.
      if (std::abs(ts) >= abs_obs * (1.0 - 1e-10)) ++hits;
    }
    return hits;
  };

  std::size_t hits = 0;
  workers = std::max(1u, workers);
  if (workers == 1 || replicates < 2 * workers) {
    hits = run_range(0, replicates);
  } else {
    std::vector<std::size_t> partial(workers, 0);
    std::vector<std::thread> pool;
    const std::size_t chunk = (replicates + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(replicates, w * chunk);
      const std::size_t end = std::min(replicates, begin + chunk);
      pool.emplace_back([&, w, begin, end] { partial[w] = run_range(begin, end); });
    }
    for (auto& t : pool) t.join();
    for (auto h : partial) hits += h;
  }
  r.p_two_sided = (static_cast<double>(hits) + 1.0) / (static_cast<double>(replicates) + 1.0);
  r.p_two_sided = std::min(1.0, *r.p_two_sided);
  r.degenerate = !std::isfinite(t_obs);
  return r;
}

Design cell_regression_design(std::span<const CellMetrics> cells, ClusterKey key,
                              DeltaSource source, Proxy proxy, bool include_react) {
  std::vector<const CellMetrics*> rows;
  bool has_cot = false;
  bool has_react = false;
  for (const auto& m : cells) {
    std::optional<double> delta;
    if (source == DeltaSource::raw) {
      delta = m.delta_raw;
    } else if (auto it = m.delta_matched.find(proxy); it != m.delta_matched.end()) {
      delta = it->second;
    }
    if (!delta) continue;
    rows.push_back(&m);
    has_cot |= m.cell.scaffold != Scaffold::react;
    has_react |= m.cell.scaffold == Scaffold::react;
  }
  const bool react = include_react && has_cot && has_react;
  Design d;
  d.columns = {"intercept", "multi_path", "accuracy"};
  if (react) d.columns.push_back("react");
  d.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d.columns.size()));
  d.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& m = *rows[i];
    const auto r = static_cast<Eigen::Index>(i);
    d.X(r, 0) = 1.0;
    d.X(r, 1) = m.cell.benchmark == Benchmark::math ? 0.0 : 1.0;
    d.X(r, 2) = m.accuracy;
    if (react) d.X(r, 3) = m.cell.scaffold == Scaffold::react ? 1.0 : 0.0;
    d.y[r] = source == DeltaSource::raw ? *m.delta_raw : m.delta_matched.at(proxy);
    d.clusters.push_back(key == ClusterKey::model ? m.cell.model_id : m.cell.family);
  }
  return d;
}

}  // namespace agentdiff::stats
