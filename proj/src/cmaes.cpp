#include "taskselect/cmaes.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "taskselect/core.hpp"

namespace taskselect {

void validate(const CmaesConfig& config) {
  if (config.dimension < 1) throw Error(ErrorCode::invalid_argument, "CMA-ES dimension must be >= 1");
  if (config.population < 4) throw Error(ErrorCode::invalid_argument, "CMA-ES population must be >= 4");
  if (config.iterations < 1) throw Error(ErrorCode::invalid_argument, "CMA-ES iterations must be >= 1");
  if (!(config.sigma0 > 0.0) || !std::isfinite(config.sigma0)) {
    throw Error(ErrorCode::invalid_argument, "CMA-ES sigma0 must be positive");
  }
  if (!config.initial_mean.empty() && config.initial_mean.size() != config.dimension) {
    throw Error(ErrorCode::invalid_argument, "CMA-ES initial mean has the wrong dimension");
  }
}

CmaesStrategy CmaesStrategy::defaults(std::size_t dimension, std::size_t population) {
  CmaesStrategy s;
  const double n = static_cast<double>(dimension);
  const double lambda = static_cast<double>(population);
  s.mu = population / 2;

  s.weights.resize(s.mu);
  for (std::size_t i = 0; i < s.mu; ++i) {
    s.weights[i] = std::log((lambda + 1.0) / 2.0) - std::log(static_cast<double>(i + 1));
  }
  const double wsum = std::accumulate(s.weights.begin(), s.weights.end(), 0.0);
  double wsq = 0.0;
  for (double& w : s.weights) {
    w /= wsum;
    wsq += w * w;
  }
  s.mu_eff = 1.0 / wsq;

  s.c_sigma = (s.mu_eff + 2.0) / (n + s.mu_eff + 5.0);
  s.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((s.mu_eff - 1.0) / (n + 1.0)) - 1.0) + s.c_sigma;
  s.c_c = (4.0 + s.mu_eff / n) / (n + 4.0 + 2.0 * s.mu_eff / n);
  s.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + s.mu_eff);
  s.c_mu = std::min(1.0 - s.c_1,
                    2.0 * (s.mu_eff - 2.0 + 1.0 / s.mu_eff) / ((n + 2.0) * (n + 2.0) + s.mu_eff));
  s.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  return s;
}

std::string CmaesStrategy::describe() const {
  std::ostringstream out;
  out.precision(10);
  out << "mu=" << mu << " mu_eff=" << mu_eff << " c_sigma=" << c_sigma << " d_sigma=" << d_sigma
      << " c_c=" << c_c << " c_1=" << c_1 << " c_mu=" << c_mu << " chi_n=" << chi_n;
  return out.str();
}

namespace {

std::string format_point(const Eigen::VectorXd& x) {
  std::ostringstream out;
  out.precision(17);
  out << '[';
  for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x[i];
  out << ']';
  return out.str();
}

std::vector<double> to_std(const Eigen::VectorXd& x) { return {x.data(), x.data() + x.size()}; }

}  // namespace

CmaesResult cmaes_optimize(const Objective& f, const CmaesConfig& config) {
  validate(config);
  const std::size_t n = config.dimension;
  const std::size_t lambda = config.population;
  const auto dim = static_cast<Eigen::Index>(n);

  CmaesResult result;
  result.strategy = CmaesStrategy::defaults(n, lambda);
  const CmaesStrategy& s = result.strategy;

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  if (!config.initial_mean.empty()) {
    mean = Eigen::Map<const Eigen::VectorXd>(config.initial_mean.data(), dim);
  }
  double sigma = config.sigma0;
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd D = Eigen::VectorXd::Ones(dim);
  Eigen::VectorXd p_sigma = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd p_c = Eigen::VectorXd::Zero(dim);

  // Ranking key: smaller is better in both modes.
  const double sign = config.mode == OptimizeMode::minimize ? 1.0 : -1.0;
  bool have_best = false;
  double best_key = 0.0;

  Rng rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Eigen::VectorXd> y(lambda, Eigen::VectorXd(dim));
  std::vector<std::vector<double>> x(lambda);

  for (std::size_t gen = 0; gen < config.iterations; ++gen) {
    const Eigen::MatrixXd BD = B * D.asDiagonal();
    for (std::size_t i = 0; i < lambda; ++i) {
      Eigen::VectorXd z(dim);
      for (Eigen::Index d = 0; d < dim; ++d) z[d] = normal(rng);
      y[i] = BD * z;
      x[i] = to_std(mean + sigma * y[i]);
    }

    const std::vector<double> values =
        map_indices<double>(config.execution, lambda, [&](std::size_t i) { return f(x[i]); });
    result.evaluations += lambda;

    for (std::size_t i = 0; i < lambda; ++i) {
      if (!std::isfinite(values[i])) {
        throw Error(ErrorCode::non_finite_objective,
                    "objective returned " + std::to_string(values[i]) + " at " +
                        format_point(Eigen::Map<const Eigen::VectorXd>(x[i].data(), dim)));
      }
    }

    std::vector<std::size_t> order(lambda);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sign * values[a] < sign * values[b];
    });

    const std::size_t gen_best = order.front();
    result.history.push_back(values[gen_best]);
    result.generation_best_points.push_back(x[gen_best]);
    if (!have_best || sign * values[gen_best] < best_key) {
      have_best = true;
      best_key = sign * values[gen_best];
      result.best_point = x[gen_best];
      result.best_value = values[gen_best];
    }
    result.best_so_far.push_back(result.best_value);

    // Recombination.
    Eigen::VectorXd y_w = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < s.mu; ++i) y_w += s.weights[i] * y[order[i]];
    mean += sigma * y_w;

    // Step-size path uses C^{-1/2} y_w = B D^{-1} B^T y_w.
    const Eigen::VectorXd c_inv_sqrt_yw = B * (B.transpose() * y_w).cwiseQuotient(D);
    p_sigma = (1.0 - s.c_sigma) * p_sigma +
              std::sqrt(s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff) * c_inv_sqrt_yw;

    const double ps_norm = p_sigma.norm();
    const double decay = 1.0 - std::pow(1.0 - s.c_sigma, 2.0 * static_cast<double>(gen + 1));
    const bool h_sigma =
        ps_norm / std::sqrt(decay) < (1.4 + 2.0 / (static_cast<double>(n) + 1.0)) * s.chi_n;

    p_c = (1.0 - s.c_c) * p_c +
          (h_sigma ? std::sqrt(s.c_c * (2.0 - s.c_c) * s.mu_eff) : 0.0) * y_w;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t i = 0; i < s.mu; ++i) {
      const Eigen::VectorXd& yi = y[order[i]];
      rank_mu.noalias() += s.weights[i] * yi * yi.transpose();
    }
    const double lost = h_sigma ? 0.0 : s.c_1 * s.c_c * (2.0 - s.c_c);
    C = (1.0 - s.c_1 - s.c_mu + lost) * C + s.c_1 * (p_c * p_c.transpose()) + s.c_mu * rank_mu;
    C = 0.5 * (C + C.transpose());

    sigma *= std::exp((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1.0));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
    B = eig.eigenvectors();
    D = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt();
  }

  result.final_sigma = sigma;
  return result;
}

}  // namespace taskselect
