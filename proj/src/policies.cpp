#include "taskselect/policies.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace taskselect {

namespace {

using ordered_json = nlohmann::ordered_json;

void require_finite(const std::vector<double>& v, const char* what) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k])) {
      throw Error(ErrorCode::non_finite_input,
                  std::string(what) + "[" + std::to_string(k) + "] is not finite");
    }
  }
}

}  // namespace

StaticPolicy::StaticPolicy(std::string name, PolicyDistribution dist, std::string descriptor)
    : name_(std::move(name)), dist_(std::move(dist)), descriptor_(std::move(descriptor)) {}

std::unique_ptr<Policy> StaticPolicy::clone() const {
  return std::make_unique<StaticPolicy>(*this);
}

std::unique_ptr<Policy> random_policy(std::size_t n) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "random policy needs n >= 1");
  PolicyDescriptor d;
  d.kind = PolicyDescriptor::Kind::random;
  d.n_tasks = n;
  return std::make_unique<StaticPolicy>("random", PolicyDistribution::uniform(n), to_json(d));
}

std::unique_ptr<Policy> task_size_policy(const std::vector<std::uint64_t>& sizes) {
  if (sizes.empty()) throw Error(ErrorCode::empty, "task_size policy needs at least one size");
  double total = 0.0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] == 0) {
      throw Error(ErrorCode::invalid_argument, "size[" + std::to_string(k) + "] must be positive");
    }
    total += static_cast<double>(sizes[k]);
  }
  std::vector<double> p(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) p[k] = static_cast<double>(sizes[k]) / total;
  PolicyDescriptor d;
  d.kind = PolicyDescriptor::Kind::task_size;
  d.sizes = sizes;
  return std::make_unique<StaticPolicy>("task_size", validate_distribution(std::move(p)),
                                        to_json(d));
}

std::unique_ptr<Policy> fixed_softmax_policy(const std::vector<double>& omega) {
  PolicyDescriptor d;
  d.kind = PolicyDescriptor::Kind::softmax;
  d.omega = omega;
  return std::make_unique<StaticPolicy>("softmax", softmax(omega), to_json(d));
}

// ---------------------------------------------------------------------------

Exp3SState exp3s_init(std::size_t n, double eta, double epsilon) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "exp3s needs n >= 1");
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw Error(ErrorCode::invalid_argument, "exp3s eta must be positive");
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "exp3s epsilon must lie in [0, 1)");
  }
  Exp3SState s;
  s.omega.assign(n, 0.0);
  s.eta = eta;
  s.epsilon = epsilon;
  s.t = 1;
  return s;
}

PolicyDistribution exp3s_weights_distribution(const Exp3SState& state) {
  return softmax(state.omega);
}

PolicyDistribution exp3s_distribution(const Exp3SState& state) {
  const PolicyDistribution rho = softmax(state.omega);
  const double n = static_cast<double>(state.n_tasks());
  std::vector<double> p(rho.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = (1.0 - state.epsilon) * rho[k] + state.epsilon / n;
  }
  return validate_distribution(std::move(p));
}

Exp3SState exp3s_update(Exp3SState state, TaskId chosen, double scaled_reward) {
  const std::size_t n = state.n_tasks();
  if (n < 2) throw Error(ErrorCode::invalid_argument, "exp3s update needs at least two tasks");
  if (chosen.index >= n) throw Error(ErrorCode::invalid_argument, "chosen task out of range");
  if (!(scaled_reward >= -1.0 && scaled_reward <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "scaled reward must lie in [-1, 1]");
  }

  const PolicyDistribution rho = softmax(state.omega);
  const double alpha = exp3s_alpha(state);

  // a_k = omega_k + eta * r~_k, where r~ is nonzero only for the chosen arm.
  std::vector<double> a = state.omega;
  a[chosen.index] += state.eta * scaled_reward / rho[chosen];

  const double m = *std::max_element(a.begin(), a.end());
  std::vector<double> e(n);
  for (std::size_t k = 0; k < n; ++k) e[k] = std::exp(a[k] - m);

  const double share = alpha / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    double others = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != k) others += e[j];
    }
    state.omega[k] = m + std::log((1.0 - alpha) * e[k] + share * others);
  }
  ++state.t;
  return state;
}

Exp3SPolicy::Exp3SPolicy(std::size_t n, double eta, double epsilon)
    : state_(exp3s_init(n, eta, epsilon)) {}

Exp3SPolicy::Exp3SPolicy(Exp3SState state) : state_(std::move(state)) {
  require_finite(state_.omega, "omega");
  if (state_.omega.empty()) throw Error(ErrorCode::empty, "exp3s state has no weights");
}

PolicyDistribution Exp3SPolicy::distribution(std::uint64_t) const {
  return exp3s_distribution(state_);
}

void Exp3SPolicy::observe(std::uint64_t, TaskId chosen, double scaled_reward) {
  state_ = exp3s_update(std::move(state_), chosen, scaled_reward);
}

std::string Exp3SPolicy::descriptor() const {
  PolicyDescriptor d;
  d.kind = PolicyDescriptor::Kind::exp3s;
  d.n_tasks = state_.n_tasks();
  d.eta = state_.eta;
  d.epsilon = state_.epsilon;
  return to_json(d);
}

std::unique_ptr<Policy> Exp3SPolicy::clone() const {
  return std::make_unique<Exp3SPolicy>(*this);
}

// ---------------------------------------------------------------------------

const char* to_string(PolicyDescriptor::Kind kind) noexcept {
  switch (kind) {
    case PolicyDescriptor::Kind::random: return "random";
    case PolicyDescriptor::Kind::task_size: return "task_size";
    case PolicyDescriptor::Kind::softmax: return "softmax";
    case PolicyDescriptor::Kind::exp3s: return "exp3s";
    case PolicyDescriptor::Kind::oracle: return "oracle";
  }
  return "unknown";
}

std::string to_json(const PolicyDescriptor& desc) {
  ordered_json j;
  j["type"] = to_string(desc.kind);
  ordered_json params = ordered_json::object();
  switch (desc.kind) {
    case PolicyDescriptor::Kind::random:
      if (desc.n_tasks > 0) params["n"] = desc.n_tasks;
      break;
    case PolicyDescriptor::Kind::task_size:
      params["sizes"] = desc.sizes;
      break;
    case PolicyDescriptor::Kind::softmax:
      params["omega"] = desc.omega;
      break;
    case PolicyDescriptor::Kind::exp3s:
      if (desc.n_tasks > 0) params["n"] = desc.n_tasks;
      params["eta"] = desc.eta;
      params["epsilon"] = desc.epsilon;
      break;
    case PolicyDescriptor::Kind::oracle:
      break;
  }
  j["params"] = std::move(params);
  return j.dump();
}

PolicyDescriptor parse_policy_descriptor(const std::string& text) {
  PolicyDescriptor d;
  try {
    const auto j = ordered_json::parse(text);
    const auto type = j.at("type").get<std::string>();
    const ordered_json params = j.value("params", ordered_json::object());
    if (type == "random") {
      d.kind = PolicyDescriptor::Kind::random;
      d.n_tasks = params.value("n", std::size_t{0});
    } else if (type == "task_size") {
      d.kind = PolicyDescriptor::Kind::task_size;
      d.sizes = params.at("sizes").get<std::vector<std::uint64_t>>();
    } else if (type == "softmax") {
      d.kind = PolicyDescriptor::Kind::softmax;
      d.omega = params.at("omega").get<std::vector<double>>();
      require_finite(d.omega, "omega");
    } else if (type == "exp3s") {
      d.kind = PolicyDescriptor::Kind::exp3s;
      d.n_tasks = params.value("n", std::size_t{0});
      d.eta = params.value("eta", 1e-3);
      d.epsilon = params.value("epsilon", 0.05);
    } else if (type == "oracle") {
      d.kind = PolicyDescriptor::Kind::oracle;
    } else {
      throw Error(ErrorCode::parse_error, "unknown policy type '" + type + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("policy descriptor: ") + e.what());
  }
  return d;
}

void write_policy_descriptor(const PolicyDescriptor& desc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  out << to_json(desc) << '\n';
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

PolicyDescriptor read_policy_descriptor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_policy_descriptor(buf.str());
}

std::unique_ptr<Policy> make_policy(const PolicyDescriptor& desc, std::size_t n_tasks) {
  const auto resolve_n = [&](std::size_t declared) {
    if (declared > 0 && n_tasks > 0 && declared != n_tasks) {
      throw Error(ErrorCode::invalid_argument,
                  "policy declares " + std::to_string(declared) + " tasks but environment has " +
                      std::to_string(n_tasks));
    }
    return declared > 0 ? declared : n_tasks;
  };
  switch (desc.kind) {
    case PolicyDescriptor::Kind::random:
      return random_policy(resolve_n(desc.n_tasks));
    case PolicyDescriptor::Kind::task_size:
      resolve_n(desc.sizes.size());
      return task_size_policy(desc.sizes);
    case PolicyDescriptor::Kind::softmax:
      resolve_n(desc.omega.size());
      return fixed_softmax_policy(desc.omega);
    case PolicyDescriptor::Kind::exp3s:
      return std::make_unique<Exp3SPolicy>(resolve_n(desc.n_tasks), desc.eta, desc.epsilon);
    case PolicyDescriptor::Kind::oracle:
      break;
  }
  throw Error(ErrorCode::invalid_argument, "the oracle policy needs an environment to resolve");
}

}  // namespace taskselect
