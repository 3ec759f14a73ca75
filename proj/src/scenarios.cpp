#include "cebound/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include "cebound/errors.hpp"
#include "cebound/transport.hpp"

namespace cebound {

namespace {

// ---------------------------------------------------------------------------
// parameters

class Params {
 public:
  Params(const ScenarioSpec& spec, std::initializer_list<const char*> allowed)
      : id_(spec.id.empty() ? std::string(to_string(spec.family)) : spec.id),
        p_(spec.params.is_null() ? empty() : spec.params) {
    if (!p_.is_object()) fail("params", "must be an object");
    for (const auto& item : p_.items()) {
      if (std::find_if(allowed.begin(), allowed.end(),
                       [&](const char* k) { return item.key() == k; }) == allowed.end()) {
        fail(item.key(), "is not a parameter of this family");
      }
    }
  }

  const std::string& id() const { return id_; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw SpecError("scenario '" + id_ + "': parameter '" + key + "' " + what);
  }

  double real(const char* key, double def, double lo, double hi) const {
    if (!p_.contains(key)) return def;
    const auto& v = p_.at(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double x = v.get<double>();
    if (!(x >= lo && x <= hi)) {
      fail(key, "must lie in [" + fmt(lo) + ", " + fmt(hi) + "], got " + fmt(x));
    }
    return x;
  }

  std::size_t integer(const char* key, std::size_t def, std::size_t lo, std::size_t hi) const {
    if (!p_.contains(key)) return def;
    return as_integer(key, p_.at(key), lo, hi);
  }

  std::vector<std::size_t> integers(const char* key, std::size_t count, std::size_t def,
                                    std::size_t lo, std::size_t hi) const {
    if (!p_.contains(key)) return std::vector<std::size_t>(count, def);
    const auto& v = p_.at(key);
    if (!v.is_array()) return std::vector<std::size_t>(count, as_integer(key, v, lo, hi));
    if (v.size() != count) fail(key, "must list " + std::to_string(count) + " entries");
    std::vector<std::size_t> out;
    for (const auto& e : v) out.push_back(as_integer(key, e, lo, hi));
    return out;
  }

  bool flag(const char* key, bool def) const {
    if (!p_.contains(key)) return def;
    if (!p_.at(key).is_boolean()) fail(key, "must be true or false");
    return p_.at(key).get<bool>();
  }

  std::string text(const char* key, std::string def) const {
    if (!p_.contains(key)) return def;
    if (!p_.at(key).is_string()) fail(key, "must be a string");
    return p_.at(key).get<std::string>();
  }

 private:
  static const nlohmann::json& empty() {
    static const nlohmann::json e = nlohmann::json::object();
    return e;
  }

  static std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
  }

  std::size_t as_integer(const char* key, const nlohmann::json& v, std::size_t lo,
                         std::size_t hi) const {
    if (!v.is_number()) fail(key, "must be an integer");
    const double x = v.get<double>();
    if (x != std::floor(x)) fail(key, "must be an integer");
    if (!(x >= static_cast<double>(lo) && x <= static_cast<double>(hi))) {
      fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " +
                    fmt(x));
    }
    return static_cast<std::size_t>(x);
  }

  std::string id_;
  const nlohmann::json& p_;
};

// ---------------------------------------------------------------------------
// dense model assembly

class Builder {
 public:
  Builder(MetricSpace states, std::vector<std::string> obs, std::vector<std::string> actions,
          std::size_t horizon)
      : states_(std::move(states)), obs_(std::move(obs)), actions_(std::move(actions)),
        T_(horizon), ns_(states_.size()), ny_(obs_.size()), na_(actions_.size()),
        initial_(ns_ * ny_, 0.0), kernel_((T_ - 1) * ns_ * na_ * ns_ * ny_, 0.0),
        cost_(T_ * ns_ * na_, 0.0) {}

  double& initial(std::size_t s, std::size_t y) { return initial_[s * ny_ + y]; }
  double& next(std::size_t k, std::size_t s, std::size_t a, std::size_t s2, std::size_t y) {
    return kernel_[((k * ns_ + s) * na_ + a) * ns_ * ny_ + s2 * ny_ + y];
  }
  double& cost(std::size_t k, std::size_t s, std::size_t a) { return cost_[(k * ns_ + s) * na_ + a]; }

  Pomdp build() {
    return Pomdp(states_, obs_, actions_, Dist(initial_, 1e-9),
                 Kernel(T_ - 1, ns_, na_, ns_ * ny_, kernel_, 1e-9), CostTable(T_, ns_, na_, cost_),
                 T_);
  }

 private:
  MetricSpace states_;
  std::vector<std::string> obs_;
  std::vector<std::string> actions_;
  std::size_t T_, ns_, ny_, na_;
  std::vector<double> initial_;
  std::vector<double> kernel_;
  std::vector<double> cost_;
};

std::vector<std::string> numbered(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

const std::vector<std::string> kMoves{"left", "stay", "right"};

int move_of(std::size_t a) { return static_cast<int>(a) - 1; }

std::size_t wrap(long x, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((x % m) + m) % m);
}

int clamp_int(long x, long lo, long hi) { return static_cast<int>(std::clamp(x, lo, hi)); }

// ---------------------------------------------------------------------------
// ring worlds: bounded_noise, intermittent, quantized

struct RingWorld {
  std::size_t n = 7;
  std::size_t horizon = 3;
  double slip = 0.2;
  std::size_t goal = 0;
  double action_cost = 0.5;
};


RingWorld read_ring(const Params& p) {
  RingWorld w;
  w.n = p.integer("n", 7, 2, 64);
  w.horizon = p.integer("horizon", 3, 1, 8);
  w.slip = p.real("slip", 0.2, 0.0, 1.0);
  w.goal = p.integer("goal", 0, 0, w.n - 1);
  w.action_cost = p.real("action_cost", 0.5, 0.0, 1e6);
  return w;
}

// y = s + offset with the listed offset law
Pomdp ring_pomdp(const RingWorld& w, const std::vector<std::pair<long, double>>& noise) {
  const MetricSpace ring = MetricSpace::ring(w.n);
  Builder b(ring, ring.labels(), kMoves, w.horizon);
  for (std::size_t s = 0; s < w.n; ++s) {
    for (const auto& [off, pr] : noise) b.initial(s, wrap(static_cast<long>(s) + off, w.n)) += pr / w.n;
  }
  for (std::size_t k = 0; k + 1 < w.horizon; ++k) {
    for (std::size_t s = 0; s < w.n; ++s) {
      for (std::size_t a = 0; a < 3; ++a) {
        const std::size_t moved = wrap(static_cast<long>(s) + move_of(a), w.n);
        for (const auto& [s2, ps] : {std::pair{moved, 1.0 - w.slip}, std::pair{s, w.slip}}) {
          for (const auto& [off, pr] : noise) {
            b.next(k, s, a, s2, wrap(static_cast<long>(s2) + off, w.n)) += ps * pr;
          }
        }
      }
    }
  }
  for (std::size_t k = 0; k < w.horizon; ++k) {
    for (std::size_t s = 0; s < w.n; ++s) {
      for (std::size_t a = 0; a < 3; ++a) {
        b.cost(k, s, a) = ring(s, w.goal) + w.action_cost * std::abs(move_of(a));
      }
    }
  }
  return b.build();
}

std::vector<std::pair<long, double>> symmetric(long r, double mass) {
  if (r == 0) return {{0, mass}};
  return {{-r, mass / 2}, {r, mass / 2}};
}

Instance bounded_noise(const ScenarioSpec& spec) {
  Params p(spec, {"n", "r", "horizon", "slip", "goal", "action_cost"});
  const RingWorld w = read_ring(p);
  const std::size_t r = p.integer("r", 1, 0, 64);
  if (2 * r > w.n) p.fail("r", "exceeds half the ring size");
  Instance out;
  out.id = p.id();
  out.family = spec.family;
  out.pomdp = ring_pomdp(w, symmetric(static_cast<long>(r), 1.0));
  out.abstraction = Abstraction::identity(out.pomdp.states());
  std::vector<std::size_t> id(w.n);
  std::iota(id.begin(), id.end(), 0);
  out.estimator = Estimator::last_observation(id);
  out.notes = {{"r", double(r)}, {"eta_ceiling", double(r)}};
  return out;
}

Instance intermittent(const ScenarioSpec& spec) {
  Params p(spec, {"n", "r", "R", "p", "horizon", "slip", "goal", "action_cost"});
  const RingWorld w = read_ring(p);
  const std::size_t r = p.integer("r", 1, 0, 64);
  const std::size_t R = p.integer("R", 2, 0, 64);
  const double bad = p.real("p", 0.2, 0.0, 1.0);
  if (r > R) p.fail("r", "must not exceed R");
  if (2 * R > w.n) p.fail("R", "exceeds half the ring size");
  auto noise = symmetric(static_cast<long>(r), 1.0 - bad);
  for (const auto& e : symmetric(static_cast<long>(R), bad)) noise.push_back(e);
  Instance out;
  out.id = p.id();
  out.family = spec.family;
  out.pomdp = ring_pomdp(w, noise);
  out.abstraction = Abstraction::identity(out.pomdp.states());
  std::vector<std::size_t> id(w.n);
  std::iota(id.begin(), id.end(), 0);
  out.estimator = Estimator::last_observation(id);
  out.notes = {{"r", double(r)},
               {"R", double(R)},
               {"p", bad},
               {"eta_ceiling", (1.0 - bad) * double(r) + bad * double(R)}};
  return out;
}

Instance quantized(const ScenarioSpec& spec) {
  Params p(spec, {"cells", "width", "r", "horizon", "slip", "goal", "action_cost"});
  const std::size_t cells = p.integer("cells", 3, 1, 32);
  const std::size_t width = p.integer("width", 3, 1, 32);
  RingWorld w;
  w.n = cells * width;
  w.horizon = p.integer("horizon", 3, 1, 8);
  w.slip = p.real("slip", 0.2, 0.0, 1.0);
  w.goal = p.integer("goal", 0, 0, w.n - 1);
  w.action_cost = p.real("action_cost", 0.5, 0.0, 1e6);
  if (w.n < 2) p.fail("cells", "and width must give at least two states");
  const std::size_t r = p.integer("r", 1, 0, 64);
  if (2 * r > w.n) p.fail("r", "exceeds half the ring size");

  std::vector<std::size_t> cell_of(w.n);
  std::vector<std::size_t> reps(cells);
  for (std::size_t s = 0; s < w.n; ++s) cell_of[s] = s / width;
  for (std::size_t c = 0; c < cells; ++c) reps[c] = c * width + (width - 1) / 2;

  Instance out;
  out.id = p.id();
  out.family = spec.family;
  out.pomdp = ring_pomdp(w, symmetric(static_cast<long>(r), 1.0));
  out.abstraction = Abstraction::quantization(out.pomdp.states(), cell_of, reps);
  out.estimator = Estimator::quantized_last_observation(out.abstraction);
  double R = 0.0;
  for (std::size_t s = 0; s < w.n; ++s) R = std::max(R, out.pomdp.states()(s, reps[cell_of[s]]));
  out.notes = {{"r", double(r)}, {"R", R}, {"eta_ceiling", double(r) + 2.0 * R}};
  return out;
}

// ---------------------------------------------------------------------------
// adaptive: S = X x Theta, Y = (x_t, previous cost)

Instance adaptive(const ScenarioSpec& spec) {
  Params p(spec, {"nx", "thetas", "theta_scale", "slip", "slip_step", "cost_step", "identifiable",
                  "horizon", "goal", "action_cost", "x0"});
  const std::size_t nx = p.integer("nx", 3, 1, 16);
  const std::size_t nt = p.integer("thetas", 2, 1, 8);
  const double scale = p.real("theta_scale", 1.0, 1e-6, 1e6);
  const double slip = p.real("slip", 0.1, 0.0, 1.0);
  const double slip_step = p.real("slip_step", 0.3, 0.0, 1.0);
  const bool identifiable = p.flag("identifiable", true);
  const double cost_step = identifiable ? p.real("cost_step", 1.0, 1e-9, 1e6) : 0.0;
  const std::size_t T = p.integer("horizon", 3, 1, 8);
  const std::size_t goal = p.integer("goal", nx - 1, 0, nx - 1);
  const double action_cost = p.real("action_cost", 0.5, 0.0, 1e6);
  const std::size_t x0 = p.integer("x0", 0, 0, nx - 1);
  if (slip + slip_step > 1.0) p.fail("slip_step", "pushes the slip probability above 1");

  const MetricSpace X = MetricSpace::path(nx);
  auto slip_of = [&](std::size_t th) {
    return nt == 1 ? slip : slip + slip_step * double(th) / double(nt - 1);
  };
  auto ell = [&](std::size_t x, std::size_t th, std::size_t a) {
    return X(x, goal) + action_cost * std::abs(move_of(a)) + cost_step * double(th);
  };
  auto step_x = [&](std::size_t x, std::size_t a) {
    return static_cast<std::size_t>(clamp_int(static_cast<long>(x) + move_of(a), 0, long(nx) - 1));
  };

  // attainable cost values, keyed at 1e-9 resolution
  std::map<long long, std::size_t> value_index;
  std::vector<double> values;
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t th = 0; th < nt; ++th) {
      for (std::size_t a = 0; a < 3; ++a) {
        const double v = ell(x, th, a);
        const long long key = std::llround(v * 1e9);
        if (value_index.emplace(key, 0).second) values.push_back(v);
      }
    }
  }
  std::sort(values.begin(), values.end());
  for (std::size_t i = 0; i < values.size(); ++i) value_index[std::llround(values[i] * 1e9)] = i;
  const std::size_t nv = values.size() + 1;  // slot 0 is "none"
  auto obs_index = [&](std::size_t x, std::optional<double> v) {
    return x * nv + (v ? value_index.at(std::llround(*v * 1e9)) + 1 : 0);
  };

  std::vector<std::string> s_labels;
  std::vector<std::vector<double>> d(nx * nt, std::vector<double>(nx * nt));
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t th = 0; th < nt; ++th) {
      s_labels.push_back("x" + std::to_string(x) + "/th" + std::to_string(th));
      for (std::size_t x2 = 0; x2 < nx; ++x2) {
        for (std::size_t t2 = 0; t2 < nt; ++t2) {
          d[x * nt + th][x2 * nt + t2] =
              X(x, x2) + scale * std::abs(double(th) - double(t2));
        }
      }
    }
  }
  std::vector<std::string> y_labels;
  for (std::size_t x = 0; x < nx; ++x) {
    y_labels.push_back("x" + std::to_string(x) + "/none");
    for (double v : values) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "x%zu/c%.6g", x, v);
      y_labels.push_back(buf);
    }
  }
  Builder b(MetricSpace(s_labels, Matrix::from_rows(d)), y_labels, kMoves, T);
  for (std::size_t th = 0; th < nt; ++th) b.initial(x0 * nt + th, obs_index(x0, std::nullopt)) = 1.0 / nt;
  for (std::size_t k = 0; k + 1 < T; ++k) {
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t th = 0; th < nt; ++th) {
        for (std::size_t a = 0; a < 3; ++a) {
          const std::size_t s = x * nt + th;
          const double v = ell(x, th, a);
          const std::size_t moved = step_x(x, a);
          b.next(k, s, a, moved * nt + th, obs_index(moved, v)) += 1.0 - slip_of(th);
          b.next(k, s, a, x * nt + th, obs_index(x, v)) += slip_of(th);
        }
      }
    }
  }
  for (std::size_t k = 0; k < T; ++k) {
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t th = 0; th < nt; ++th) {
        for (std::size_t a = 0; a < 3; ++a) b.cost(k, x * nt + th, a) = ell(x, th, a);
      }
    }
  }

  Instance out;
  out.id = p.id();
  out.family = spec.family;
  out.pomdp = b.build();
  out.abstraction = Abstraction::identity(out.pomdp.states());
  out.estimator = Estimator::map_posterior(out.abstraction);
  const double per_theta_slip = nt == 1 ? 0.0 : slip_step / double(nt - 1);
  out.notes = {{"thetas", double(nt)},
               {"theta_scale", scale},
               {"L_c_target", std::max(1.0, cost_step / scale)},
               {"L_P_target", std::max(1.0, per_theta_slip / scale)}};
  return out;
}

// ---------------------------------------------------------------------------
// event_triggered: S = (x, x_pred), Y = X + {E}

Instance event_triggered(const ScenarioSpec& spec) {
  Params p(spec, {"nx", "r", "horizon", "noise", "goal", "action_cost"});
  const std::size_t nx = p.integer("nx", 5, 2, 16);
  const std::size_t r = p.integer("r", 1, 0, 16);
  const std::size_t T = p.integer("horizon", 3, 1, 8);
  const double q = p.real("noise", 0.3, 0.0, 1.0);
  const std::size_t goal = p.integer("goal", nx / 2, 0, nx - 1);
  const double action_cost = p.real("action_cost", 0.25, 0.0, 1e6);
  if (r >= nx) p.fail("r", "must be smaller than the grid size");

  const long hi = static_cast<long>(nx) - 1;
  const std::size_t E = nx;
  auto obs_of = [&](std::size_t x, std::size_t pred) {
    return std::abs(long(x) - long(pred)) > long(r) ? x : E;
  };
  auto predict = [&](std::size_t z, std::size_t a) {
    return static_cast<std::size_t>(clamp_int(long(z) + move_of(a), 0, hi));
  };
  // x1 uniform; x_{1|0} = E[X_1] on the grid
  const std::size_t pred0 = static_cast<std::size_t>(std::floor(double(hi) / 2.0 + 0.5));

  std::vector<std::string> s_labels;
  std::vector<std::vector<double>> d(nx * nx, std::vector<double>(nx * nx));
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t z = 0; z < nx; ++z) {
      s_labels.push_back("(" + std::to_string(x) + "," + std::to_string(z) + ")");
      for (std::size_t x2 = 0; x2 < nx; ++x2) {
        for (std::size_t z2 = 0; z2 < nx; ++z2) {
          d[x * nx + z][x2 * nx + z2] = std::abs(double(x) - double(x2)) + std::abs(double(z) - double(z2));
        }
      }
    }
  }
  std::vector<std::string> y_labels = numbered("x", nx);
  y_labels.push_back("E");
  Builder b(MetricSpace(s_labels, Matrix::from_rows(d)), y_labels, kMoves, T);
  for (std::size_t x = 0; x < nx; ++x) b.initial(x * nx + pred0, obs_of(x, pred0)) += 1.0 / nx;
  const std::vector<std::pair<int, double>> noise{{-1, q / 2}, {0, 1.0 - q}, {1, q / 2}};
  for (std::size_t k = 0; k + 1 < T; ++k) {
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t z = 0; z < nx; ++z) {
        const std::size_t filt = obs_of(x, z) == E ? z : x;
        for (std::size_t a = 0; a < 3; ++a) {
          const std::size_t z2 = predict(filt, a);
          for (const auto& [w, pw] : noise) {
            const std::size_t x2 = static_cast<std::size_t>(clamp_int(long(x) + move_of(a) + w, 0, hi));
            b.next(k, x * nx + z, a, x2 * nx + z2, obs_of(x2, z2)) += pw;
          }
        }
      }
    }
  }
  for (std::size_t k = 0; k < T; ++k) {
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t z = 0; z < nx; ++z) {
        for (std::size_t a = 0; a < 3; ++a) {
          b.cost(k, x * nx + z, a) = std::abs(double(x) - double(goal)) + action_cost * std::abs(move_of(a));
        }
      }
    }
  }

  Instance out;
  out.id = p.id();
  out.family = spec.family;
  out.pomdp = b.build();
  const MetricSpace X = MetricSpace::path(nx);
  std::vector<std::size_t> phi(nx * nx);
  std::vector<Dist> lambda;
  for (std::size_t s = 0; s < nx * nx; ++s) phi[s] = s / nx;
  for (std::size_t x = 0; x < nx; ++x) lambda.push_back(Dist::point(nx * nx, x * nx + x));
  out.abstraction = Abstraction(nx * nx, X, phi, lambda, lambda);

  RecursiveRule rule;
  rule.init.resize(nx + 1);
  for (std::size_t y = 0; y <= nx; ++y) rule.init[y] = y == E ? pred0 : y;
  rule.update.assign(nx, std::vector<std::vector<std::size_t>>(3, std::vector<std::size_t>(nx + 1)));
  for (std::size_t z = 0; z < nx; ++z) {
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t y = 0; y <= nx; ++y) rule.update[z][a][y] = y == E ? predict(z, a) : y;
    }
  }
  out.estimator = Estimator::recursive(rule, "event-triggered-recursion");
  out.notes = {{"r", double(r)}, {"nx", double(nx)}, {"eta_ceiling", double(r)}};
  return out;
}

// ---------------------------------------------------------------------------
// mean_field: n particles on 0..K-1, weights k_i / D

struct MeanField {
  std::size_t n = 2, K = 4, T = 3;
  std::vector<std::size_t> k, gamma, r, x0;
  std::size_t D = 0, gmax = 0;
  double beta = 0.25, L_lbar = 1.0, kappa = 0.1, q = 0.3, target = 0.0;
  std::size_t mc_samples = 2000;
  std::uint64_t seed = 0;
  std::string id;

  std::size_t num_states = 1;
  std::vector<long> grid;      // attained weighted sums, ascending
  std::vector<long> cell_of;   // weighted sum -> cell, or -1
  std::vector<std::size_t> rep;

  std::vector<int> decode(std::size_t s) const {
    std::vector<int> x(n);
    for (std::size_t i = n; i-- > 0;) {
      x[i] = static_cast<int>(s % K);
      s /= K;
    }
    return x;
  }
  std::size_t encode(const std::vector<int>& x) const {
    std::size_t s = 0;
    for (int v : x) s = s * K + static_cast<std::size_t>(v);
    return s;
  }
  long wsum(const std::vector<int>& x) const {
    long out = 0;
    for (std::size_t i = 0; i < n; ++i) out += long(k[i]) * x[i];
    return out;
  }
  double mean(long sum) const { return double(sum) / double(D); }
  // nearest integer to sum / D, halves rounded up
  long rounded(long sum) const { return (2 * sum + long(D)) / (2 * long(D)); }
  long fbar(long sum, std::size_t a, int w) const {
    return std::clamp(rounded(sum) + move_of(a) + w, long(gmax), long(K) - 1 - long(gmax));
  }
  std::vector<int> step(const std::vector<int>& x, std::size_t a, int w) const {
    const long sum = wsum(x);
    const long c = rounded(sum);
    const long f = fbar(sum, a, w);
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = static_cast<int>(f + std::clamp(long(x[i]) - c, -long(gamma[i]), long(gamma[i])));
    }
    return out;
  }
  double cost(const std::vector<int>& x, std::size_t a) const {
    const double m = mean(wsum(x));
    double spread = 0.0;
    for (int v : x) spread += (v - m) * (v - m);
    return L_lbar * std::abs(m - target) + kappa * std::abs(move_of(a)) + beta * std::tanh(spread);
  }
  std::vector<std::pair<int, double>> noise() const { return {{-1, q / 2}, {0, 1.0 - q}, {1, q / 2}}; }
  double r_bar() const {
    double out = 0.0;
    for (std::size_t i = 0; i < n; ++i) out += double(k[i]) * double(r[i]) / double(D);
    return out;
  }
  double gamma_bar() const {
    double out = 0.0;
    for (std::size_t i = 0; i < n; ++i) out += double(k[i]) * double(gamma[i]) / double(D);
    return out;
  }
  double rounding_slack() const {
    double out = 0.0;
    for (long j : grid) {
      for (long j2 : grid) {
        for (std::size_t a = 0; a < 3; ++a) {
          for (int w = -1; w <= 1; ++w) {
            const double gap = std::abs(double(fbar(j, a, w) - fbar(j2, a, w)));
            out = std::max(out, gap - std::abs(mean(j) - mean(j2)));
          }
        }
      }
    }
    return out;
  }
  MetricSpace target_space() const {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> d(grid.size(), std::vector<double>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "m%.6g", mean(grid[i]));
      labels.push_back(buf);
      for (std::size_t j = 0; j < grid.size(); ++j) d[i][j] = std::abs(mean(grid[i]) - mean(grid[j]));
    }
    return MetricSpace(labels, Matrix::from_rows(d));
  }
  ModuliSet closed_form() const {
    ModuliSet m;
    m.cost.assign(T, Modulus::linear(L_lbar, 2.0 * beta));
    m.dynamics.assign(T - 1, Modulus::linear(1.0, 2.0 * gamma_bar() + rounding_slack()));
    return m;
  }
  std::map<std::string, double> notes() const {
    return {{"particles", double(n)},     {"r_bar", r_bar()},
            {"gamma_bar", gamma_bar()},   {"beta", beta},
            {"L_fbar", 1.0},              {"L_lbar", L_lbar},
            {"rounding_slack", rounding_slack()}, {"eta_ceiling", r_bar()}};
  }
};

MeanField read_mean_field(const ScenarioSpec& spec) {
  Params p(spec, {"particles", "grid", "weights", "gamma", "noise_radius", "beta", "L_lbar",
                  "action_cost", "noise", "target", "horizon", "x0", "mc_samples", "seed"});
  MeanField m;
  m.id = p.id();
  m.n = p.integer("particles", 2, 1, 8);
  m.K = p.integer("grid", 4, 2, 16);
  m.k = p.integers("weights", m.n, 1, 1, 64);
  m.gamma = p.integers("gamma", m.n, 1, 0, 8);
  m.r = p.integers("noise_radius", m.n, 1, 0, 8);
  m.beta = p.real("beta", 0.25, 0.0, 1e6);
  m.L_lbar = p.real("L_lbar", 1.0, 0.0, 1e6);
  m.kappa = p.real("action_cost", 0.1, 0.0, 1e6);
  m.q = p.real("noise", 0.3, 0.0, 1.0);
  m.target = p.real("target", double(m.K - 1) / 2.0, 0.0, double(m.K - 1));
  m.T = p.integer("horizon", 3, 1, 8);
  m.x0 = p.integers("x0", m.n, (m.K - 1) / 2, 0, m.K - 1);
  m.mc_samples = p.integer("mc_samples", 2000, 1, 10000000);
  m.seed = p.integer("seed", 0, 0, std::numeric_limits<std::uint32_t>::max());
  m.D = std::accumulate(m.k.begin(), m.k.end(), std::size_t{0});
  m.gmax = *std::max_element(m.gamma.begin(), m.gamma.end());
  if (2 * m.gmax > m.K - 1) p.fail("gamma", "leaves no room on the grid (need 2 max gamma <= grid - 1)");

  for (std::size_t i = 0; i < m.n; ++i) m.num_states *= m.K;
  m.cell_of.assign(m.D * (m.K - 1) + 1, -1);
  std::vector<std::pair<double, std::size_t>> best(m.cell_of.size(), {1e300, 0});
  for (std::size_t s = 0; s < m.num_states; ++s) {
    const auto x = m.decode(s);
    const long sum = m.wsum(x);
    double spread = 0.0;
    for (int v : x) spread = std::max(spread, std::abs(v - m.mean(sum)));
    if (spread < best[sum].first) best[sum] = {spread, s};
    m.cell_of[sum] = 0;
  }
  for (std::size_t j = 0; j < m.cell_of.size(); ++j) {
    if (m.cell_of[j] == 0) {
      m.cell_of[j] = static_cast<long>(m.grid.size());
      m.grid.push_back(long(j));
      m.rep.push_back(best[j].second);
    }
  }
  return m;
}

std::size_t snap(const MeanField& m, long sum) {
  sum = std::clamp(sum, m.grid.front(), m.grid.back());
  auto it = std::lower_bound(m.grid.begin(), m.grid.end(), sum);
  if (*it == sum || it == m.grid.begin()) return std::size_t(it - m.grid.begin());
  auto lo = it - 1;
  return std::size_t((sum - *lo <= *it - sum ? lo : it) - m.grid.begin());
}

Instance mean_field(const ScenarioSpec& spec) {
  const MeanField m = read_mean_field(spec);
  if (m.n > kMeanFieldOracleParticles) {
    throw SizingError("scenario '" + m.id + "': mean_field with more than " +
                          std::to_string(kMeanFieldOracleParticles) +
                          " particles runs in bound-only mode",
                      m.num_states, 0);
  }
  // observation y^i in [-r^i, K-1+r^i], mixed radix
  std::vector<std::size_t> radix(m.n);
  std::size_t ny = 1;
  for (std::size_t i = 0; i < m.n; ++i) ny *= (radix[i] = m.K + 2 * m.r[i]);
  std::vector<std::string> y_labels;
  std::vector<std::size_t> est_map;
  for (std::size_t y = 0; y < ny; ++y) {
    std::size_t rest = y;
    std::vector<long> v(m.n);
    for (std::size_t i = m.n; i-- > 0;) {
      v[i] = long(rest % radix[i]) - long(m.r[i]);
      rest /= radix[i];
    }
    std::string label = "y";
    long sum = 0;
    for (std::size_t i = 0; i < m.n; ++i) {
      label += (i ? "," : "(") + std::to_string(v[i]);
      sum += long(m.k[i]) * v[i];
    }
    y_labels.push_back(label + ")");
    est_map.push_back(snap(m, sum));
  }
  auto emit = [&](const std::vector<int>& x, auto&& add) {
    // independent +-r^i noise per particle
    std::vector<std::pair<std::size_t, double>> acc{{0, 1.0}};
    for (std::size_t i = 0; i < m.n; ++i) {
      std::vector<std::pair<std::size_t, double>> nxt;
      for (const auto& [idx, pr] : acc) {
        for (const auto& [off, po] : symmetric(long(m.r[i]), 1.0)) {
          nxt.emplace_back(idx * radix[i] + std::size_t(x[i] + off + long(m.r[i])), pr * po);
        }
      }
      acc = std::move(nxt);
    }
    for (const auto& [y, pr] : acc) add(y, pr);
  };

  std::vector<std::string> s_labels;
  std::vector<std::vector<double>> d(m.num_states, std::vector<double>(m.num_states));
  for (std::size_t s = 0; s < m.num_states; ++s) {
    const auto x = m.decode(s);
    std::string label = "x";
    for (std::size_t i = 0; i < m.n; ++i) label += (i ? "," : "(") + std::to_string(x[i]);
    s_labels.push_back(label + ")");
    for (std::size_t s2 = 0; s2 < m.num_states; ++s2) {
      const auto x2 = m.decode(s2);
      double l1 = 0.0;
      for (std::size_t i = 0; i < m.n; ++i) l1 += std::abs(x[i] - x2[i]);
      d[s][s2] = l1;
    }
  }
  Builder b(MetricSpace(s_labels, Matrix::from_rows(d)), y_labels, kMoves, m.T);
  std::vector<int> x0(m.x0.begin(), m.x0.end());
  const std::size_t s0 = m.encode(x0);
  emit(x0, [&](std::size_t y, double pr) { b.initial(s0, y) += pr; });
  for (std::size_t k = 0; k + 1 < m.T; ++k) {
    for (std::size_t s = 0; s < m.num_states; ++s) {
      const auto x = m.decode(s);
      for (std::size_t a = 0; a < 3; ++a) {
        for (const auto& [w, pw] : m.noise()) {
          const auto x2 = m.step(x, a, w);
          const std::size_t s2 = m.encode(x2);
          emit(x2, [&](std::size_t y, double pr) { b.next(k, s, a, s2, y) += pw * pr; });
        }
      }
    }
  }
  for (std::size_t k = 0; k < m.T; ++k) {
    for (std::size_t s = 0; s < m.num_states; ++s) {
      for (std::size_t a = 0; a < 3; ++a) b.cost(k, s, a) = m.cost(m.decode(s), a);
    }
  }

  Instance out;
  out.id = m.id;
  out.family = spec.family;
  out.pomdp = b.build();
  std::vector<std::size_t> phi(m.num_states);
  for (std::size_t s = 0; s < m.num_states; ++s) phi[s] = std::size_t(m.cell_of[m.wsum(m.decode(s))]);
  std::vector<Dist> lambda;
  for (std::size_t c = 0; c < m.grid.size(); ++c) lambda.push_back(Dist::point(m.num_states, m.rep[c]));
  out.abstraction = Abstraction(m.num_states, m.target_space(), phi, lambda, lambda);
  out.estimator = Estimator::last_observation(est_map, "weighted-mean-observation");
  out.closed_form = m.closed_form();
  out.notes = m.notes();
  return out;
}

// ---------------------------------------------------------------------------
// random instances

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

std::vector<double> sparse_law(Rng& rng, std::size_t n) {
  std::vector<double> w(n, 0.0);
  double total = 0.0;
  for (auto& v : w) {
    if (rng.chance(0.6)) total += (v = 0.05 + rng.uniform());
  }
  if (total == 0.0) total = w[rng.below(n)] = 1.0;
  for (auto& v : w) v /= total;
  return w;
}

Instance random_from_spec(const ScenarioSpec& spec) {
  Params p(spec, {"seed", "states", "observations", "actions", "horizon", "abstraction", "estimator"});
  RandomSizes sizes;
  sizes.states = p.integer("states", 3, 1, 12);
  sizes.observations = p.integer("observations", 3, 1, 12);
  sizes.actions = p.integer("actions", 2, 1, 6);
  sizes.horizon = p.integer("horizon", 3, 1, 6);
  RandomVariant v;
  try {
    v.abstraction = parse_abstraction_variant(p.text("abstraction", "identity"));
    v.estimator = parse_estimator_variant(p.text("estimator", "map-posterior"));
  } catch (const SpecError& e) {
    p.fail("abstraction/estimator", e.what());
  }
  Instance out = random_instance(p.integer("seed", 0, 0, std::numeric_limits<std::uint32_t>::max()),
                                 sizes, v);
  if (!spec.id.empty()) out.id = spec.id;
  return out;
}

}  // namespace

const char* to_string(Family family) {
  switch (family) {
    case Family::kBoundedNoise: return "bounded_noise";
    case Family::kIntermittent: return "intermittent";
    case Family::kQuantized: return "quantized";
    case Family::kAdaptive: return "adaptive";
    case Family::kEventTriggered: return "event_triggered";
    case Family::kMeanField: return "mean_field";
    case Family::kRandom: return "random";
  }
  return "unknown";
}

Family parse_family(const std::string& name) {
  for (Family f : {Family::kBoundedNoise, Family::kIntermittent, Family::kQuantized, Family::kAdaptive,
                   Family::kEventTriggered, Family::kMeanField, Family::kRandom}) {
    if (name == to_string(f)) return f;
  }
  throw SpecError("unknown scenario family '" + name + "'");
}

const char* to_string(AbstractionVariant v) {
  switch (v) {
    case AbstractionVariant::kIdentity: return "identity";
    case AbstractionVariant::kPartitionDirac: return "partition-dirac";
    case AbstractionVariant::kPartitionUniform: return "partition-uniform";
  }
  return "unknown";
}

const char* to_string(EstimatorVariant v) {
  switch (v) {
    case EstimatorVariant::kObservationMap: return "observation-map";
    case EstimatorVariant::kMapPosterior: return "map-posterior";
    case EstimatorVariant::kPosteriorMeanRepresentative: return "posterior-mean-representative";
    case EstimatorVariant::kHashed: return "hashed";
  }
  return "unknown";
}

AbstractionVariant parse_abstraction_variant(const std::string& name) {
  for (auto v : {AbstractionVariant::kIdentity, AbstractionVariant::kPartitionDirac,
                 AbstractionVariant::kPartitionUniform}) {
    if (name == to_string(v)) return v;
  }
  throw SpecError("unknown abstraction variant '" + name + "'");
}

EstimatorVariant parse_estimator_variant(const std::string& name) {
  for (auto v : {EstimatorVariant::kObservationMap, EstimatorVariant::kMapPosterior,
                 EstimatorVariant::kPosteriorMeanRepresentative, EstimatorVariant::kHashed}) {
    if (name == to_string(v)) return v;
  }
  throw SpecError("unknown estimator variant '" + name + "'");
}

std::vector<RandomVariant> all_random_variants() {
  std::vector<RandomVariant> out;
  for (auto a : {AbstractionVariant::kIdentity, AbstractionVariant::kPartitionDirac,
                 AbstractionVariant::kPartitionUniform}) {
    for (auto e : {EstimatorVariant::kObservationMap, EstimatorVariant::kMapPosterior,
                   EstimatorVariant::kPosteriorMeanRepresentative, EstimatorVariant::kHashed}) {
      out.push_back({a, e});
    }
  }
  return out;
}

Instance random_instance(std::uint64_t seed, const RandomSizes& sizes, const RandomVariant& variant) {
  const std::size_t ns = sizes.states, ny = sizes.observations, na = sizes.actions, T = sizes.horizon;
  if (ns == 0 || ny == 0 || na == 0 || T == 0) throw SpecError("random instance with an empty dimension");
  Rng rng(seed);

  // shortest-path closure of a random connected graph
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(ns, std::vector<double>(ns, inf));
  for (std::size_t i = 0; i < ns; ++i) d[i][i] = 0.0;
  for (std::size_t i = 0; i + 1 < ns; ++i) d[i][i + 1] = d[i + 1][i] = 0.5 + 1.5 * rng.uniform();
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = i + 2; j < ns; ++j) {
      if (rng.chance(0.5)) d[i][j] = d[j][i] = 0.5 + 2.5 * rng.uniform();
    }
  }
  for (std::size_t m = 0; m < ns; ++m) {
    for (std::size_t i = 0; i < ns; ++i) {
      for (std::size_t j = 0; j < ns; ++j) d[i][j] = std::min(d[i][j], d[i][m] + d[m][j]);
    }
  }
  Builder b(MetricSpace(numbered("s", ns), Matrix::from_rows(d)), numbered("y", ny),
            numbered("a", na), T);
  const auto init = sparse_law(rng, ns * ny);
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t y = 0; y < ny; ++y) b.initial(s, y) = init[s * ny + y];
  }
  for (std::size_t k = 0; k + 1 < T; ++k) {
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t a = 0; a < na; ++a) {
        const auto row = sparse_law(rng, ns * ny);
        for (std::size_t j = 0; j < ns * ny; ++j) b.next(k, s, a, j / ny, j % ny) = row[j];
      }
    }
  }
  for (std::size_t k = 0; k < T; ++k) {
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t a = 0; a < na; ++a) b.cost(k, s, a) = rng.uniform();
    }
  }

  Instance out;
  out.id = "random-" + std::to_string(seed) + "-" + to_string(variant.abstraction) + "-" +
           to_string(variant.estimator);
  out.family = Family::kRandom;
  out.pomdp = b.build();

  if (variant.abstraction == AbstractionVariant::kIdentity) {
    out.abstraction = Abstraction::identity(out.pomdp.states());
  } else {
    const std::size_t cells = 1 + rng.below(ns);
    std::vector<std::size_t> order(ns);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = ns; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    std::vector<std::size_t> cell_of(ns);
    for (std::size_t i = 0; i < ns; ++i) cell_of[order[i]] = i < cells ? i : rng.below(cells);
    std::vector<std::vector<std::size_t>> members(cells);
    for (std::size_t s = 0; s < ns; ++s) members[cell_of[s]].push_back(s);
    std::vector<std::size_t> reps(cells);
    for (std::size_t c = 0; c < cells; ++c) reps[c] = members[c][rng.below(members[c].size())];
    out.abstraction = variant.abstraction == AbstractionVariant::kPartitionDirac
                          ? Abstraction::quantization(out.pomdp.states(), cell_of, reps)
                          : Abstraction::quantization_uniform(out.pomdp.states(), cell_of, reps);
  }
  const std::size_t nz = out.abstraction.target_size();
  switch (variant.estimator) {
    case EstimatorVariant::kObservationMap: {
      std::vector<std::size_t> map(ny);
      for (auto& z : map) z = rng.below(nz);
      out.estimator = Estimator::last_observation(map, "observation-map");
      break;
    }
    case EstimatorVariant::kMapPosterior:
      out.estimator = Estimator::map_posterior(out.abstraction);
      break;
    case EstimatorVariant::kPosteriorMeanRepresentative:
      out.estimator = Estimator::posterior_mean_representative(out.abstraction);
      break;
    case EstimatorVariant::kHashed:
      out.estimator = Estimator::hashed(seed ^ 0x5eedULL, nz);
      break;
  }
  return out;
}

Instance generate(const ScenarioSpec& spec) {
  switch (spec.family) {
    case Family::kBoundedNoise: return bounded_noise(spec);
    case Family::kIntermittent: return intermittent(spec);
    case Family::kQuantized: return quantized(spec);
    case Family::kAdaptive: return adaptive(spec);
    case Family::kEventTriggered: return event_triggered(spec);
    case Family::kMeanField: return mean_field(spec);
    case Family::kRandom: return random_from_spec(spec);
  }
  throw SpecError("unknown scenario family");
}

Pomdp fully_observed(const Pomdp& p) {
  const std::size_t ns = p.num_states(), ny = p.num_observations(), na = p.num_actions();
  const std::size_t T = p.horizon();
  Builder b(p.states(), p.states().labels(), p.action_labels(), T);
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t y = 0; y < ny; ++y) b.initial(s, s) += p.initial()[s * ny + y];
  }
  for (std::size_t k = 0; k + 1 < T; ++k) {
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t a = 0; a < na; ++a) {
        const auto row = p.transitions().row(k, s, a);
        for (std::size_t j = 0; j < ns * ny; ++j) b.next(k, s, a, j / ny, j / ny) += row[j];
      }
    }
  }
  for (std::size_t k = 0; k < T; ++k) {
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t a = 0; a < na; ++a) b.cost(k, s, a) = p.costs()(k, s, a);
    }
  }
  return b.build();
}

Pomdp uninformative(const Pomdp& p) {
  const std::size_t ns = p.num_states(), ny = p.num_observations(), na = p.num_actions();
  const std::size_t T = p.horizon();
  Builder b(p.states(), {"none"}, p.action_labels(), T);
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t y = 0; y < ny; ++y) b.initial(s, 0) += p.initial()[s * ny + y];
  }
  for (std::size_t k = 0; k + 1 < T; ++k) {
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t a = 0; a < na; ++a) {
        const auto row = p.transitions().row(k, s, a);
        for (std::size_t j = 0; j < ns * ny; ++j) b.next(k, s, a, j / ny, 0) += row[j];
      }
    }
  }
  for (std::size_t k = 0; k < T; ++k) {
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t a = 0; a < na; ++a) b.cost(k, s, a) = p.costs()(k, s, a);
    }
  }
  return b.build();
}

EventTriggerStats simulate_event_triggered(const Instance& instance, std::size_t trajectories,
                                           std::uint64_t seed) {
  if (instance.family != Family::kEventTriggered || !instance.estimator.recursive_form()) {
    throw StructuralError("simulate_event_triggered needs an event_triggered instance");
  }
  const Pomdp& p = instance.pomdp;
  const RecursiveRule& rule = *instance.estimator.recursive_form();
  const std::size_t nx = static_cast<std::size_t>(instance.notes.at("nx"));
  const double r = instance.notes.at("r");
  const std::size_t E = nx;
  const std::size_t ny = p.num_observations();
  Rng rng(seed);
  auto draw = [&](std::span<const double> row) {
    double u = rng.uniform();
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] > 0.0 && (u -= row[j]) < 0.0) return j;
    }
    for (std::size_t j = row.size(); j-- > 0;) {
      if (row[j] > 0.0) return j;
    }
    return std::size_t{0};
  };

  EventTriggerStats st;
  st.trajectories = trajectories;
  for (std::size_t n = 0; n < trajectories; ++n) {
    std::size_t j = draw(p.initial().mass());
    std::size_t z = 0;
    std::size_t prev_a = 0;
    for (std::size_t k = 0; k < p.horizon(); ++k) {
      const std::size_t s = j / ny, y = j % ny;
      const std::size_t x = s / nx, pred = s % nx;
      if (k > 0 && pred != rule.update[z][prev_a][E]) ++st.recursion_mismatches;
      const bool sent = y != E;
      const bool trigger = std::abs(double(x) - double(pred)) > r;
      if (sent) ++st.transmissions;
      if (sent != trigger) ++st.trigger_mismatches;
      z = k == 0 ? rule.init[y] : rule.update[z][prev_a][y];
      st.max_error = std::max(st.max_error, std::abs(double(x) - double(z)));
      ++st.steps;
      if (k + 1 == p.horizon()) break;
      prev_a = rng.below(p.num_actions());
      j = draw(p.transitions().row(k, s, prev_a));
    }
  }
  return st;
}

bool is_bound_only(const ScenarioSpec& spec) {
  if (spec.family != Family::kMeanField) return false;
  const auto& prm = spec.params;
  return prm.is_object() && prm.contains("particles") && prm.at("particles").is_number() &&
         prm.at("particles").get<double>() > double(kMeanFieldOracleParticles);
}

CouplingCheck mean_field_coupling_check(const ScenarioSpec& spec, std::optional<std::size_t> samples,
                                        std::uint64_t seed) {
  const MeanField m = read_mean_field(spec);
  const MetricSpace target = m.target_space();
  const std::size_t nz = m.grid.size();
  auto law = [&](const std::vector<int>& x, std::size_t a) {
    std::vector<double> out(nz, 0.0);
    for (const auto& [w, pw] : m.noise()) out[std::size_t(m.cell_of[m.wsum(m.step(x, a, w))])] += pw;
    return out;
  };
  auto excess = [&](std::size_t s, std::size_t s2, std::size_t a) {
    const auto x = m.decode(s), x2 = m.decode(s2);
    double coupling = 0.0;
    for (const auto& [w, pw] : m.noise()) {
      coupling += pw * std::abs(m.mean(m.wsum(m.step(x, a, w))) - m.mean(m.wsum(m.step(x2, a, w))));
    }
    return w1(law(x, a), law(x2, a), target) - coupling;
  };
  CouplingCheck out;
  out.worst_excess = -std::numeric_limits<double>::infinity();
  if (!samples) {
    for (std::size_t s = 0; s < m.num_states; ++s) {
      for (std::size_t s2 = s + 1; s2 < m.num_states; ++s2) {
        for (std::size_t a = 0; a < 3; ++a) {
          out.worst_excess = std::max(out.worst_excess, excess(s, s2, a));
          ++out.pairs;
        }
      }
    }
  } else {
    Rng rng(seed);
    for (std::size_t i = 0; i < *samples; ++i) {
      out.worst_excess = std::max(out.worst_excess,
                                  excess(rng.below(m.num_states), rng.below(m.num_states), rng.below(3)));
      ++out.pairs;
    }
  }
  return out;
}

BoundOnlyResult mean_field_bound_only(const ScenarioSpec& spec) {
  const MeanField m = read_mean_field(spec);
  const MetricSpace target = m.target_space();
  const std::size_t nz = m.grid.size();
  const std::size_t T = m.T;
  std::vector<double> kernel((T - 1) * nz * 3 * nz, 0.0);
  std::vector<double> cost(T * nz * 3, 0.0);
  for (std::size_t c = 0; c < nz; ++c) {
    const auto x = m.decode(m.rep[c]);
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t k = 0; k + 1 < T; ++k) {
        for (const auto& [w, pw] : m.noise()) {
          kernel[((k * nz + c) * 3 + a) * nz + std::size_t(m.cell_of[m.wsum(m.step(x, a, w))])] += pw;
        }
      }
      for (std::size_t k = 0; k < T; ++k) cost[(k * nz + c) * 3 + a] = m.cost(x, a);
    }
  }
  const Mdp abstract(target, 3, Kernel(T - 1, nz, 3, nz, kernel, 1e-9), CostTable(T, nz, 3, cost), T);
  const MdpSolution sol = backward_induction(abstract);
  std::vector<double> lip(T);
  for (std::size_t k = 0; k < T; ++k) lip[k] = lipschitz_of(sol.values[k], target);

  BoundOnlyResult out;
  out.core = theorem_bound(std::vector<double>(T, m.r_bar()), m.closed_form(), lip);
  out.notes = m.notes();
  out.notes["bound_only"] = 1.0;

  Rng rng(m.seed);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t n = 0; n < m.mc_samples; ++n) {
    std::vector<int> x(m.x0.begin(), m.x0.end());
    double total = 0.0;
    for (std::size_t k = 0; k < T; ++k) {
      long ysum = 0;
      for (std::size_t i = 0; i < m.n; ++i) {
        const long off = m.r[i] == 0 ? 0 : (rng.chance(0.5) ? -long(m.r[i]) : long(m.r[i]));
        ysum += long(m.k[i]) * (x[i] + off);
      }
      const std::size_t a = sol.policy(k, snap(m, ysum));
      total += m.cost(x, a);
      if (k + 1 == T) break;
      const double u = rng.uniform();
      const int w = u < m.q / 2 ? -1 : (u < m.q ? 1 : 0);
      x = m.step(x, a, w);
    }
    sum += total;
    sum_sq += total * total;
  }
  const double ns = double(m.mc_samples);
  out.samples = m.mc_samples;
  out.mc_value = sum / ns;
  out.mc_stderr = ns > 1 ? std::sqrt(std::max(0.0, sum_sq / ns - out.mc_value * out.mc_value) / (ns - 1)) : 0.0;
  return out;
}

}  // namespace cebound
