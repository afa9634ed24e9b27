#include "mec/shs.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mec {
namespace {

// Strongly connected components of the positive-rate jump graph (Tarjan,
// iterative is overkill at n <= 10 states; plain recursion is fine).
struct SccFinder {
  const std::vector<std::vector<int>>& adj;
  std::vector<int> index, low, comp;
  std::vector<int> stack;
  std::vector<bool> on_stack;
  int counter = 0, n_comps = 0;

  explicit SccFinder(const std::vector<std::vector<int>>& a)
      : adj(a),
        index(a.size(), -1),
        low(a.size(), 0),
        comp(a.size(), -1),
        on_stack(a.size(), false) {}

  void dfs(int u) {
    index[u] = low[u] = counter++;
    stack.push_back(u);
    on_stack[u] = true;
    for (int w : adj[u]) {
      if (index[w] < 0) {
        dfs(w);
        low[u] = std::min(low[u], low[w]);
      } else if (on_stack[w]) {
        low[u] = std::min(low[u], index[w]);
      }
    }
    if (low[u] == index[u]) {
      for (;;) {
        int w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = n_comps;
        if (w == u) break;
      }
      ++n_comps;
    }
  }
};

void check_conditioning(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu,
                        const Eigen::MatrixXd& a, const char* what) {
  const double rcond = lu.rcond();
  if (!(rcond > 1e-12)) {
    std::ostringstream os;
    os << what << " system is singular or ill-conditioned (rcond ~ " << rcond
       << ", n = " << a.rows() << "); the model is not ergodic";
    throw std::runtime_error(os.str());
  }
}

}  // namespace

// Transient states carry zero stationary mass, so both linear systems are
// solved on the closed class only; a model with several closed classes has
// no unique steady state and is rejected.
std::vector<int> recurrent_class(const ShsModel& m) {
  const int n = m.n_states();
  std::vector<std::vector<int>> adj(n);
  for (const Transition& t : m.transitions)
    if (t.rate > 0.0 && t.to != t.from) adj[t.from].push_back(t.to);

  SccFinder scc(adj);
  for (int s = 0; s < n; ++s)
    if (scc.index[s] < 0) scc.dfs(s);

  std::vector<bool> closed(scc.n_comps, true);
  for (int s = 0; s < n; ++s)
    for (int w : adj[s])
      if (scc.comp[w] != scc.comp[s]) closed[scc.comp[s]] = false;

  int chosen = -1, n_closed = 0;
  for (int c = 0; c < scc.n_comps; ++c)
    if (closed[c]) {
      ++n_closed;
      chosen = c;
    }
  if (n_closed != 1) {
    std::ostringstream os;
    os << "model is not ergodic: " << n_closed
       << " closed communicating classes (need exactly 1)";
    throw std::runtime_error(os.str());
  }

  std::vector<int> states;
  for (int s = 0; s < n; ++s)
    if (scc.comp[s] == chosen) states.push_back(s);
  return states;
}

void ShsModel::validate() const {
  const int n = n_states();
  const int w = width();
  if (n <= 0) throw std::invalid_argument("ShsModel.states must be non-empty");
  if (static_cast<int>(growth.size()) != n)
    throw std::invalid_argument("ShsModel.growth must have one row per state");
  for (int s = 0; s < n; ++s) {
    if (static_cast<int>(growth[s].size()) != w)
      throw std::invalid_argument("ShsModel.growth rows must have width n_servers+1");
    for (int g : growth[s])
      if (g != 0 && g != 1)
        throw std::invalid_argument("ShsModel.growth entries must be 0 or 1");
    if (growth[s][0] != 1)
      throw std::invalid_argument(
          "ShsModel.growth: monitor age (slot 0) must grow in every state");
  }
  std::vector<bool> has_out(n, false);
  for (const Transition& t : transitions) {
    if (t.from < 0 || t.from >= n || t.to < 0 || t.to >= n)
      throw std::invalid_argument("ShsModel.transitions: state index out of range");
    if (!(t.rate >= 0.0) || !std::isfinite(t.rate))
      throw std::invalid_argument("ShsModel.transitions: rate must be finite and >= 0");
    if (static_cast<int>(t.reset.size()) != w)
      throw std::invalid_argument("ShsModel.transitions: reset map width mismatch");
    for (int c : t.reset)
      if (c != kZeroSlot && (c < 0 || c >= w))
        throw std::invalid_argument("ShsModel.transitions: reset slot out of range");
    has_out[t.from] = true;
  }
  for (int s = 0; s < n; ++s)
    if (!has_out[s]) {
      std::ostringstream os;
      os << "ShsModel: state " << s << " (" << states[s]
         << ") has no outgoing transition";
      throw std::invalid_argument(os.str());
    }
}

std::vector<std::vector<double>> reset_matrix(const ShsModel& m,
                                              const Transition& t) {
  const int w = m.width();
  std::vector<std::vector<double>> a(w, std::vector<double>(w, 0.0));
  for (int k = 0; k < w; ++k)
    if (t.reset[k] != kZeroSlot) a[t.reset[k]][k] = 1.0;
  return a;
}

SteadyState solve_steady_state(const ShsModel& m) {
  m.validate();
  const std::vector<int> rec = recurrent_class(m);
  const int n = static_cast<int>(rec.size());
  std::vector<int> pos(m.n_states(), -1);
  for (int k = 0; k < n; ++k) pos[rec[k]] = k;

  // Generator restricted to the closed class; self-loops cancel out of the
  // balance equations, so only cross-state rates enter Q.
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (const Transition& t : m.transitions) {
    if (t.rate <= 0.0 || t.to == t.from) continue;
    const int i = pos[t.from];
    if (i < 0) continue;  // transient source: irrelevant in steady state
    q(i, pos[t.to]) += t.rate;
    q(i, i) -= t.rate;
  }

  // pi Q = 0 with the last balance row traded for normalization.
  Eigen::MatrixXd a = q.transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  check_conditioning(lu, a, "steady-state");
  Eigen::VectorXd x = lu.solve(b);

  const double resid = (q.transpose() * x).cwiseAbs().maxCoeff();
  if (!(resid <= 1e-10)) {
    std::ostringstream os;
    os << "steady-state balance residual " << resid << " exceeds 1e-10";
    throw std::runtime_error(os.str());
  }

  SteadyState out;
  out.pi.assign(m.n_states(), 0.0);
  for (int k = 0; k < n; ++k) {
    double v = x(k);
    if (v < 0.0) {
      if (v < -1e-10)
        throw std::runtime_error("steady-state solve produced a negative probability");
      v = 0.0;  // round-off from the solve, not a modeling problem
    }
    out.pi[rec[k]] = v;
  }
  return out;
}

CorrelationVector solve_correlation(const ShsModel& m, const SteadyState& pi) {
  m.validate();
  if (static_cast<int>(pi.pi.size()) != m.n_states())
    throw std::invalid_argument("solve_correlation: steady state size mismatch");
  const std::vector<int> rec = recurrent_class(m);
  const int n = static_cast<int>(rec.size());
  const int w = m.width();
  std::vector<int> pos(m.n_states(), -1);
  for (int k = 0; k < n; ++k) pos[rec[k]] = k;

  // Unknowns: v[s][k] for recurrent s, stacked as n blocks of width w.
  // Row (s,k):  (total outflow of s) * v[s][k]
  //             - sum over inbound transitions t of rate * v[src][reset[k]]
  //           = growth[s][k] * pi[s].
  // Self-loops do not cancel here: a self-loop still remaps the age vector.
  std::vector<double> outflow(m.n_states(), 0.0);
  for (const Transition& t : m.transitions) outflow[t.from] += t.rate;

  const int dim = n * w;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
  for (int k2 = 0; k2 < n; ++k2) {
    const int s = rec[k2];
    for (int k = 0; k < w; ++k) {
      a(k2 * w + k, k2 * w + k) += outflow[s];
      b(k2 * w + k) = m.growth[s][k] * pi.pi[s];
    }
  }
  for (const Transition& t : m.transitions) {
    if (t.rate <= 0.0) continue;
    const int src = pos[t.from], dst = pos[t.to];
    if (src < 0 || dst < 0) continue;
    for (int k = 0; k < w; ++k)
      if (t.reset[k] != kZeroSlot)
        a(dst * w + k, src * w + t.reset[k]) -= t.rate;
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  check_conditioning(lu, a, "correlation");
  Eigen::VectorXd x = lu.solve(b);

  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  const double resid = (a * x - b).cwiseAbs().maxCoeff();
  if (!(resid <= 1e-10 * scale)) {
    std::ostringstream os;
    os << "correlation residual " << resid << " exceeds 1e-10";
    throw std::runtime_error(os.str());
  }

  CorrelationVector out;
  out.v.assign(m.n_states(), std::vector<double>(w, 0.0));
  for (int k2 = 0; k2 < n; ++k2)
    for (int k = 0; k < w; ++k) {
      double v = x(k2 * w + k);
      if (!std::isfinite(v))
        throw std::runtime_error("correlation solve produced a non-finite entry");
      if (v < -1e-9)
        throw std::runtime_error(
            "correlation solve produced a negative entry; the age process "
            "has no stationary solution for these rates");
      out.v[rec[k2]][k] = std::max(v, 0.0);
    }
  return out;
}

double average_aoi(const ShsModel& m) {
  const SteadyState pi = solve_steady_state(m);
  const CorrelationVector v = solve_correlation(m, pi);
  double delta = 0.0;
  for (const auto& row : v.v) delta += row[0];
  if (!std::isfinite(delta) || delta <= 0.0 || delta > 1e9) {
    std::ostringstream os;
    os << "average age " << delta << " is outside the credible range";
    throw std::runtime_error(os.str());
  }
  return delta;
}

}  // namespace mec
