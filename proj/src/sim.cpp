#include "mec/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <sstream>

#include "mec/costs.hpp"
#include "mec/rng.hpp"

// RNG substream keys.  Per-device streams use small indices; shared and
// synthetic streams sit in disjoint high ranges so no device count can
// collide with them.
namespace {
constexpr std::uint64_t kSaltPrimary = 0x50;
constexpr std::uint64_t kSaltSynthetic = 0xE0;   // injected secondary pushes
constexpr std::uint64_t kSaltSharedTp = 0xE1;    // shared transmitter services
constexpr std::uint64_t kSaltSharedEs = 0xE5;    // shared edge-server services
constexpr std::uint64_t kSaltSecondaryBase = 0x1000;
constexpr std::uint64_t kSaltExoBase = 0xE000;   // per-device exogenous streams
constexpr std::uint64_t kSaltChainBase = 0xC000; // per-device chain runs
}  // namespace

namespace mec {
namespace {

constexpr int kBatches = 50;
constexpr double kWarmupFraction = 0.05;
// Student-t 0.975 quantile at kBatches-1 degrees of freedom.
constexpr double kT975 = 2.0095752371292397;

// Exact sawtooth integration of the monitor age with batch-means bookkeeping:
// age(t) = t - g_del between resets, integrated piecewise into kBatches equal
// windows after the warm-up truncation.
class AgeTracker {
 public:
  explicit AgeTracker(double horizon)
      : horizon_(horizon),
        warmup_(kWarmupFraction * horizon),
        batch_len_((horizon - warmup_) / kBatches) {}

  // Delivery of a packet generated at `gen`; stale ones are ignored.
  void deliver(double now, double gen) {
    advance(now);
    if (gen > g_del_) {
      g_del_ = gen;
      ++deliveries_;
    }
  }

  // Unconditional age remap (jump processes may move the age up as part of
  // their bookkeeping); only age-improving remaps count as deliveries.
  void reset_age(double now, double new_age) {
    advance(now);
    if (new_age < now - g_del_) ++deliveries_;
    g_del_ = now - new_age;
  }

  void advance(double now) {
    double b = std::min(now, horizon_);
    double a = std::max(last_t_, warmup_);
    while (a < b) {
      const double edge =
          cur_batch_ >= kBatches - 1 ? horizon_ : warmup_ + (cur_batch_ + 1) * batch_len_;
      if (edge <= a) {
        ++cur_batch_;
        continue;
      }
      const double c = std::min(b, edge);
      const double dt = c - a;
      batch_area_[cur_batch_] += (a - g_del_) * dt + 0.5 * dt * dt;
      a = c;
    }
    last_t_ = std::max(last_t_, b);
  }

  std::uint64_t deliveries() const { return deliveries_; }

  DeviceEstimate finalize(std::string label) {
    advance(horizon_);
    DeviceEstimate e;
    e.device = std::move(label);
    e.deliveries = deliveries_;
    double total = 0.0;
    for (double v : batch_area_) total += v;
    e.aoi = total / (horizon_ - warmup_);
    double var = 0.0;
    for (double v : batch_area_) {
      const double d = v / batch_len_ - e.aoi;
      var += d * d;
    }
    const double sem = std::sqrt(var / (kBatches - 1)) / std::sqrt(double(kBatches));
    e.ci95 = kT975 * sem;
    e.ci3sigma = 3.0 * sem;
    return e;
  }

 private:
  double horizon_, warmup_, batch_len_;
  double batch_area_[kBatches] = {};
  int cur_batch_ = 0;
  double g_del_ = 0.0;   // generation time of the freshest delivered packet
  double last_t_ = 0.0;
  std::uint64_t deliveries_ = 0;
};

// ------------------------------------------------------------ physical DES

constexpr int kSynthetic = -1;  // owner of injected interference packets

struct Pkt {
  int owner = kSynthetic;  // tracker index, or kSynthetic
  double gen = 0.0;
  bool priority = false;
};

enum class Role { kLocal, kTransmit, kTransmitShared, kEdge };

struct Server {
  double rate = 0.0;
  SplitMix64* stream = nullptr;
  Role role = Role::kLocal;
  int device = -1;  // tracker index (kLocal) / owning device (kTransmit)
  std::optional<Pkt> content;
  std::uint64_t token = 0;
  double changed_at = 0.0;
  double busy = 0.0;           // total occupied time
  double busy_priority = 0.0;  // occupied by a priority packet
};

enum class EvKind { kArrive, kExo, kSynth, kComplete };

struct Ev {
  double t = 0.0;
  int cls = 0;  // 0 = arrival-like, 1 = completion (ties break arrivals first)
  std::uint64_t seq = 0;
  EvKind kind = EvKind::kArrive;
  int arg = 0;  // device (arrivals) or server (completions)
  std::uint64_t token = 0;
};

struct EvAfter {
  bool operator()(const Ev& a, const Ev& b) const {
    if (a.t != b.t) return a.t > b.t;
    if (a.cls != b.cls) return a.cls > b.cls;
    return a.seq > b.seq;
  }
};

// One event-driven run over a fixed server graph.  The caller wires servers,
// trackers and arrival processes for the topology, then drains the queue.
class Engine {
 public:
  explicit Engine(double horizon, std::uint64_t master_seed)
      : horizon_(horizon), master_(master_seed) {}

  SplitMix64* stream(std::uint64_t salt) {
    streams_.emplace_back(derive_seed(master_, salt));
    return &streams_.back();
  }

  int add_server(double rate, SplitMix64* s, Role role, int device = -1) {
    servers_.push_back(Server{rate, s, role, device, {}, 0, 0.0, 0.0, 0.0});
    return static_cast<int>(servers_.size()) - 1;
  }

  int add_tracker() {
    trackers_.emplace_back(horizon_);
    return static_cast<int>(trackers_.size()) - 1;
  }

  // Arrival process of one device: rate, routing probability, local and
  // transmit targets.  transmit_priority marks the priority device; a
  // negative transmit server means "push to the shared transmitter".
  struct ArrivalProc {
    double rate = 0.0;
    double p_local = 0.0;
    int tracker = -1;
    int local_server = -1;
    int transmit_server = -1;  // -1: shared transmitter push
    bool priority = false;
    SplitMix64* stream = nullptr;
  };

  void add_arrivals(const ArrivalProc& a) {
    arrivals_.push_back(a);
    const int idx = static_cast<int>(arrivals_.size()) - 1;
    schedule_in(a.stream->exponential(a.rate), EvKind::kArrive, idx);
  }

  void add_exogenous(double rate, int edge_server, SplitMix64* s) {
    exo_.push_back({rate, edge_server, s});
    const int idx = static_cast<int>(exo_.size()) - 1;
    schedule_in(exo_[idx].rate > 0 ? s->exponential(rate) : -1.0, EvKind::kExo,
                idx);
  }

  void add_synthetic_pushes(double rate, SplitMix64* s) {
    synth_rate_ = rate;
    synth_stream_ = s;
    if (rate > 0) schedule_in(s->exponential(rate), EvKind::kSynth, 0);
  }

  void set_shared(int tp_server, int edge_server) {
    shared_tp_ = tp_server;
    edge_ = edge_server;
  }
  void set_edge(int edge_server) { edge_ = edge_server; }

  void run() {
    while (!pq_.empty()) {
      const Ev ev = pq_.top();
      if (ev.t > horizon_) break;
      pq_.pop();
      t_ = ev.t;
      switch (ev.kind) {
        case EvKind::kArrive: on_arrival(ev.arg); break;
        case EvKind::kExo: on_exogenous(ev.arg); break;
        case EvKind::kSynth: on_synthetic(); break;
        case EvKind::kComplete: on_complete(ev.arg, ev.token); break;
      }
    }
    t_ = horizon_;
    for (Server& s : servers_) settle(s);
  }

  AgeTracker& tracker(int i) { return trackers_[i]; }
  const Server& server(int i) const { return servers_[i]; }
  double horizon() const { return horizon_; }

 private:
  struct ExoProc {
    double rate;
    int edge_server;
    SplitMix64* stream;
  };

  void schedule_in(double dt, EvKind kind, int arg, std::uint64_t token = 0) {
    if (!(dt >= 0.0) || !std::isfinite(dt)) return;  // rate-0 process
    pq_.push(Ev{t_ + dt, kind == EvKind::kComplete ? 1 : 0, ++seq_, kind, arg,
                token});
  }

  void settle(Server& s) {
    const double dt = t_ - s.changed_at;
    if (s.content) {
      s.busy += dt;
      if (s.content->priority) s.busy_priority += dt;
    }
    s.changed_at = t_;
  }

  void occupy(int server, const Pkt& pkt) {
    Server& s = servers_[server];
    settle(s);
    s.content = pkt;
    ++s.token;
    schedule_in(s.stream->exponential(s.rate), EvKind::kComplete, server,
                s.token);
  }

  bool shared_tp_holds_priority() const {
    const Server& s = servers_[shared_tp_];
    return s.content && s.content->priority;
  }

  void on_arrival(int idx) {
    const ArrivalProc& a = arrivals_[idx];
    const bool local = a.stream->uniform01() < a.p_local;
    if (local) {
      occupy(a.local_server, Pkt{a.tracker, t_, false});
    } else if (a.transmit_server >= 0) {
      occupy(a.transmit_server, Pkt{a.tracker, t_, a.priority});
    } else if (a.priority || !shared_tp_holds_priority()) {
      occupy(shared_tp_, Pkt{a.tracker, t_, a.priority});
    }  // else: secondary push dropped while a priority packet is in service
    schedule_in(a.stream->exponential(a.rate), EvKind::kArrive, idx);
  }

  void on_exogenous(int idx) {
    const ExoProc& x = exo_[idx];
    occupy(x.edge_server, Pkt{kSynthetic, t_, false});
    schedule_in(x.stream->exponential(x.rate), EvKind::kExo, idx);
  }

  void on_synthetic() {
    if (!shared_tp_holds_priority())
      occupy(shared_tp_, Pkt{kSynthetic, t_, false});
    schedule_in(synth_stream_->exponential(synth_rate_), EvKind::kSynth, 0);
  }

  void on_complete(int server, std::uint64_t token) {
    Server& s = servers_[server];
    if (!s.content || token != s.token) return;  // preempted: stale event
    const Pkt pkt = *s.content;
    settle(s);
    s.content.reset();
    switch (s.role) {
      case Role::kLocal:
        if (pkt.owner >= 0) trackers_[pkt.owner].deliver(t_, pkt.gen);
        break;
      case Role::kTransmit:
        occupy(device_edge_[s.device], pkt);
        break;
      case Role::kTransmitShared: {
        const Server& es = servers_[edge_];
        // A finished secondary packet is turned away while a priority packet
        // is in service at the edge; a priority packet preempts anything.
        if (pkt.priority || !(es.content && es.content->priority))
          occupy(edge_, pkt);
        break;
      }
      case Role::kEdge:
        if (pkt.owner >= 0) trackers_[pkt.owner].deliver(t_, pkt.gen);
        break;
    }
  }

 public:
  // device index -> its edge server (private mirror or the shared one).
  std::vector<int> device_edge_;

 private:
  double horizon_;
  std::uint64_t master_;
  double t_ = 0.0;
  std::uint64_t seq_ = 0;
  std::deque<SplitMix64> streams_;  // stable addresses
  std::vector<Server> servers_;
  std::vector<AgeTracker> trackers_;
  std::vector<ArrivalProc> arrivals_;
  std::vector<ExoProc> exo_;
  double synth_rate_ = 0.0;
  SplitMix64* synth_stream_ = nullptr;
  int shared_tp_ = -1;
  int edge_ = -1;
  std::priority_queue<Ev, std::vector<Ev>, EvAfter> pq_;
};

double frac(double busy, double horizon) { return busy / horizon; }

[[noreturn]] void throw_degenerate(const std::string& device) {
  throw DegenerateSimulation("device " + device +
                             " delivered no packets over the horizon; "
                             "increase the horizon or check the rates");
}

DeviceEstimate finalize_device(Engine& eng, int tracker,
                               const std::string& label) {
  if (eng.tracker(tracker).deliveries() == 0) throw_degenerate(label);
  return eng.tracker(tracker).finalize(label);
}

// --------------------------------------------------------- topology runners

SimEstimate run_equitable(const NetworkSpec& spec) {
  const bool full = spec.topology == Topology::kEquitableFull;
  const int n = static_cast<int>(spec.equitable.size());
  Engine eng(spec.horizon, spec.seed);

  int shared_edge = -1;
  if (full)
    shared_edge = eng.add_server(spec.equitable.front().mu3,
                                 eng.stream(kSaltSharedEs), Role::kEdge);

  std::vector<int> t_srv(n), l_srv(n);
  eng.device_edge_.resize(n);
  for (int i = 0; i < n; ++i) {
    const EquitableRates& r = spec.equitable[i];
    SplitMix64* dev = eng.stream(static_cast<std::uint64_t>(i));
    const int tr = eng.add_tracker();
    t_srv[i] = eng.add_server(r.mu1, dev, Role::kTransmit, i);
    l_srv[i] = eng.add_server(r.mu2, dev, Role::kLocal, i);
    eng.device_edge_[i] =
        full ? shared_edge : eng.add_server(r.mu3, dev, Role::kEdge);
    eng.add_arrivals({r.lambda, r.p, tr, l_srv[i], t_srv[i], false, dev});
    if (!full && r.lambda_e > 0)
      eng.add_exogenous(r.lambda_e, eng.device_edge_[i],
                        eng.stream(kSaltExoBase + static_cast<std::uint64_t>(i)));
  }

  eng.run();

  SimEstimate out;
  out.seed = spec.seed;
  for (int i = 0; i < n; ++i) {
    const EquitableRates& r = spec.equitable[i];
    std::ostringstream name;
    name << "equitable[" << i << "]";
    DeviceEstimate e = finalize_device(eng, i, name.str());
    e.busy.push_back({name.str() + ".T",
                      frac(eng.server(t_srv[i]).busy, spec.horizon),
                      busy_transmit(r.lambda, r.p, r.mu1)});
    e.busy.push_back({name.str() + ".L",
                      frac(eng.server(l_srv[i]).busy, spec.horizon),
                      busy_local(r.lambda, r.p, r.mu2)});
    out.devices.push_back(std::move(e));
  }
  return out;
}

// Simulated occupancy of a secondary device's local processor, driven by the
// same event stream as the jump process (row layout per state is fixed:
// lp, lq, le, lP, m1, m2, m3).
struct LocalOccupancy {
  double busy = 0.0, since = 0.0;
  bool occupied = false;
  void on_row(int row, double t) {
    const int cls = row % 7;
    if (cls == 0 && !occupied) {
      since = t;
      occupied = true;
    } else if (cls == 5 && occupied) {
      busy += t - since;
      occupied = false;
    }
  }
  double fraction(double horizon) {
    if (occupied) {
      busy += horizon - since;
      since = horizon;
    }
    return busy / horizon;
  }
};

SimEstimate run_priority(const NetworkSpec& spec) {
  const bool full = spec.topology == Topology::kPriorityFull;
  const PrimaryRates& pr = *spec.primary;
  const int ns = static_cast<int>(spec.secondary.size());

  Engine eng(spec.horizon, spec.seed);
  const int edge =
      eng.add_server(pr.mu3, eng.stream(kSaltSharedEs), Role::kEdge);
  const int tp = eng.add_server(pr.mu1P, eng.stream(kSaltSharedTp),
                                Role::kTransmitShared);
  eng.set_shared(tp, edge);

  SplitMix64* pri = eng.stream(kSaltPrimary);
  const int pri_tracker = eng.add_tracker();
  const int lp_srv = eng.add_server(pr.mu2P, pri, Role::kLocal, pri_tracker);
  eng.add_arrivals({pr.lambda_P, pr.p_P, pri_tracker, lp_srv, -1, true, pri});

  // Aggregate secondary push rate at the shared transmitter; in the faithful
  // variant it is injected as one synthetic Poisson stream (it cannot touch
  // the priority device's age, only the busy split).
  double lambda_s = 0.0;
  for (const SecondaryRates& r : spec.secondary)
    lambda_s += r.lambda * (1.0 - r.p);

  std::vector<int> sec_l(ns, -1);
  if (full) {
    for (int i = 0; i < ns; ++i) {
      const SecondaryRates& r = spec.secondary[i];
      SplitMix64* dev =
          eng.stream(kSaltSecondaryBase + static_cast<std::uint64_t>(i));
      const int tr = eng.add_tracker();
      sec_l[i] = eng.add_server(r.mu2, dev, Role::kLocal, tr);
      eng.add_arrivals({r.lambda, r.p, tr, sec_l[i], -1, false, dev});
    }
  } else if (lambda_s > 0) {
    eng.add_synthetic_pushes(lambda_s, eng.stream(kSaltSynthetic));
  }

  eng.run();

  SimEstimate out;
  out.seed = spec.seed;
  DeviceEstimate pe = finalize_device(eng, pri_tracker, "primary");
  const Server& tps = eng.server(tp);
  pe.busy.push_back({"primary.T_P:priority",
                     frac(tps.busy_priority, spec.horizon),
                     busy_tp_priority(pr.lambda_P, pr.p_P, pr.mu1P)});
  pe.busy.push_back(
      {"primary.T_P:secondary",
       frac(tps.busy - tps.busy_priority, spec.horizon),
       busy_tp_secondary(lambda_s, pr.lambda_P, pr.p_P, pr.mu1P)});
  pe.busy.push_back({"primary.L_P", frac(eng.server(lp_srv).busy, spec.horizon),
                     busy_local(pr.lambda_P, pr.p_P, pr.mu2P)});
  out.devices.push_back(std::move(pe));

  for (int i = 0; i < ns; ++i) {
    const SecondaryRates& r = spec.secondary[i];
    std::ostringstream name;
    name << "secondary[" << i << "]";
    DeviceEstimate e;
    double l_frac = 0.0;
    if (full) {
      e = finalize_device(eng, 1 + i, name.str());
      l_frac = frac(eng.server(sec_l[i]).busy, spec.horizon);
    } else {
      LocalOccupancy occ;
      e = chain_simulate(
          build_secondary_model(r), spec.horizon,
          derive_seed(spec.seed, kSaltChainBase + static_cast<std::uint64_t>(i)),
          [&occ](int row, double t) { occ.on_row(row, t); });
      if (e.deliveries == 0) throw_degenerate(name.str());
      e.device = name.str();
      l_frac = occ.fraction(spec.horizon);
    }
    e.busy.push_back({name.str() + ".L", l_frac,
                      busy_local(r.lambda, r.p, r.mu2)});
    out.devices.push_back(std::move(e));
  }
  return out;
}

}  // namespace

std::string to_string(Topology t) {
  switch (t) {
    case Topology::kEquitableFull: return "equitable-full";
    case Topology::kEquitableFaithful: return "equitable-faithful";
    case Topology::kPriorityFull: return "priority-full";
    case Topology::kPriorityFaithful: return "priority-faithful";
  }
  throw std::invalid_argument("unknown topology tag");
}

Topology topology_from_string(const std::string& s) {
  if (s == "equitable-full") return Topology::kEquitableFull;
  if (s == "equitable-faithful") return Topology::kEquitableFaithful;
  if (s == "priority-full") return Topology::kPriorityFull;
  if (s == "priority-faithful") return Topology::kPriorityFaithful;
  throw std::invalid_argument(
      "NetworkSpec.topology: unknown tag '" + s +
      "' (expected equitable-full, equitable-faithful, priority-full or "
      "priority-faithful)");
}

void NetworkSpec::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("NetworkSpec.horizon must be finite and > 0");
  const bool equitable_topo = topology == Topology::kEquitableFull ||
                              topology == Topology::kEquitableFaithful;
  if (equitable_topo) {
    if (equitable.empty())
      throw std::invalid_argument(
          "NetworkSpec.equitable must list at least one device");
    if (primary || !secondary.empty())
      throw std::invalid_argument(
          "NetworkSpec: equitable topologies take no priority devices");
    for (const EquitableRates& r : equitable) r.validate();
    if (topology == Topology::kEquitableFull) {
      const double mu3 = equitable.front().mu3;
      for (const EquitableRates& r : equitable) {
        if (r.lambda_e != 0.0)
          throw std::invalid_argument(
              "NetworkSpec.equitable.lambda_e must be 0 in the full topology "
              "(interference is derived from cross-traffic)");
        if (std::abs(r.mu3 - mu3) > 1e-12 * mu3)
          throw std::invalid_argument(
              "NetworkSpec.equitable.mu3 must agree across devices (one "
              "shared edge server)");
      }
    }
  } else {
    if (!primary)
      throw std::invalid_argument(
          "NetworkSpec.primary is required for priority topologies");
    if (!equitable.empty())
      throw std::invalid_argument(
          "NetworkSpec: priority topologies take no equitable devices");
    primary->validate();
    for (const SecondaryRates& r : secondary) {
      r.validate();
      if (topology == Topology::kPriorityFull) {
        if (r.lambda_e != 0.0 || r.lambda_P_bar != 0.0)
          throw std::invalid_argument(
              "NetworkSpec.secondary lambda_e/lambda_P_bar must be 0 in the "
              "full topology (interference is derived from cross-traffic)");
        if (std::abs(r.mu1 - primary->mu1P) > 1e-12 * primary->mu1P)
          throw std::invalid_argument(
              "NetworkSpec.secondary.mu1 must equal primary.mu1P (one shared "
              "transmitter)");
        if (std::abs(r.mu3 - primary->mu3) > 1e-12 * primary->mu3)
          throw std::invalid_argument(
              "NetworkSpec.secondary.mu3 must equal primary.mu3 (one shared "
              "edge server)");
      }
    }
  }
}

SimEstimate simulate(const NetworkSpec& spec) {
  spec.validate();
  if (spec.topology == Topology::kEquitableFull ||
      spec.topology == Topology::kEquitableFaithful)
    return run_equitable(spec);
  return run_priority(spec);
}

std::vector<BusyFraction> busy_fraction_check(const NetworkSpec& spec) {
  const SimEstimate est = simulate(spec);
  std::vector<BusyFraction> out;
  for (const DeviceEstimate& d : est.devices)
    out.insert(out.end(), d.busy.begin(), d.busy.end());
  return out;
}

DeviceEstimate chain_simulate(
    const ShsModel& m, double horizon, std::uint64_t seed,
    const std::function<void(int row, double t)>& on_row) {
  m.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("chain_simulate: horizon must be finite and > 0");

  // Per-state outgoing rows and their total rate (self-loops are real
  // events here: they remap the age vector).
  const int n = m.n_states();
  std::vector<std::vector<int>> rows(n);
  std::vector<double> total(n, 0.0);
  for (int i = 0; i < static_cast<int>(m.transitions.size()); ++i) {
    const Transition& t = m.transitions[i];
    if (t.rate <= 0.0) continue;
    rows[t.from].push_back(i);
    total[t.from] += t.rate;
  }

  const int w = m.width();
  int state = recurrent_class(m).front();
  std::vector<double> x(w, 0.0), nx(w, 0.0);
  SplitMix64 rng(seed);
  AgeTracker tracker(horizon);
  double t = 0.0;

  while (true) {
    const double dt = rng.exponential(total[state]);
    if (!(t + dt <= horizon)) break;
    t += dt;
    // pick a row with probability proportional to its rate
    double u = rng.uniform01() * total[state];
    int row = rows[state].back();
    for (int r : rows[state]) {
      u -= m.transitions[r].rate;
      if (u <= 0.0) {
        row = r;
        break;
      }
    }
    const Transition& tr = m.transitions[row];
    // grow, then remap through the reset columns
    for (int k = 0; k < w; ++k) x[k] += m.growth[state][k] ? dt : 0.0;
    for (int k = 0; k < w; ++k)
      nx[k] = tr.reset[k] == kZeroSlot ? 0.0 : x[tr.reset[k]];
    std::swap(x, nx);
    state = tr.to;
    tracker.reset_age(t, x[0]);
    if (on_row) on_row(row, t);
  }

  return tracker.finalize("");
}

}  // namespace mec
