#include "sentinel/topology.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace sentinel {

namespace {

const char* grouping_name(const Grouping& g) {
  switch (g.kind) {
    case GroupingKind::Shuffle: return "shuffle";
    case GroupingKind::All: return "all";
    case GroupingKind::Key: return "key";
  }
  return "?";
}

bool is_flush(const ContentEvent& ev) {
  const auto* c = ev.get_if<ControlPayload>();
  return c != nullptr && c->kind == ControlPayload::Kind::Flush;
}

}  // namespace

std::uint64_t stable_hash64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

std::string key_bytes(std::uint64_t v) {
  std::string out(8, '\0');
  for (int i = 0; i < 8; ++i) out[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  return out;
}

std::vector<std::uint32_t> route(const ContentEvent& ev, const Grouping& grouping,
                                 std::uint32_t parallelism, std::uint64_t& round_robin_cursor) {
  if (parallelism == 0) throw std::invalid_argument("route: parallelism must be >= 1");
  switch (grouping.kind) {
    case GroupingKind::Shuffle: {
      std::uint32_t idx = static_cast<std::uint32_t>(round_robin_cursor % parallelism);
      ++round_robin_cursor;
      return {idx};
    }
    case GroupingKind::All: {
      std::vector<std::uint32_t> all(parallelism);
      for (std::uint32_t i = 0; i < parallelism; ++i) all[i] = i;
      return all;
    }
    case GroupingKind::Key: {
      if (!ev.key) throw TopologyError("key grouping: event carries no routing key");
      return {static_cast<std::uint32_t>(stable_hash64(*ev.key) % parallelism)};
    }
  }
  throw std::logic_error("route: unknown grouping");
}

std::string format_trace(const DeliveryTrace& t) {
  std::ostringstream os;
  os << t.stream << ' ' << t.src_pi << '[' << t.src_index << "] -> " << t.dst_pi << '['
     << t.dst_index << "] seq=" << t.seq << ' ' << to_string(t.kind);
  if (t.key) os << " key=" << stable_hash64(*t.key);
  return os.str();
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Document: return "document";
    case EventKind::Instance: return "instance";
    case EventKind::Attribute: return "attribute";
    case EventKind::Compute: return "compute";
    case EventKind::LocalResult: return "local-result";
    case EventKind::Prediction: return "prediction";
    case EventKind::SketchSnapshot: return "sketch-snapshot";
    case EventKind::Bytes: return "bytes";
    case EventKind::Control: return "control";
  }
  return "?";
}

EventKind ContentEvent::kind() const {
  struct Visitor {
    EventKind operator()(const DocumentPayload&) const { return EventKind::Document; }
    EventKind operator()(const InstancePayload&) const { return EventKind::Instance; }
    EventKind operator()(const AttributePayload&) const { return EventKind::Attribute; }
    EventKind operator()(const ComputePayload&) const { return EventKind::Compute; }
    EventKind operator()(const LocalResultPayload&) const { return EventKind::LocalResult; }
    EventKind operator()(const PredictionPayload&) const { return EventKind::Prediction; }
    EventKind operator()(const SketchSnapshotPayload&) const { return EventKind::SketchSnapshot; }
    EventKind operator()(const BytesPayload&) const { return EventKind::Bytes; }
    EventKind operator()(const ControlPayload&) const { return EventKind::Control; }
  };
  return std::visit(Visitor{}, payload);
}

// ---------------------------------------------------------------------------
// Runtime structures
// ---------------------------------------------------------------------------

namespace {

struct Delivery {
  ContentEvent ev;
  std::uint32_t src_instance = 0;   // global instance index of the sender
  const StreamSpec* stream = nullptr;
};

/// MPSC inbox. Bounded pushes are used for spout intake (try) and
/// bolt-to-bolt backpressure (blocking); feedback and control pushes bypass
/// the capacity so a cycle can never block on itself.
class Inbox {
 public:
  void configure(std::size_t capacity_or_zero) { cap_ = capacity_or_zero; }

  bool try_push(Delivery d) {
    std::lock_guard<std::mutex> lk(m_);
    if (closed_) return true;  // post-flush delivery: discard silently
    if (cap_ != 0 && q_.size() >= cap_) return false;
    q_.push_back(std::move(d));
    not_empty_.notify_one();
    return true;
  }

  void push_unbounded(Delivery d) {
    std::lock_guard<std::mutex> lk(m_);
    if (closed_) return;
    q_.push_back(std::move(d));
    not_empty_.notify_one();
  }

  bool push_blocking(Delivery d, const std::atomic<bool>& stop) {
    std::unique_lock<std::mutex> lk(m_);
    not_full_.wait(lk, [&] { return closed_ || stop.load() || cap_ == 0 || q_.size() < cap_; });
    if (closed_) return true;
    if (stop.load()) return false;
    q_.push_back(std::move(d));
    not_empty_.notify_one();
    return true;
  }

  bool pop_blocking(Delivery& out, const std::atomic<bool>& stop) {
    std::unique_lock<std::mutex> lk(m_);
    not_empty_.wait(lk, [&] { return stop.load() || !q_.empty(); });
    if (q_.empty()) return false;
    out = std::move(q_.front());
    q_.pop_front();
    not_full_.notify_one();
    return true;
  }

  std::deque<Delivery> drain() {
    std::lock_guard<std::mutex> lk(m_);
    std::deque<Delivery> out;
    out.swap(q_);
    not_full_.notify_all();
    return out;
  }

  void close() {
    std::lock_guard<std::mutex> lk(m_);
    closed_ = true;
    q_.clear();
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  void wake() {
    std::lock_guard<std::mutex> lk(m_);
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  bool empty() const {
    std::lock_guard<std::mutex> lk(m_);
    return q_.empty();
  }

  std::mutex& mutex() { return m_; }
  bool has_space_locked(std::size_t n) const { return closed_ || cap_ == 0 || q_.size() + n <= cap_; }
  void push_locked(Delivery d) {
    if (closed_) return;
    q_.push_back(std::move(d));
    not_empty_.notify_one();
  }

 private:
  mutable std::mutex m_;
  std::condition_variable not_empty_, not_full_;
  std::deque<Delivery> q_;
  std::size_t cap_ = 0;  // 0 = unbounded
  bool closed_ = false;
};

struct OutChannel {
  const StreamSpec* stream = nullptr;
  std::uint32_t dst_pi = 0;      // index into spec.pis
  std::uint32_t dst_base = 0;    // first global instance index of dst PI
  std::uint32_t dst_parallelism = 1;
  std::uint64_t shuffle_cursor = 0;
  std::uint64_t seq = 0;
};

struct RuntimeInstance {
  std::uint32_t pi = 0;
  std::uint32_t index = 0;
  std::string label;  // "name[i]"
  std::unique_ptr<SpoutHandler> spout;
  std::unique_ptr<BoltHandler> bolt;
  Inbox inbox;
  std::vector<OutChannel> outs;
  std::uint32_t expected_dag_flushes = 0;
  std::uint32_t expected_feedback_flushes = 0;

  // Run state.
  std::uint32_t got_dag_flushes = 0;
  std::uint32_t got_feedback_flushes = 0;
  bool flush_forwarded = false;
  bool exhausted = false;  // spout source drained
  bool done = false;
};

}  // namespace

struct Topology::Impl : Emitter {
  TopologySpec spec;
  std::vector<std::unique_ptr<RuntimeInstance>> instances;
  std::vector<std::uint32_t> pi_base;  // spec.pis index -> first instance index
  std::vector<std::uint32_t> schedule; // deterministic step order (stable topo)
  bool used = false;

  // Per-run state.
  RunOptions opts;
  std::atomic<bool> stop{false};
  std::mutex error_mu;
  std::string error;
  std::atomic<std::uint64_t> emitted{0}, delivered{0}, dropped{0};
  std::mutex trace_mu;

  // Emitter context: which instance is currently executing. Deterministic
  // mode runs on one thread; concurrent mode uses one emitter proxy per
  // worker, so this thread_local covers both.
  static thread_local RuntimeInstance* current;

  void emit(std::string_view stream, ContentEvent ev) override { emit_from(*current, stream, std::move(ev)); }

  void fail(const RuntimeInstance& inst, const std::string& what) {
    {
      std::lock_guard<std::mutex> lk(error_mu);
      if (error.empty()) error = "handler failure in " + inst.label + ": " + what;
    }
    stop.store(true);
    for (auto& i : instances) i->inbox.wake();
  }

  void trace_delivery(const RuntimeInstance& dst, const Delivery& d) {
    if (!opts.tracer) return;
    const RuntimeInstance& src = *instances[d.src_instance];
    DeliveryTrace t;
    t.stream = d.stream->label;
    t.src_pi = spec.pis[src.pi].name;
    t.src_index = src.index;
    t.dst_pi = spec.pis[dst.pi].name;
    t.dst_index = dst.index;
    t.seq = d.ev.seq;
    t.kind = d.ev.kind();
    if (d.ev.key) t.key = *d.ev.key;
    if (opts.mode == ExecutionMode::Concurrent) {
      std::lock_guard<std::mutex> lk(trace_mu);
      opts.tracer(t);
    } else {
      opts.tracer(t);
    }
  }

  void emit_from(RuntimeInstance& src, std::string_view stream, ContentEvent ev) {
    bool from_spout = spec.pis[src.pi].kind == PiKind::Spout;
    bool matched = false;

    if (from_spout) {
      // Intake admission: the whole event enters the topology or is dropped,
      // never a partial multicast. Target inboxes are locked in global
      // order, checked for space, then written.
      struct Target {
        Inbox* inbox;
        Delivery d;
        std::uint32_t global;
      };
      std::vector<Target> targets;
      for (auto& ch : src.outs) {
        if (ch.stream->label != stream) continue;
        matched = true;
        ContentEvent stamped = ev;
        stamped.seq = ++ch.seq;
        auto dsts = route(stamped, ch.stream->grouping, ch.dst_parallelism, ch.shuffle_cursor);
        for (auto di : dsts) {
          std::uint32_t g = ch.dst_base + di;
          targets.push_back(
              {&instances[g]->inbox, Delivery{stamped, global_index(src), ch.stream}, g});
        }
      }
      if (!matched) throw TopologyError(src.label + ": emit on unknown stream '" + std::string(stream) + "'");
      emitted.fetch_add(1, std::memory_order_relaxed);

      std::sort(targets.begin(), targets.end(),
                [](const Target& a, const Target& b) { return a.global < b.global; });
      std::vector<std::unique_lock<std::mutex>> locks;
      locks.reserve(targets.size());
      std::uint32_t prev = 0xffffffffu;
      for (auto& t : targets) {
        if (t.global != prev) locks.emplace_back(t.inbox->mutex());
        prev = t.global;
      }
      std::unordered_map<Inbox*, std::size_t> need;
      for (auto& t : targets) ++need[t.inbox];
      bool ok = true;
      for (auto& [inbox, n] : need) {
        if (!inbox->has_space_locked(n)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        for (auto& t : targets) t.inbox->push_locked(std::move(t.d));
        delivered.fetch_add(1, std::memory_order_relaxed);
      } else {
        dropped.fetch_add(1, std::memory_order_relaxed);
      }
      return;
    }

    for (auto& ch : src.outs) {
      if (ch.stream->label != stream) continue;
      matched = true;
      ContentEvent stamped = ev;
      stamped.seq = ++ch.seq;
      auto dsts = route(stamped, ch.stream->grouping, ch.dst_parallelism, ch.shuffle_cursor);
      for (auto di : dsts) {
        auto& dst = *instances[ch.dst_base + di];
        Delivery d{stamped, global_index(src), ch.stream};
        if (ch.stream->feedback || opts.mode == ExecutionMode::Deterministic) {
          dst.inbox.push_unbounded(std::move(d));
        } else {
          if (!dst.inbox.push_blocking(std::move(d), stop)) return;  // run aborting
        }
      }
    }
    if (!matched) throw TopologyError(src.label + ": emit on unknown stream '" + std::string(stream) + "'");
  }

  std::uint32_t global_index(const RuntimeInstance& inst) const {
    return pi_base[inst.pi] + inst.index;
  }

  void send_flush(RuntimeInstance& src) {
    // End-of-stream is propagated on every output channel to every
    // destination instance, regardless of grouping. Flush is runtime
    // control: it is never dropped and never counted in the report.
    for (auto& ch : src.outs) {
      for (std::uint32_t di = 0; di < ch.dst_parallelism; ++di) {
        ContentEvent ev;
        ev.payload = ControlPayload{ControlPayload::Kind::Flush, 0, ch.stream->feedback};
        ev.seq = ++ch.seq;
        instances[ch.dst_base + di]->inbox.push_unbounded(
            Delivery{std::move(ev), global_index(src), ch.stream});
      }
    }
  }

  // Returns true when the instance has terminated.
  bool process_delivery(RuntimeInstance& inst, Delivery&& d) {
    // Flush markers are runtime control, not part of the delivered-event log.
    if (!is_flush(d.ev)) trace_delivery(inst, d);
    if (is_flush(d.ev)) {
      if (d.stream->feedback) {
        ++inst.got_feedback_flushes;
      } else {
        ++inst.got_dag_flushes;
      }
      if (inst.got_dag_flushes == inst.expected_dag_flushes && !inst.flush_forwarded) {
        inst.flush_forwarded = true;
        current = &inst;
        inst.bolt->on_flush(*this);
        send_flush(inst);
      }
      if (inst.got_dag_flushes == inst.expected_dag_flushes &&
          inst.got_feedback_flushes == inst.expected_feedback_flushes) {
        inst.done = true;
        inst.inbox.close();
        return true;
      }
      return false;
    }
    current = &inst;
    inst.bolt->on_event(d.ev, *this);
    return false;
  }

  // A bolt with no non-feedback inputs can never receive a flush; it is
  // flushed at startup so termination is still well-defined.
  void bootstrap_flush(RuntimeInstance& inst) {
    if (!inst.bolt || inst.expected_dag_flushes != 0 || inst.flush_forwarded) return;
    inst.flush_forwarded = true;
    current = &inst;
    inst.bolt->on_flush(*this);
    send_flush(inst);
    if (inst.expected_feedback_flushes == 0) {
      inst.done = true;
      inst.inbox.close();
    }
  }

  RunReport run_deterministic() {
    for (auto& inst : instances) bootstrap_flush(*inst);
    // Fixed round-robin step order: each cycle pulls one record per spout
    // and drains each bolt's pending inbox, in stable topological order.
    while (true) {
      bool all_done = true;
      bool progressed = false;
      for (auto gi : schedule) {
        auto& inst = *instances[gi];
        if (inst.done) continue;
        all_done = false;
        if (inst.spout) {
          if (!inst.exhausted) {
            progressed = true;
            current = &inst;
            bool more = false;
            try {
              more = inst.spout->next(*this);
            } catch (const std::exception& e) {
              throw TopologyError("handler failure in " + inst.label + ": " + e.what());
            }
            if (!more) {
              inst.exhausted = true;
              send_flush(inst);
              inst.done = true;
            }
          }
          continue;
        }
        auto batch = inst.inbox.drain();
        if (!batch.empty()) progressed = true;
        for (auto& d : batch) {
          try {
            if (process_delivery(inst, std::move(d))) break;
          } catch (const TopologyError&) {
            throw;
          } catch (const std::exception& e) {
            throw TopologyError("handler failure in " + inst.label + ": " + e.what());
          }
        }
      }
      if (all_done) break;
      if (!progressed) {
        // Every live instance is starved; with flush propagation this can
        // only mean a wiring bug.
        throw TopologyError("topology stalled before end-of-stream");
      }
    }
    return RunReport{};
  }

  void run_concurrent() {
    std::vector<std::thread> workers;
    workers.reserve(instances.size());
    for (auto& instp : instances) {
      workers.emplace_back([this, &instp] {
        auto& inst = *instp;
        try {
          bootstrap_flush(inst);
          if (inst.done) return;
          if (inst.spout) {
            current = &inst;
            while (!stop.load() && inst.spout->next(*this)) {
            }
            if (!stop.load()) send_flush(inst);
            inst.done = true;
            return;
          }
          Delivery d;
          while (!stop.load()) {
            if (!inst.inbox.pop_blocking(d, stop)) break;
            if (process_delivery(inst, std::move(d))) break;
          }
        } catch (const std::exception& e) {
          fail(inst, e.what());
        }
      });
    }
    for (auto& w : workers) w.join();
  }
};

thread_local RuntimeInstance* Topology::Impl::current = nullptr;

Topology::Topology(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) { spec_ = &impl_->spec; }
Topology::Topology(Topology&&) noexcept = default;
Topology& Topology::operator=(Topology&&) noexcept = default;
Topology::~Topology() = default;

RunReport Topology::run(const RunOptions& opts) {
  auto& im = *impl_;
  if (im.used) throw TopologyError("topology already ran; build a fresh one");
  im.used = true;
  im.opts = opts;
  std::size_t cap = opts.queue_capacity.value_or(0);
  for (auto& inst : im.instances) inst->inbox.configure(cap);

  auto t0 = std::chrono::steady_clock::now();
  if (opts.mode == ExecutionMode::Deterministic) {
    im.run_deterministic();
  } else {
    im.run_concurrent();
    if (!im.error.empty()) throw TopologyError(im.error);
  }
  auto t1 = std::chrono::steady_clock::now();

  RunReport r;
  r.events_emitted = im.emitted.load();
  r.events_delivered = im.delivered.load();
  r.events_dropped_at_spout = im.dropped.load();
  r.wall_time_seconds = std::chrono::duration<double>(t1 - t0).count();
  return r;
}

std::string Topology::describe() const {
  std::ostringstream os;
  for (const auto& pi : impl_->spec.pis) {
    os << pi.name << ' ' << (pi.kind == PiKind::Spout ? "spout" : "bolt") << ' '
       << pi.parallelism << '\n';
  }
  for (const auto& s : impl_->spec.streams) {
    os << s.src << " -> " << s.dst << " [" << grouping_name(s.grouping);
    if (s.grouping.kind == GroupingKind::Key) os << ':' << s.grouping.key_field;
    os << "]\n";
  }
  return os.str();
}

BoltHandler* Topology::bolt_handler(std::string_view pi, std::uint32_t index) const {
  for (std::size_t p = 0; p < impl_->spec.pis.size(); ++p) {
    if (impl_->spec.pis[p].name == pi) {
      if (index >= impl_->spec.pis[p].parallelism) return nullptr;
      return impl_->instances[impl_->pi_base[p] + index]->bolt.get();
    }
  }
  return nullptr;
}

SpoutHandler* Topology::spout_handler(std::string_view pi, std::uint32_t index) const {
  for (std::size_t p = 0; p < impl_->spec.pis.size(); ++p) {
    if (impl_->spec.pis[p].name == pi) {
      if (index >= impl_->spec.pis[p].parallelism) return nullptr;
      return impl_->instances[impl_->pi_base[p] + index]->spout.get();
    }
  }
  return nullptr;
}

Topology build_topology(TopologySpec spec) {
  std::unordered_map<std::string, std::uint32_t> by_name;
  for (std::size_t i = 0; i < spec.pis.size(); ++i) {
    const auto& pi = spec.pis[i];
    if (pi.name.empty()) throw TopologyError("PI with empty name");
    if (!by_name.emplace(pi.name, static_cast<std::uint32_t>(i)).second)
      throw TopologyError("duplicate PI name '" + pi.name + "'");
    if (pi.parallelism < 1) throw TopologyError("PI '" + pi.name + "': parallelism must be >= 1");
    if (pi.kind == PiKind::Spout && !pi.make_spout)
      throw TopologyError("spout '" + pi.name + "' has no handler factory");
    if (pi.kind == PiKind::Bolt && !pi.make_bolt)
      throw TopologyError("bolt '" + pi.name + "' has no handler factory");
  }

  bool has_spout = false;
  for (const auto& pi : spec.pis) has_spout |= pi.kind == PiKind::Spout;
  if (!has_spout) throw TopologyError("topology has no spout");

  for (const auto& s : spec.streams) {
    auto src = by_name.find(s.src);
    auto dst = by_name.find(s.dst);
    if (src == by_name.end())
      throw TopologyError("stream '" + s.label + "': unknown source PI '" + s.src + "'");
    if (dst == by_name.end())
      throw TopologyError("stream '" + s.label + "': unknown destination PI '" + s.dst + "'");
    if (spec.pis[dst->second].kind == PiKind::Spout)
      throw TopologyError("stream '" + s.label + "': spout '" + s.dst + "' cannot be a destination");
    if (s.grouping.kind == GroupingKind::Key && s.grouping.key_field.empty())
      throw TopologyError("stream '" + s.label + "': key grouping requires a key extractor");
  }

  // Cycle check over non-feedback streams (Kahn; stable by declaration
  // order so the deterministic schedule is reproducible).
  std::size_t n = spec.pis.size();
  std::vector<std::vector<std::uint32_t>> adj(n);
  std::vector<std::uint32_t> indeg(n, 0);
  for (const auto& s : spec.streams) {
    if (s.feedback) continue;
    adj[by_name[s.src]].push_back(by_name[s.dst]);
    ++indeg[by_name[s.dst]];
  }
  std::vector<std::uint32_t> topo;
  std::vector<bool> placed(n, false);
  while (topo.size() < n) {
    bool found = false;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (!placed[i] && indeg[i] == 0) {
        placed[i] = true;
        topo.push_back(i);
        for (auto d : adj[i]) --indeg[d];
        found = true;
        break;
      }
    }
    if (!found) {
      std::string names;
      for (std::uint32_t i = 0; i < n; ++i)
        if (!placed[i]) names += (names.empty() ? "" : ", ") + spec.pis[i].name;
      throw TopologyError("cycle detected among PIs: " + names);
    }
  }

  auto impl = std::make_unique<Topology::Impl>();
  impl->spec = std::move(spec);
  const auto& sp = impl->spec;

  impl->pi_base.resize(n);
  std::uint32_t base = 0;
  for (std::size_t p = 0; p < n; ++p) {
    impl->pi_base[p] = base;
    base += sp.pis[p].parallelism;
  }
  impl->instances.reserve(base);
  for (std::uint32_t i = 0; i < base; ++i)
    impl->instances.push_back(std::make_unique<RuntimeInstance>());
  for (std::size_t p = 0; p < n; ++p) {
    for (std::uint32_t i = 0; i < sp.pis[p].parallelism; ++i) {
      auto& inst = *impl->instances[impl->pi_base[p] + i];
      inst.pi = static_cast<std::uint32_t>(p);
      inst.index = i;
      inst.label = sp.pis[p].name + "[" + std::to_string(i) + "]";
      if (sp.pis[p].kind == PiKind::Spout) {
        inst.spout = sp.pis[p].make_spout(i);
      } else {
        inst.bolt = sp.pis[p].make_bolt(i);
      }
    }
  }
  for (const auto& s : sp.streams) {
    std::uint32_t src_pi = by_name[s.src];
    std::uint32_t dst_pi = by_name[s.dst];
    for (std::uint32_t i = 0; i < sp.pis[src_pi].parallelism; ++i) {
      auto& inst = *impl->instances[impl->pi_base[src_pi] + i];
      OutChannel ch;
      ch.stream = &s;
      ch.dst_pi = dst_pi;
      ch.dst_base = impl->pi_base[dst_pi];
      ch.dst_parallelism = sp.pis[dst_pi].parallelism;
      inst.outs.push_back(ch);
    }
    for (std::uint32_t i = 0; i < sp.pis[dst_pi].parallelism; ++i) {
      auto& inst = *impl->instances[impl->pi_base[dst_pi] + i];
      if (s.feedback) {
        inst.expected_feedback_flushes += sp.pis[src_pi].parallelism;
      } else {
        inst.expected_dag_flushes += sp.pis[src_pi].parallelism;
      }
    }
  }
  for (auto p : topo) {
    for (std::uint32_t i = 0; i < sp.pis[p].parallelism; ++i)
      impl->schedule.push_back(impl->pi_base[p] + i);
  }
  return Topology(std::move(impl));
}

}  // namespace sentinel
