#include "fedint/federation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <json.hpp>
#include <map>
#include <memory>
#include <set>
#include <thread>

#include "fedint/error.hpp"
#include "fedint/kernels.hpp"
#include "fedint/rng.hpp"
#include "fedint/secure_sum.hpp"
#include "fedint/wire.hpp"

namespace fedint::fed {

std::string describe(const ProtocolSpec& protocol) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Synchronous>)
          return "synchronous(local_epochs=" + std::to_string(p.local_epochs) + ")";
        else if constexpr (std::is_same_v<T, Asynchronous>)
          return "asynchronous(local_epochs=" + std::to_string(p.local_epochs) +
                 ", alpha=" + std::to_string(p.alpha) +
                 ", staleness_exponent=" + std::to_string(p.staleness_exponent) + ")";
        else
          return "semi_synchronous(period_t=" + std::to_string(p.period_t) + ")";
      },
      protocol);
}

std::string_view to_string(ExecutionMode mode) {
  return mode == ExecutionMode::Simulated ? "simulated" : "threaded";
}

std::optional<ExecutionMode> execution_mode_from_string(std::string_view text) {
  if (text == "simulated") return ExecutionMode::Simulated;
  if (text == "threaded") return ExecutionMode::Threaded;
  return std::nullopt;
}

namespace {

std::size_t sample_size(double fraction, std::size_t n) {
  const double m = std::ceil(fraction * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(m), 1, n);
}

}  // namespace

void validate_config(const FederationConfig& config, std::size_t learners) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
  if (learners == 0) fail("no learners");
  if (config.rounds < 1) fail("rounds must be >= 1");
  if (!(config.participation_fraction > 0.0 && config.participation_fraction <= 1.0))
    fail("participation_fraction must lie in (0, 1]");
  if (!(config.hyper.learning_rate > 0.0)) fail("learning_rate must be positive");
  if (config.hyper.batch_size < 1) fail("batch_size must be positive");
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Asynchronous>) {
          if (!(p.alpha > 0.0 && p.alpha <= 1.0)) fail("alpha must lie in (0, 1]");
          if (!(p.staleness_exponent >= 0.0)) fail("staleness_exponent must be >= 0");
          if (config.secure_aggregation)
            fail("secure aggregation needs a synchronized round; not available for asynchronous");
        } else if constexpr (std::is_same_v<T, SemiSynchronous>) {
          if (!(p.period_t > 0.0)) fail("period_t must be positive");
        }
      },
      config.protocol);
  if (config.secure_aggregation) {
    std::size_t m = learners;
    if (std::holds_alternative<Synchronous>(config.protocol))
      m = sample_size(config.participation_fraction, learners);
    if (m < 2) fail("secure aggregation needs at least two participants per round");
  }
}

namespace {

using model::MetricsReport;

struct TrainTask {
  ModelParams params;
  std::uint64_t version = 0;  // global round the params belong to
  model::Budget budget;
  const SecureSumSession* session = nullptr;
  std::size_t slot = 0;
};

struct TrainOutcome {
  ModelParams params;  // empty when masked
  std::vector<std::uint64_t> masked;
  std::uint64_t steps = 0;
};

/// Learner-side work: local SGD, then masking when a session is attached.
TrainOutcome local_train(const LearnerHandle& learner, const FederationConfig& config,
                         const TrainTask& task) {
  model::TrainHyper hyper = config.hyper;
  hyper.budget = task.budget;
  hyper.seed = derive_seed(config.seed, "train/" + learner.id + "/" + std::to_string(task.version));
  auto result = model::sgd_train(config.model, task.params, learner.data, hyper, learner.step_rate);
  TrainOutcome out;
  out.steps = result.steps_done;
  if (task.session) {
    auto flat = result.params.flatten();
    kernels::scale(learner.weight(), flat);
    out.masked = task.session->mask(task.slot, flat);
  } else {
    out.params = std::move(result.params);
  }
  return out;
}

[[noreturn]] void learner_failure(const LearnerHandle& l, const std::string& what) {
  throw Error(ErrorCode::LearnerFailure, l.id + ": " + what);
}

class LearnerPool {
 public:
  virtual ~LearnerPool() = default;
  virtual void dispatch(std::size_t learner, TrainTask task) = 0;
  virtual TrainOutcome collect(std::size_t learner) = 0;
  virtual std::vector<MetricsReport> evaluate_all(const ModelParams& params) = 0;
};

class SimulatedPool final : public LearnerPool {
 public:
  SimulatedPool(const FederationConfig& config, std::span<const LearnerHandle> learners)
      : config_(config), learners_(learners), pending_(learners.size()) {}

  void dispatch(std::size_t k, TrainTask task) override { pending_[k] = std::move(task); }

  TrainOutcome collect(std::size_t k) override {
    if (!pending_[k]) throw Error(ErrorCode::ProtocolError, "no task for " + learners_[k].id);
    TrainTask task = std::move(*pending_[k]);
    pending_[k].reset();
    try {
      return local_train(learners_[k], config_, task);
    } catch (const std::exception& e) {
      learner_failure(learners_[k], e.what());
    }
  }

  std::vector<MetricsReport> evaluate_all(const ModelParams& params) override {
    std::vector<MetricsReport> out;
    for (const auto& l : learners_) out.push_back(model::evaluate(config_.model, params, l.data));
    return out;
  }

 private:
  const FederationConfig& config_;
  std::span<const LearnerHandle> learners_;
  std::vector<std::optional<TrainTask>> pending_;
};

using Frame = std::optional<std::vector<std::uint8_t>>;  // nullopt stops the learner

std::vector<model::Tensor> budget_tensors(const model::Budget& b) {
  return std::visit(
      [](const auto& v) -> std::vector<model::Tensor> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, model::Epochs>)
          return {{"budget/epochs", {1}, {static_cast<double>(v.count)}}};
        else if constexpr (std::is_same_v<T, model::Steps>)
          return {{"budget/steps", {1}, {static_cast<double>(v.count)}}};
        else
          return {{"budget/sim_time", {1}, {v.seconds}}};
      },
      b);
}

model::Budget budget_from(const wire::Message& m) {
  if (auto t = m.find("budget/epochs")) return model::Epochs{static_cast<std::uint64_t>(t->values.at(0))};
  if (auto t = m.find("budget/steps")) return model::Steps{static_cast<std::uint64_t>(t->values.at(0))};
  if (auto t = m.find("budget/sim_time")) return model::SimTime{t->values.at(0)};
  throw Error(ErrorCode::ProtocolError, "train_task without a budget");
}

constexpr std::string_view kParamPrefix = "param/";

void append_params(std::vector<model::Tensor>& out, const ModelParams& params) {
  for (auto t : params.tensors()) {
    t.name = std::string(kParamPrefix) + t.name;
    out.push_back(std::move(t));
  }
}

ModelParams params_from(const wire::Message& m) {
  std::vector<model::Tensor> ts;
  for (const auto& t : m.tensors)
    if (t.name.starts_with(kParamPrefix)) {
      auto copy = t;
      copy.name = t.name.substr(kParamPrefix.size());
      ts.push_back(std::move(copy));
    }
  return ModelParams(std::move(ts));
}

std::optional<std::string> error_from(const wire::Message& m) {
  for (const auto& t : m.tensors)
    if (t.name.starts_with("error:")) return t.name.substr(6);
  return std::nullopt;
}

/// Learners on real threads. Every exchange goes through encoded frames on
/// ordered channels; the masking session is the only object shared with
/// the Driver.
class ThreadedPool final : public LearnerPool {
 public:
  ThreadedPool(const FederationConfig& config, std::span<const LearnerHandle> learners)
      : config_(config), learners_(learners) {
    const std::size_t n = learners.size();
    inboxes_.reserve(n);
    for (std::size_t k = 0; k < n; ++k) inboxes_.push_back(std::make_unique<wire::Channel<Frame>>());
    sessions_.assign(n, {nullptr, 0});
    models_.resize(n);
    metrics_.resize(n);
    for (std::size_t k = 0; k < n; ++k) threads_.emplace_back([this, k] { learner_loop(k); });
  }

  ~ThreadedPool() override {
    for (auto& in : inboxes_) in->send(std::nullopt);
    for (auto& t : threads_) t.join();
  }

  void dispatch(std::size_t k, TrainTask task) override {
    wire::Message m{wire::MessageType::TrainTask, task.version, learners_[k].id, {}};
    m.tensors = budget_tensors(task.budget);
    append_params(m.tensors, task.params);
    sessions_[k] = {task.session, task.slot};
    inboxes_[k]->send(wire::encode(m));
  }

  TrainOutcome collect(std::size_t k) override {
    const wire::Message m = await(k, wire::MessageType::LocalModel);
    if (auto err = error_from(m)) learner_failure(learners_[k], *err);
    TrainOutcome out;
    out.steps = static_cast<std::uint64_t>(m.find("steps")->values.at(0));
    if (const auto* masked = m.find("masked")) {
      for (double v : masked->values) out.masked.push_back(std::bit_cast<std::uint64_t>(v));
    } else {
      out.params = params_from(m);
    }
    return out;
  }

  std::vector<MetricsReport> evaluate_all(const ModelParams& params) override {
    wire::Message m{wire::MessageType::EvalTask, 0, "", {}};
    append_params(m.tensors, params);
    for (std::size_t k = 0; k < learners_.size(); ++k) {
      m.learner = learners_[k].id;
      inboxes_[k]->send(wire::encode(m));
    }
    std::vector<MetricsReport> out;
    for (std::size_t k = 0; k < learners_.size(); ++k) {
      const wire::Message r = await(k, wire::MessageType::Metrics);
      if (auto err = error_from(r)) learner_failure(learners_[k], *err);
      MetricsReport rep;
      rep.metric_name = model::is_classifier(config_.model) ? "accuracy" : "mae";
      rep.n = static_cast<std::size_t>(r.find("n")->values.at(0));
      if (auto t = r.find("loss")) rep.loss = t->values.at(0);
      if (auto t = r.find("metric")) rep.metric_value = t->values.at(0);
      out.push_back(std::move(rep));
    }
    return out;
  }

 private:
  void learner_loop(std::size_t k) {
    const LearnerHandle& me = learners_[k];
    for (;;) {
      Frame frame = inboxes_[k]->receive();
      if (!frame) return;
      wire::Message reply;
      reply.learner = me.id;
      try {
        const wire::Message task = wire::decode(*frame);
        reply.round = task.round;
        if (task.type == wire::MessageType::TrainTask) {
          reply.type = wire::MessageType::LocalModel;
          TrainTask t{params_from(task), task.round, budget_from(task), sessions_[k].first,
                      sessions_[k].second};
          TrainOutcome o = local_train(me, config_, t);
          reply.tensors.push_back({"steps", {1}, {static_cast<double>(o.steps)}});
          if (t.session) {
            model::Tensor masked{"masked", {o.masked.size()}, {}};
            for (auto v : o.masked) masked.values.push_back(std::bit_cast<double>(v));
            reply.tensors.push_back(std::move(masked));
          } else {
            append_params(reply.tensors, o.params);
          }
        } else if (task.type == wire::MessageType::EvalTask) {
          reply.type = wire::MessageType::Metrics;
          const auto rep = model::evaluate(config_.model, params_from(task), me.data);
          reply.tensors.push_back({"n", {1}, {static_cast<double>(rep.n)}});
          if (rep.loss) reply.tensors.push_back({"loss", {1}, {*rep.loss}});
          if (rep.metric_value) reply.tensors.push_back({"metric", {1}, {*rep.metric_value}});
        } else {
          throw Error(ErrorCode::ProtocolError,
                      "learner received " + std::string(wire::to_string(task.type)));
        }
      } catch (const std::exception& e) {
        if (reply.type != wire::MessageType::Metrics) reply.type = wire::MessageType::LocalModel;
        reply.tensors = {{"error:" + std::string(e.what()).substr(0, 1000), {0}, {}}};
      }
      outbox_.send(wire::encode(reply));
    }
  }

  /// Next message of `type` from learner k; other arrivals are buffered.
  wire::Message await(std::size_t k, wire::MessageType type) {
    auto& buffer = type == wire::MessageType::LocalModel ? models_ : metrics_;
    while (buffer[k].empty()) {
      wire::Message m = wire::decode(outbox_.receive());
      std::size_t from = learners_.size();
      for (std::size_t j = 0; j < learners_.size(); ++j)
        if (learners_[j].id == m.learner) from = j;
      if (from == learners_.size()) throw Error(ErrorCode::ProtocolError, "unknown sender " + m.learner);
      (m.type == wire::MessageType::LocalModel ? models_ : metrics_)[from].push_back(std::move(m));
    }
    wire::Message m = std::move(buffer[k].front());
    buffer[k].erase(buffer[k].begin());
    return m;
  }

  const FederationConfig& config_;
  std::span<const LearnerHandle> learners_;
  std::vector<std::unique_ptr<wire::Channel<Frame>>> inboxes_;
  wire::Channel<std::vector<std::uint8_t>> outbox_;
  std::vector<std::pair<const SecureSumSession*, std::size_t>> sessions_;
  std::vector<std::vector<wire::Message>> models_;
  std::vector<std::vector<wire::Message>> metrics_;
  std::vector<std::thread> threads_;
};

/// Serialized controller: scheduling, model store, aggregation, evaluation.
class Controller {
 public:
  Controller(const FederationConfig& config, std::span<const LearnerHandle> learners,
             LearnerPool& pool, const RoundSink& sink)
      : config_(config), learners_(learners), pool_(pool), sink_(sink) {
    global_ = config.initial ? *config.initial
                             : model::init_params(config.model, derive_seed(config.seed, "init"));
    if (!global_.compatible(model::init_params(config.model, 0)))
      throw Error(ErrorCode::ConfigError, "initial parameters do not match " +
                                              model::describe(config.model));
  }

  RunLog run() {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Asynchronous>)
            run_async(p);
          else
            run_rounds(p);
        },
        config_.protocol);
    log_.final_params = global_;
    return std::move(log_);
  }

 private:
  template <typename P>
  void run_rounds(const P& protocol) {
    constexpr bool semi = std::is_same_v<P, SemiSynchronous>;
    Rng scheduler(derive_seed(config_.seed, "scheduler"));
    for (std::uint64_t r = 1; r <= config_.rounds; ++r) {
      std::vector<std::size_t> chosen(learners_.size());
      for (std::size_t k = 0; k < chosen.size(); ++k) chosen[k] = k;
      if constexpr (!semi) {
        scheduler.shuffle(chosen);
        chosen.resize(sample_size(config_.participation_fraction, learners_.size()));
        std::sort(chosen.begin(), chosen.end());
      }

      std::unique_ptr<SecureSumSession> session;
      if (config_.secure_aggregation) {
        std::vector<std::string> ids;
        for (auto k : chosen) ids.push_back(learners_[k].id);
        session = std::make_unique<SecureSumSession>(
            ids, derive_seed(config_.seed, "driver/" + std::to_string(r)), global_.size());
      }

      model::Budget budget;
      if constexpr (semi)
        budget = model::SimTime{protocol.period_t};
      else
        budget = model::Epochs{protocol.local_epochs};
      for (std::size_t i = 0; i < chosen.size(); ++i)
        pool_.dispatch(chosen[i], TrainTask{global_, r - 1, budget, session.get(), i});

      RoundRecord rec;
      rec.round = r;
      std::vector<ModelStoreEntry> entries;
      std::vector<double> p;
      double longest = 0.0;
      for (std::size_t i = 0; i < chosen.size(); ++i) {
        const LearnerHandle& l = learners_[chosen[i]];
        TrainOutcome o = pool_.collect(chosen[i]);
        LearnerRecord lr;
        lr.id = l.id;
        lr.steps_done = o.steps;
        lr.dispatch_round = r - 1;
        if constexpr (semi)
          lr.busy_time = protocol.period_t;
        else
          lr.busy_time = static_cast<double>(o.steps) / l.step_rate;
        longest = std::max(longest, lr.busy_time);
        rec.participants.push_back(l.id);
        rec.learners.push_back(lr);
        p.push_back(l.weight());
        if (session)
          session->submit(i, std::move(o.masked));
        else
          entries.push_back({l.id, std::move(o.params), l.weight(), r - 1});
      }
      const auto w = aggregation_weights(p);
      for (std::size_t i = 0; i < w.size(); ++i) rec.learners[i].weight = w[i];

      if (session) {
        auto sum = session->combine();
        double total = 0.0;
        for (double v : p) total += v;
        for (auto& v : sum) v /= total;
        global_.assign_flat(sum);
      } else {
        for (auto& e : entries) store_.put(e);
        global_ = aggregate_weighted(entries);
      }
      clock_ += longest;
      rec.sim_time = clock_;
      finish_round(std::move(rec));
    }
  }

  void run_async(const Asynchronous& protocol) {
    struct Running {
      double finish = 0.0;
      double start = 0.0;
      std::uint64_t version = 0;
    };
    const model::Budget budget = model::Epochs{protocol.local_epochs};
    std::vector<Running> running(learners_.size());
    auto launch = [&](std::size_t k, double now) {
      const auto& l = learners_[k];
      const auto steps = model::planned_steps(budget, l.data.n, config_.hyper.batch_size, l.step_rate);
      running[k] = {now + static_cast<double>(steps) / l.step_rate, now, version_};
      pool_.dispatch(k, TrainTask{global_, version_, budget, nullptr, 0});
    };
    for (std::size_t k = 0; k < learners_.size(); ++k) launch(k, 0.0);

    while (version_ < config_.rounds) {
      std::size_t next = 0;
      for (std::size_t k = 1; k < running.size(); ++k)
        if (running[k].finish < running[next].finish) next = k;
      const LearnerHandle& l = learners_[next];
      TrainOutcome o = pool_.collect(next);
      const std::uint64_t staleness = version_ - running[next].version;
      const double a = protocol.alpha *
                       std::pow(1.0 + static_cast<double>(staleness), -protocol.staleness_exponent);
      for (std::size_t t = 0; t < global_.tensors().size(); ++t) {
        kernels::scale(1.0 - a, global_.tensors()[t].values);
        kernels::axpy(a, o.params.tensors()[t].values, global_.tensors()[t].values);
      }
      store_.put({l.id, std::move(o.params), l.weight(), running[next].version});
      clock_ = running[next].finish;
      ++version_;

      RoundRecord rec;
      rec.round = version_;
      rec.sim_time = clock_;
      rec.participants = {l.id};
      LearnerRecord lr;
      lr.id = l.id;
      lr.steps_done = o.steps;
      lr.busy_time = running[next].finish - running[next].start;
      lr.weight = a;
      lr.staleness = staleness;
      lr.dispatch_round = running[next].version;
      rec.learners.push_back(lr);
      finish_round(std::move(rec));
      if (version_ < config_.rounds) launch(next, clock_);
    }
    // Tasks still in flight are never merged; the pool discards them.
  }

  void finish_round(RoundRecord rec) {
    auto reports = pool_.evaluate_all(global_);
    std::vector<double> p;
    for (const auto& l : learners_) p.push_back(l.weight());
    auto community = combine_metrics(config_.model, std::move(reports), p);
    rec.federation = community.federation;
    for (std::size_t k = 0; k < learners_.size(); ++k)
      rec.local.emplace_back(learners_[k].id, community.local[k]);
    if (sink_) sink_(rec);
    log_.rounds.push_back(std::move(rec));
  }

  const FederationConfig& config_;
  std::span<const LearnerHandle> learners_;
  LearnerPool& pool_;
  const RoundSink& sink_;
  ModelParams global_;
  ModelStore store_;
  std::uint64_t version_ = 0;
  double clock_ = 0.0;
  RunLog log_;
};

nlohmann::ordered_json metrics_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["loss"] = m.loss ? nlohmann::ordered_json(*m.loss) : nlohmann::ordered_json(nullptr);
  j["metric_name"] = m.metric_name;
  j["metric_value"] =
      m.metric_value ? nlohmann::ordered_json(*m.metric_value) : nlohmann::ordered_json(nullptr);
  j["n"] = m.n;
  return j;
}

}  // namespace

std::string RoundRecord::to_json() const {
  nlohmann::ordered_json j;
  j["round"] = round;
  j["sim_time"] = sim_time;
  j["participants"] = participants;
  auto& ls = j["learners"] = nlohmann::ordered_json::array();
  for (const auto& l : learners) {
    nlohmann::ordered_json e;
    e["id"] = l.id;
    e["steps_done"] = l.steps_done;
    e["busy_time"] = l.busy_time;
    e["weight"] = l.weight;
    e["dispatch_round"] = l.dispatch_round;
    if (l.staleness) e["staleness"] = *l.staleness;
    ls.push_back(std::move(e));
  }
  j["federation"] = metrics_json(federation);
  auto& loc = j["local"] = nlohmann::ordered_json::object();
  for (const auto& [id, m] : local) loc[id] = metrics_json(m);
  return j.dump();
}

std::string RunLog::to_jsonl() const {
  std::string out;
  for (const auto& r : rounds) {
    out += r.to_json();
    out += '\n';
  }
  return out;
}

RunLog run_federation(const FederationConfig& config, std::span<const LearnerHandle> learners,
                      ExecutionMode mode, const RoundSink& sink) {
  validate_config(config, learners.size());
  {
    std::set<std::string> ids;
    for (const auto& l : learners) {
      if (!(l.step_rate > 0.0)) throw Error(ErrorCode::ConfigError, l.id + ": step_rate must be positive");
      if (!(l.weight() >= 0.0)) throw Error(ErrorCode::ConfigError, l.id + ": negative contribution");
      if (!ids.insert(l.id).second) throw Error(ErrorCode::ConfigError, "duplicate learner " + l.id);
    }
  }
  if (mode == ExecutionMode::Threaded) {
    ThreadedPool pool(config, learners);
    return Controller(config, learners, pool, sink).run();
  }
  SimulatedPool pool(config, learners);
  return Controller(config, learners, pool, sink).run();
}

}  // namespace fedint::fed
