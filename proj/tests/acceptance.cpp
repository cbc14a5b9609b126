// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "fedint/experiment.hpp"
#include "fedint/federation.hpp"
#include "fedint/kernels.hpp"
#include "fedint/runtime.hpp"
#include "fedint/secure_sum.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace fedint;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kFixtures = FEDINT_FIXTURES;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fedint_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// 1 ------------------------------------------------------------------------

Outcome clinical_end_to_end() {
  const auto t0 = Clock::now();
  const fs::path root = kFixtures / "clinical";
  std::size_t counts[2] = {0, 0};
  std::size_t compared = 0;
  std::string mismatch;
  for (int m = 0; m < 2; ++m) {
    const auto mode = m == 0 ? exchange::QueryMode::CertainAnswers : exchange::QueryMode::Impute;
    experiment::Experiment exp(experiment::load_config(root / "config.json"));
    exp.prepare(mode);
    std::map<std::string, impute::FittedImputer> fitted;
    if (m == 1)
      for (const char* name : {"moca_f1", "moca_f2", "dx_f1"})
        fitted[name] = *exp.silos().front().registry.fitted(name);
    const auto expected = oracle::clinical_answers(root, m == 1, fitted);
    for (const char* q : {"ad_prediction", "cognitive_decline"}) {
      const auto got = exp.answer(q, mode);
      const auto& want = std::string(q) == "ad_prediction" ? expected.ad_prediction
                                                           : expected.cognitive_decline;
      for (std::size_t s = 0; s < exp.silos().size(); ++s) {
        const auto& id = exp.silos()[s].id;
        ++compared;
        counts[m] += got[s].size();
        if (!oracle::same_multiset(got[s].rows(), want.at(id)))
          mismatch += std::string(" ") + q + "@" + id + "/" + std::string(exchange::to_string(mode));
      }
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = mismatch.empty() && counts[0] < counts[1] && secs < 5.0;
  o.detail = std::to_string(compared) + " answer sets vs oracle" +
             (mismatch.empty() ? " match" : ", mismatched:" + mismatch) +
             "; certain=" + std::to_string(counts[0]) + " impute=" + std::to_string(counts[1]) +
             "; " + fmt(secs) + " s";
  return o;
}

// 2 ------------------------------------------------------------------------

Outcome aggregation_correctness() {
  Rng rng(0xA66);
  double worst = 0.0, worst_wsum = 0.0;
  for (int fixture = 0; fixture < 100; ++fixture) {
    const std::size_t k = 1 + rng.below(10);
    const std::size_t n = 1 + rng.below(10000);
    std::vector<fed::ModelStoreEntry> entries;
    std::vector<std::vector<double>> xs;
    std::vector<double> p;
    // split the parameter count over two tensors to exercise multi-tensor layouts
    const std::size_t a = rng.below(n + 1);
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<double> x(n);
      for (auto& v : x) v = rng.uniform(-10.0, 10.0);
      model::ModelParams params({model::Tensor{"a", {a}, {x.begin(), x.begin() + a}},
                                 model::Tensor{"b", {n - a}, {x.begin() + a, x.end()}}});
      const double c = rng.below(4) == 0 ? static_cast<double>(1 + rng.below(500)) : rng.uniform(0.01, 100.0);
      entries.push_back({"l" + std::to_string(i), params, c, 0});
      xs.push_back(x);
      p.push_back(c);
    }
    const auto got = fed::aggregate_weighted(entries).flatten();
    const auto want = oracle::weighted_average(xs, p);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    double wsum = 0.0;
    for (double w : fed::aggregation_weights(p)) wsum += w;
    worst_wsum = std::max(worst_wsum, std::abs(wsum - 1.0));
  }
  return {worst <= 1e-12 && worst_wsum <= 1e-12,
          "100 fixtures; max elementwise error " + fmt(worst) + ", max |sum w - 1| " + fmt(worst_wsum)};
}

// 3 ------------------------------------------------------------------------

Outcome fedavg_equals_centralized() {
  Rng rng(0xFEDA);
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const bool logistic = inst % 2 == 1;
    const std::size_t d = 1 + rng.below(6), classes = 2 + rng.below(3);
    const std::size_t k = 2 + rng.below(5);
    std::vector<fed::LearnerHandle> learners;
    std::vector<model::Dataset> parts;
    for (std::size_t i = 0; i < k; ++i) {
      parts.push_back(oracle::random_data(1 + rng.below(60), d, logistic ? classes : 0, rng));
      learners.push_back({"l" + std::to_string(i), parts.back(), std::nullopt, 1.0});
    }
    fed::FederationConfig cfg;
    cfg.protocol = fed::Synchronous{1};
    cfg.rounds = 1;
    cfg.seed = rng.next();
    cfg.model = logistic ? model::ModelSpec(model::LogisticRegression{d, classes})
                         : model::ModelSpec(model::LinearRegression{d});
    cfg.hyper.learning_rate = rng.uniform(0.01, 0.5);
    cfg.hyper.batch_size = 1000;  // one full-batch step per learner
    auto init = model::init_params(cfg.model, 0);
    auto flat = init.flatten();
    for (auto& v : flat) v = rng.uniform(-1.0, 1.0);
    init.assign_flat(flat);
    cfg.initial = init;

    const auto log = fed::run_federation(cfg, learners);
    const auto got = log.final_params.flatten();

    const auto pooled = model::concat(parts);
    const auto g = logistic ? oracle::logistic_gradient(flat, classes, pooled)
                            : oracle::linear_gradient(flat, pooled);
    for (std::size_t i = 0; i < flat.size(); ++i)
      worst = std::max(worst, std::abs(got[i] - (flat[i] - cfg.hyper.learning_rate * g[i])));
  }
  return {worst <= 1e-9, "20 linear/logistic instances; max elementwise error " + fmt(worst)};
}

// 4 ------------------------------------------------------------------------

Outcome federated_imputers() {
  Rng rng(0x1397);
  double worst_mean = 0.0, worst_ridge = 0.0;
  std::size_t mode_mismatch = 0;
  const RelationSchema schema("t", {{"x", ColumnType::Float},
                                    {"z", ColumnType::Int},
                                    {"c", ColumnType::Str},
                                    {"y", ColumnType::Float},
                                    {"lab", ColumnType::Str}});
  for (int split = 0; split < 50; ++split) {
    const std::size_t n = 20 + rng.below(200);
    const std::size_t silos = 1 + rng.below(6);
    std::vector<Relation> parts(silos, Relation(schema));
    Relation pooled(schema);
    std::vector<std::vector<Value>> design;
    std::vector<double> ys, means;
    std::map<std::string, std::uint64_t> counts;
    static const char* cats[] = {"a", "b", "c", "d"};
    static const char* labs[] = {"p", "q", "r"};
    for (std::size_t i = 0; i < n; ++i) {
      const double x = rng.normal();
      const auto z = static_cast<std::int64_t>(rng.below(50));
      const std::string c = cats[rng.below(4)];
      const bool y_missing = rng.below(10) == 0;
      const double y = 2.0 * x - 0.1 * static_cast<double>(z) + (c == "a" ? 1.5 : 0.0) + rng.normal();
      const std::string lab = labs[rng.below(3)];
      Tuple t{Value(x), Value(z), Value(c), y_missing ? Value() : Value(y),
              rng.below(8) == 0 ? Value() : Value(lab)};
      if (!y_missing) {
        design.push_back({t[0], t[1], t[2]});
        ys.push_back(y);
      }
      if (!t[4].is_null()) ++counts[lab];
      parts[rng.below(silos)].add(t);
      pooled.add(t);
    }

    impute::ImputerSpec mean{"m", "t", "y", ColumnType::Float, impute::Kind::Mean};
    impute::ImputerSpec mode{"o", "t", "lab", ColumnType::Str, impute::Kind::Mode};
    impute::ImputerSpec ridge{"r", "t", "y", ColumnType::Float, impute::Kind::Ridge};
    ridge.features = {{"x", false}, {"z", false}, {"c", true}};
    ridge.lambda = rng.uniform(0.0, 2.0);
    ridge.intercept = rng.below(4) != 0;

    auto federated = [&](const impute::ImputerSpec& spec) {
      std::vector<impute::SufficientStats> st;
      for (const auto& p : parts) st.push_back(impute::local_stats(p, spec));
      return impute::fit(spec, impute::merge_stats(st));
    };

    double sum = 0.0;
    for (double v : ys) sum += v;
    worst_mean = std::max(worst_mean, std::abs(federated(mean).value.as_float() -
                                               sum / static_cast<double>(ys.size())));

    std::string best;
    std::uint64_t best_n = 0;
    for (const auto& [k, c] : counts)
      if (c > best_n) best = k, best_n = c;  // map order gives smallest on ties
    if (federated(mode).value.as_str() != best) ++mode_mismatch;

    const auto fr = federated(ridge);
    const auto want = oracle::ridge_fit(design, ys, {false, false, true}, ridge.lambda, ridge.intercept);
    if (fr.columns.size() != want.weights.size()) {
      worst_ridge = INFINITY;
      continue;
    }
    for (std::size_t i = 0; i < fr.columns.size(); ++i) {
      const auto key = std::make_pair(fr.columns[i].feature, fr.columns[i].category.value_or(""));
      auto it = want.weights.find(key);
      worst_ridge = it == want.weights.end()
                        ? INFINITY
                        : std::max(worst_ridge, std::abs(fr.weights[i] - it->second));
    }
  }
  return {worst_mean <= 1e-8 && worst_ridge <= 1e-8 && mode_mismatch == 0,
          "50 splits; mean err " + fmt(worst_mean) + ", ridge err " + fmt(worst_ridge) +
              ", mode mismatches " + std::to_string(mode_mismatch)};
}

// 5 ------------------------------------------------------------------------

double uniformity_p_value(const std::vector<std::uint64_t>& values) {
  std::vector<double> bucket(64, 0.0);
  for (auto v : values) bucket[v >> 58] += 1.0;
  const double expected = static_cast<double>(values.size()) / 64.0;
  double chi2 = 0.0;
  for (double b : bucket) chi2 += (b - expected) * (b - expected) / expected;
  boost::math::chi_squared dist(63);
  return boost::math::cdf(boost::math::complement(dist, chi2));
}

Outcome secure_aggregation() {
  Rng rng(0x5EC);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng.below(7), n = 1 + rng.below(2000);
    std::vector<fed::ModelStoreEntry> entries;
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<double> x(n);
      for (auto& v : x) v = rng.uniform(-100.0, 100.0);
      entries.push_back({"l" + std::to_string(i), model::ModelParams({model::Tensor{"w", {n}, x}}),
                         rng.uniform(1.0, 500.0), 0});
    }
    const auto masked = fed::secure_aggregate(entries, rng.next()).flatten();
    const auto plain = fed::aggregate_weighted(entries).flatten();
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(masked[i] - plain[i]));
  }

  // One learner's masked submission of a constant vector, 10k elements.
  auto submission = [](std::uint64_t driver_seed) {
    fed::SecureSumSession session({"a", "b", "c"}, driver_seed, 10000);
    const std::vector<double> v(10000, 0.5);
    return session.mask(1, v);
  };
  const double p_single = uniformity_p_value(submission(42));
  int failures = 0;
  const int sessions = 200;
  for (int s = 0; s < sessions; ++s)
    if (uniformity_p_value(submission(derive_seed(7, "session/" + std::to_string(s)))) <= 0.01)
      ++failures;
  // P(Binomial(200, 0.01) >= 8) < 0.001
  const bool chance = failures < 8;
  return {worst <= std::ldexp(1.0, -20) && p_single > 0.01 && chance,
          "max error " + fmt(worst) + " (bound 2^-20); chi-square p=" + fmt(p_single) + "; " +
              std::to_string(failures) + "/" + std::to_string(sessions) +
              " sessions fail at p<=0.01"};
}

// 6 ------------------------------------------------------------------------

Outcome gradient_checks() {
  Rng rng(0x6AD);
  double worst[3] = {0, 0, 0};
  const char* names[3] = {"linear", "logistic", "mlp"};
  for (int kind = 0; kind < 3; ++kind) {
    for (int draw = 0; draw < 20; ++draw) {
      const std::size_t d = 1 + rng.below(6), classes = 2 + rng.below(3), hidden = 1 + rng.below(8);
      model::ModelSpec spec = kind == 0   ? model::ModelSpec(model::LinearRegression{d})
                              : kind == 1 ? model::ModelSpec(model::LogisticRegression{d, classes})
                                          : model::ModelSpec(model::Mlp{d, hidden, classes});
      const auto data = oracle::random_data(1 + rng.below(30), d, kind == 0 ? 0 : classes, rng);
      auto params = model::init_params(spec, rng.next());
      auto flat = params.flatten();
      for (auto& v : flat) v = rng.uniform(-1.0, 1.0);
      params.assign_flat(flat);
      const auto analytic = model::gradient(spec, params, data).flatten();
      double diff2 = 0.0, norm_a = 0.0, norm_f = 0.0;
      const double h = 1e-6;
      for (std::size_t i = 0; i < flat.size(); ++i) {
        auto plus = flat, minus = flat;
        plus[i] += h;
        minus[i] -= h;
        model::ModelParams pp = params, pm = params;
        pp.assign_flat(plus);
        pm.assign_flat(minus);
        const double fd = (model::loss(spec, pp, data) - model::loss(spec, pm, data)) / (2 * h);
        diff2 += (fd - analytic[i]) * (fd - analytic[i]);
        norm_a += analytic[i] * analytic[i];
        norm_f += fd * fd;
      }
      const double denom = std::max(std::sqrt(norm_a) + std::sqrt(norm_f), 1e-12);
      worst[kind] = std::max(worst[kind], std::sqrt(diff2) / denom);
    }
  }
  std::string detail = "20 draws each;";
  bool ok = true;
  for (int k = 0; k < 3; ++k) {
    detail += std::string(" ") + names[k] + "=" + fmt(worst[k]);
    ok = ok && worst[k] <= 1e-4;
  }
  return {ok, detail + " (max relative error)"};
}

// 7 ------------------------------------------------------------------------

std::vector<fed::LearnerHandle> rate_learners(Rng& rng, std::size_t d) {
  std::vector<fed::LearnerHandle> out;
  const double rates[] = {5, 10, 20, 40};
  for (int i = 0; i < 4; ++i)
    out.push_back({"l" + std::to_string(i), oracle::random_data(20 + rng.below(40), d, 0, rng),
                   std::nullopt, rates[i]});
  return out;
}

Outcome protocol_invariants() {
  Rng rng(0x7707);
  std::vector<std::string> problems;
  const std::size_t d = 3;
  const auto learners = rate_learners(rng, d);

  // semi-sync step counts and busy time
  for (double period : {0.3, 0.7, 1.0, 2.35}) {
    fed::FederationConfig cfg;
    cfg.protocol = fed::SemiSynchronous{period};
    cfg.rounds = 3;
    cfg.model = model::LinearRegression{d};
    cfg.hyper.learning_rate = 0.01;
    cfg.hyper.batch_size = 8;
    const auto log = fed::run_federation(cfg, learners);
    for (const auto& r : log.rounds)
      for (std::size_t i = 0; i < r.learners.size(); ++i) {
        const auto& rec = r.learners[i];
        const auto want = static_cast<std::uint64_t>(std::floor(learners[i].step_rate * period + 1e-9));
        if (rec.steps_done != want)
          problems.push_back("semi-sync " + rec.id + " steps " + std::to_string(rec.steps_done) +
                             " != " + std::to_string(want));
        if (rec.busy_time != period) problems.push_back("semi-sync busy time " + fmt(rec.busy_time));
      }
  }

  // async staleness
  {
    fed::FederationConfig cfg;
    cfg.protocol = fed::Asynchronous{1, 0.6, 0.5};
    cfg.rounds = 40;
    cfg.model = model::LinearRegression{d};
    cfg.hyper.learning_rate = 0.01;
    cfg.hyper.batch_size = 8;
    const auto log = fed::run_federation(cfg, learners);
    std::uint64_t max_stale = 0;
    for (const auto& r : log.rounds) {
      if (r.learners.size() != 1) problems.push_back("async merge with != 1 learner");
      for (const auto& rec : r.learners) {
        if (!rec.staleness) {
          problems.push_back("async record without staleness");
          continue;
        }
        if (rec.dispatch_round > r.round - 1 || *rec.staleness != r.round - 1 - rec.dispatch_round)
          problems.push_back("async staleness inconsistent at round " + std::to_string(r.round));
        max_stale = std::max(max_stale, *rec.staleness);
      }
    }
    if (max_stale == 0) problems.push_back("async never stale with heterogeneous rates");
  }

  // one learner: all protocols coincide
  {
    std::vector<fed::LearnerHandle> one{{"solo", oracle::random_data(40, d, 0, rng), std::nullopt, 5.0}};
    auto base = [&] {
      fed::FederationConfig cfg;
      cfg.rounds = 6;
      cfg.seed = 99;
      cfg.model = model::LinearRegression{d};
      cfg.hyper.learning_rate = 0.05;
      cfg.hyper.batch_size = 8;  // 40 rows -> 5 steps per epoch
      return cfg;
    };
    auto sync = base(), async = base(), semi = base();
    sync.protocol = fed::Synchronous{1};
    async.protocol = fed::Asynchronous{1, 1.0, 0.5};
    semi.protocol = fed::SemiSynchronous{1.0};  // rate 5 -> 5 steps
    const auto a = fed::run_federation(sync, one), b = fed::run_federation(async, one),
               c = fed::run_federation(semi, one);
    if (!(a.final_params == b.final_params && a.final_params == c.final_params))
      problems.push_back("one-learner final params differ across protocols");
    for (std::size_t r = 0; r < a.rounds.size(); ++r)
      if (a.rounds[r].federation.loss != b.rounds[r].federation.loss ||
          a.rounds[r].federation.loss != c.rounds[r].federation.loss)
        problems.push_back("one-learner round " + std::to_string(r + 1) + " loss differs");
  }

  std::string detail = problems.empty() ? "semi-sync steps/busy time, async staleness, one-learner runs"
                                        : problems.front() + " (+" + std::to_string(problems.size() - 1) + " more)";
  return {problems.empty(), detail};
}

// 8 ------------------------------------------------------------------------

Outcome convergence_sanity() {
  const auto t0 = Clock::now();
  const auto data = oracle::separable(2000, 10, 0xC0DE);
  const auto parts = model::partition_hfl(data, 4, 0.5, 0xC0DE, true);
  const model::ModelSpec spec = model::LogisticRegression{10, 2};
  const std::size_t batch = 32;
  const double lr = 0.1;
  const std::uint64_t rounds = 50;

  std::uint64_t steps_per_round = 0;
  for (const auto& p : parts) steps_per_round += (p.n + batch - 1) / batch;

  // centralized reference with the same total step budget
  model::TrainHyper hyper;
  hyper.learning_rate = lr;
  hyper.batch_size = batch;
  hyper.budget = model::Steps{steps_per_round * rounds};
  hyper.seed = 1;
  const auto central = model::sgd_train(spec, model::init_params(spec, 0), data, hyper);
  const double baseline = *model::evaluate(spec, central.params, data).metric_value;

  std::vector<fed::LearnerHandle> learners;
  for (std::size_t i = 0; i < parts.size(); ++i)
    learners.push_back({"silo" + std::to_string(i), parts[i], std::nullopt, 1.0});
  fed::FederationConfig cfg;
  cfg.protocol = fed::Synchronous{1};
  cfg.rounds = rounds;
  cfg.seed = 1;
  cfg.model = spec;
  cfg.hyper.learning_rate = lr;
  cfg.hyper.batch_size = batch;
  const auto log = fed::run_federation(cfg, learners);
  const double fed_acc = *log.rounds.back().federation.metric_value;
  const double secs = seconds_since(t0);
  std::string sizes;
  for (const auto& p : parts) sizes += (sizes.empty() ? "" : "/") + std::to_string(p.n);
  return {std::abs(fed_acc - baseline) <= 0.03 && secs < 60.0,
          "centralized " + fmt(baseline) + ", federated " + fmt(fed_acc) + " (silos " + sizes +
              ", " + std::to_string(steps_per_round * rounds) + " steps); " + fmt(secs) + " s"};
}

// 9 ------------------------------------------------------------------------

Outcome determinism() {
  std::vector<std::string> problems;
  std::size_t compared = 0;
  for (const char* name : {"config.json", "config_async.json", "config_semisync.json"}) {
    std::string logs[2];
    for (int i = 0; i < 2; ++i) {
      experiment::CommandOptions opts;
      opts.config = kFixtures / "clinical" / name;
      opts.out = scratch_dir(std::string("det") + std::to_string(i));
      opts.execution = fed::ExecutionMode::Simulated;
      std::ostringstream out, err;
      if (experiment::cmd_run(opts, out, err) != 0) problems.push_back(std::string(name) + ": " + err.str());
      logs[i] = read_text_file(*opts.out / "runlog.jsonl");
    }
    ++compared;
    if (logs[0] != logs[1] || logs[0].empty()) problems.push_back(std::string(name) + " RunLogs differ");
  }
  return {problems.empty(), problems.empty()
                                ? std::to_string(compared) + " configs, byte-identical RunLogs"
                                : problems.front()};
}

// 10 -----------------------------------------------------------------------

Outcome parser() {
  oracle::ProgramGenerator gen(0x9A85);
  const auto sigs = oracle::ProgramGenerator::signatures();
  std::size_t failures = 0;
  std::string first;
  for (int i = 0; i < 500; ++i) {
    const auto p = gen.program();
    const auto text = mapping::pretty_print(p);
    try {
      if (!(mapping::parse_program(text, sigs) == p)) {
        if (first.empty()) first = "round-trip mismatch:\n" + text;
        ++failures;
      }
    } catch (const std::exception& e) {
      if (first.empty()) first = std::string(e.what()) + "\n" + text;
      ++failures;
    }
  }
  experiment::Experiment exp(experiment::load_config(kFixtures / "clinical" / "config.json"));
  const auto report = exp.validate();
  const bool ok = failures == 0 && report.errors == 0;
  if (!first.empty()) std::cerr << first << "\n";
  return {ok, "500 random programs, " + std::to_string(failures) + " round-trip failures; fixture " +
                  std::to_string(report.errors) + " validation errors"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"clinical-example-end-to-end", clinical_end_to_end},
      {"aggregation-correctness", aggregation_correctness},
      {"fedavg-equals-centralized", fedavg_equals_centralized},
      {"federated-imputers", federated_imputers},
      {"secure-aggregation", secure_aggregation},
      {"gradient-checks", gradient_checks},
      {"protocol-invariants", protocol_invariants},
      {"convergence-sanity", convergence_sanity},
      {"determinism", determinism},
      {"parser", parser},
  };
  std::cout << "kernels: " << kernels::active().name << "\n";
  int failed = 0, index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << index << " " << c.name << ": " << o.detail
              << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << "\n";
  return failed ? 1 : 0;
}
