#include <doctest.h>

#include <numeric>
#include <set>

#include "fedint/dataset.hpp"
#include "fedint/error.hpp"
#include "fedint/model.hpp"
#include "support/oracles.hpp"

using namespace fedint;
using namespace fedint::model;

TEST_CASE("gradients agree with the independent formulas") {
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const std::size_t d = 1 + rng.below(5), classes = 2 + rng.below(3);
    const auto reg = oracle::random_data(25, d, 0, rng);
    const auto cls = oracle::random_data(25, d, classes, rng);
    ModelSpec lin = LinearRegression{d}, log = LogisticRegression{d, classes};
    auto pl = init_params(lin, 0), pg = init_params(log, 0);
    auto fl = pl.flatten(), fg = pg.flatten();
    for (auto& v : fl) v = rng.normal();
    for (auto& v : fg) v = rng.normal();
    pl.assign_flat(fl);
    pg.assign_flat(fg);
    const auto gl = gradient(lin, pl, reg).flatten(), want_l = oracle::linear_gradient(fl, reg);
    const auto gg = gradient(log, pg, cls).flatten(), want_g = oracle::logistic_gradient(fg, classes, cls);
    for (std::size_t k = 0; k < gl.size(); ++k) CHECK(gl[k] == doctest::Approx(want_l[k]).epsilon(1e-12));
    for (std::size_t k = 0; k < gg.size(); ++k) CHECK(gg[k] == doctest::Approx(want_g[k]).epsilon(1e-12));
  }
}

TEST_CASE("budgets translate into step counts") {
  CHECK(planned_steps(Epochs{3}, 10, 4, 1.0) == 9);
  CHECK(planned_steps(Steps{7}, 10, 4, 1.0) == 7);
  CHECK(planned_steps(SimTime{0.7}, 10, 4, 10.0) == 7);  // 0.7 * 10 is 6.999...
  CHECK(steps_for_time(40, 2.35) == 94);
  CHECK(steps_for_time(5, 0.3) == 1);

  Rng rng(1);
  const auto data = oracle::random_data(10, 2, 0, rng);
  TrainHyper h;
  h.batch_size = 4;
  h.budget = Epochs{3};
  const auto r = sgd_train(LinearRegression{2}, init_params(LinearRegression{2}, 0), data, h);
  CHECK(r.steps_done == 9);
}

TEST_CASE("sgd is deterministic in its seed") {
  Rng rng(8);
  const auto data = oracle::random_data(50, 3, 3, rng);
  ModelSpec spec = Mlp{3, 5, 3};
  TrainHyper h;
  h.seed = 4;
  h.batch_size = 8;
  h.budget = Steps{20};
  const auto a = sgd_train(spec, init_params(spec, 1), data, h);
  const auto b = sgd_train(spec, init_params(spec, 1), data, h);
  CHECK(a.params == b.params);
  h.seed = 5;
  CHECK_FALSE(sgd_train(spec, init_params(spec, 1), data, h).params == a.params);
}

TEST_CASE("evaluation and shape errors") {
  Dataset data;
  data.d = 1;
  data.push_back(std::vector<double>{1.0}, 1.0);
  data.push_back(std::vector<double>{-1.0}, 0.0);
  ModelSpec spec = LogisticRegression{1, 2};
  auto p = init_params(spec, 0);
  p.assign_flat(std::vector<double>{-1.0, 1.0, 0.0, 0.0});  // class 1 scores x, class 0 scores -x
  const auto m = evaluate(spec, p, data);
  CHECK(m.metric_name == "accuracy");
  CHECK(*m.metric_value == 1.0);
  CHECK(m.n == 2);
  const auto empty = evaluate(spec, p, Dataset{0, 1, {}, {}});
  CHECK_FALSE(empty.loss);
  CHECK(m.to_json().find("\"metric_name\":\"accuracy\"") != std::string::npos);

  Dataset wide;
  wide.d = 2;
  wide.push_back(std::vector<double>{1.0, 2.0}, 0.0);
  CHECK_THROWS_AS(loss(spec, p, wide), Error);
  Dataset bad_label = data;
  bad_label.labels[0] = 2.0;
  CHECK_THROWS_AS(gradient(spec, p, bad_label), Error);
}

TEST_CASE("skewed sizes follow the decay formula") {
  CHECK(skewed_sizes(100, 4, 0.0) == std::vector<std::size_t>{25, 25, 25, 25});
  CHECK(skewed_sizes(310, 5, 0.5) == std::vector<std::size_t>{160, 80, 40, 20, 10});
  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    const std::size_t k = 1 + rng.below(8), n = k + rng.below(5000);
    const double skew = rng.below(5) == 0 ? 0.0 : rng.uniform(0.0, 0.95);
    // weights (1 - skew)^k, floors, leftovers dealt from learner 0
    long double total = 0;
    for (std::size_t j = 0; j < k; ++j) total += std::pow(1.0L - skew, static_cast<long double>(j));
    std::vector<std::size_t> want(k);
    std::size_t used = 0;
    for (std::size_t j = 0; j < k; ++j)
      used += want[j] = static_cast<std::size_t>(std::floor(n * std::pow(1.0L - skew, static_cast<long double>(j)) / total + 1e-9L));
    for (std::size_t j = 0; used < n; j = (j + 1) % k, ++used) ++want[j];
    for (std::size_t j = 1; j < k; ++j)
      if (want[j] == 0) ++want[j], --want[0];
    CHECK(skewed_sizes(n, k, skew) == want);
    if (skew == 0.0) {
      const auto s = skewed_sizes(n, k, 0.0);
      CHECK(*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()) <= 1);
    }
  }
}

TEST_CASE("skewed partitions are exhaustive and disjoint") {
  CHECK(skewed_sizes(2000, 4, 0.5) == std::vector<std::size_t>{1067, 534, 266, 133});
  CHECK(skewed_sizes(10, 3, 0.0) == std::vector<std::size_t>{4, 3, 3});
  const auto sizes = skewed_sizes(5, 4, 0.9);
  CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == 5);
  for (auto s : sizes) CHECK(s >= 1);

  const auto data = oracle::separable(300, 2, 1);
  for (bool non_iid : {false, true}) {
    const auto parts = partition_hfl(data, 3, 0.4, 9, non_iid);
    std::multiset<std::pair<double, double>> seen, all;
    for (std::size_t i = 0; i < data.n; ++i) all.insert({data.features[i * 2], data.labels[i]});
    for (const auto& p : parts)
      for (std::size_t i = 0; i < p.n; ++i) seen.insert({p.features[i * 2], p.labels[i]});
    CHECK(seen == all);
    if (non_iid) {
      // label-sorted contiguous assignment
      std::vector<double> labels;
      for (const auto& p : parts) labels.insert(labels.end(), p.labels.begin(), p.labels.end());
      CHECK(std::is_sorted(labels.begin(), labels.end()));
    }
  }
}

TEST_CASE("encoding one-hot encodes strings with shared vocabularies") {
  Relation rows(RelationSchema("q", {{"sex", ColumnType::Str}, {"age", ColumnType::Int}, {"dx", ColumnType::Str}}));
  rows.add({Value("F"), Value(70), Value("AD")});
  rows.add({Value("M"), Value(60), Value("CT")});
  EncodingSpec spec;
  spec.feature_columns = {"sex", "age"};
  spec.label_column = "dx";
  spec.vocabularies["sex"] = {"F", "M", "X"};
  spec.label_classes = {"AD", "CT", "MCI"};
  const auto enc = encode_training_data(rows, spec);
  CHECK(enc.data.d == 4);
  CHECK(enc.data.features == std::vector<double>{1, 0, 0, 70, 0, 1, 0, 60});
  CHECK(enc.data.labels == std::vector<double>{0, 1});

  rows.add({Value(), Value(1), Value("AD")});
  CHECK_THROWS_AS(encode_training_data(rows, spec), Error);
  Relation other(rows.schema());
  other.add({Value("F"), Value(1), Value("PD")});
  CHECK_THROWS_AS(encode_training_data(other, spec), Error);
}

TEST_CASE("partitioning classification") {
  DatasetSchemaProfile a{{"1", "2"}, {"x", "y"}, "l"}, b{{"3"}, {"y", "x"}, "l"};
  CHECK(classify_partitioning(std::vector{a, b}) == Partitioning::HFL);
  DatasetSchemaProfile c{{"1", "2"}, {"z"}, "l"};
  CHECK(classify_partitioning(std::vector{a, c}) == Partitioning::VFL);
  DatasetSchemaProfile d{{"9"}, {"z"}, "m"};
  CHECK(classify_partitioning(std::vector{a, d}) == Partitioning::FTL);
  DatasetSchemaProfile e{{"1"}, {"x", "y"}, "l"};
  CHECK(classify_partitioning(std::vector{a, e}) == Partitioning::Mixed);
}
