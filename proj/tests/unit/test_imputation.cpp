#include <doctest.h>

#include "fedint/error.hpp"
#include "fedint/imputation.hpp"

using namespace fedint;
using namespace fedint::impute;

namespace {
const RelationSchema kT("t", {{"x", ColumnType::Float}, {"c", ColumnType::Str}, {"y", ColumnType::Float}});

Relation rows(std::vector<Tuple> ts) {
  Relation r(kT);
  for (auto& t : ts) r.add(std::move(t));
  return r;
}
}  // namespace

TEST_CASE("mean and mode skip nulls; mode ties go to the smallest category") {
  const auto r = rows({{Value(1.0), Value("b"), Value(2.0)},
                       {Value(2.0), Value("a"), Value()},
                       {Value(3.0), Value("b"), Value(4.0)},
                       {Value(4.0), Value("a"), Value(9.0)}});
  ImputerSpec mean{"m", "t", "y", ColumnType::Float, Kind::Mean};
  CHECK(fit(mean, local_stats(r, mean)).value.as_float() == doctest::Approx(5.0));
  ImputerSpec mode{"o", "t", "c", ColumnType::Str, Kind::Mode};
  CHECK(fit(mode, local_stats(r, mode)).value.as_str() == "a");
}

TEST_CASE("merging stats from silos with different categories is exact") {
  ImputerSpec ridge{"r", "t", "y", ColumnType::Float, Kind::Ridge};
  ridge.features = {{"x", false}, {"c", true}};
  ridge.lambda = 0.5;
  const auto a = rows({{Value(1.0), Value("p"), Value(2.0)}, {Value(2.0), Value("p"), Value(3.5)}});
  const auto b = rows({{Value(3.0), Value("q"), Value(1.0)}, {Value(0.5), Value("r"), Value(0.0)}});
  Relation pooled(kT);
  for (const auto* part : {&a, &b})
    for (const auto& t : part->rows()) pooled.add(t);
  const auto merged = fit(ridge, merge_stats(local_stats(a, ridge), local_stats(b, ridge)));
  const auto central = fit(ridge, local_stats(pooled, ridge));
  REQUIRE(merged.columns == central.columns);
  for (std::size_t i = 0; i < merged.weights.size(); ++i)
    CHECK(merged.weights[i] == doctest::Approx(central.weights[i]).epsilon(1e-12));
  // unseen categories encode as zero indicators
  const std::vector<Value> f{Value(1.0), Value("zzz")};
  const auto enc = encode_row(merged.columns, f);
  double ind = 0.0;
  for (std::size_t i = 0; i < merged.columns.size(); ++i)
    if (merged.columns[i].category) ind += enc[i];
  CHECK(ind == 0.0);
  CHECK(impute::impute(merged, f).is_float());
}

TEST_CASE("fitting errors") {
  ImputerSpec mean{"m", "t", "y", ColumnType::Float, Kind::Mean};
  CHECK_THROWS_AS(fit(mean, local_stats(rows({}), mean)), Error);
  ImputerSpec bad{"b", "t", "c", ColumnType::Str, Kind::Mean};
  CHECK_THROWS_AS(local_stats(rows({}), bad), Error);
  ImputerSpec ridge{"r", "t", "y", ColumnType::Float, Kind::Ridge};
  ridge.features = {{"x", false}};
  ridge.lambda = 0.0;
  // one row, two columns: singular without regularization
  CHECK_THROWS_AS(fit(ridge, local_stats(rows({{Value(1.0), Value("a"), Value(1.0)}}), ridge)), Error);
  ImputerSpec nocol{"n", "t", "nope", ColumnType::Float, Kind::Mean};
  CHECK_THROWS_AS(local_stats(rows({}), nocol), Error);
  CHECK_THROWS_AS(merge_stats(local_stats(rows({}), mean), zero_stats(ImputerSpec{"o", "t", "c", ColumnType::Str, Kind::Mode})), Error);
}

TEST_CASE("fitted imputers serialize losslessly") {
  ImputerSpec ridge{"r", "t", "y", ColumnType::Float, Kind::Ridge};
  ridge.features = {{"x", false}, {"c", true}};
  ridge.lambda = 0.25;
  const auto f = fit(ridge, local_stats(rows({{Value(1.0), Value("p"), Value(2.0)},
                                              {Value(2.0), Value("q"), Value(3.0)},
                                              {Value(0.1), Value("q"), Value(1.0)}}),
                                        ridge));
  const auto back = from_json(to_json(f));
  CHECK(back.columns == f.columns);
  CHECK(back.weights == f.weights);
  CHECK(back.spec.features == f.spec.features);
  const std::vector<Value> x{Value(0.7), Value("q")};
  CHECK(impute::impute(back, x).identical(impute::impute(f, x)));
}
