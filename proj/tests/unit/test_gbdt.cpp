#include <cmath>
#include <random>

#include "doctest.h"
#include "expect_error.hpp"
#include "stump_check.hpp"
#include "subrank/gbdt.hpp"
#include "temp_dir.hpp"

using namespace subrank;
using testing_support::error_kind;

namespace {

std::vector<PairFeature> column(const std::vector<double>& v) {
  std::vector<PairFeature> out;
  for (double x : v) out.push_back({{x}});
  return out;
}

struct Data {
  std::vector<PairFeature> x;
  std::vector<double> reg;
  std::vector<double> cls;
};

Data synthetic_data(std::uint64_t seed, int n = 300, int d = 5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Data data;
  for (int i = 0; i < n; ++i) {
    PairFeature f;
    for (int k = 0; k < d; ++k) f.values.push_back(g(rng));
    const double signal = f.values[0] - 0.5 * f.values[1] * f.values[2];
    data.reg.push_back(signal + 0.3 * g(rng));
    data.cls.push_back(signal + 0.5 * g(rng) > 0 ? 1.0 : 0.0);
    data.x.push_back(f);
  }
  return data;
}

}  // namespace

TEST_CASE("best_split examples") {
  const std::vector<double> v{1, 2, 10, 11}, r{-1, -1, 1, 1};
  const auto s = best_split(v, r);
  REQUIRE(s.has_value());
  CHECK(s->threshold == 6.0);
  CHECK(s->gain == doctest::Approx(4.0).epsilon(1e-12));

  const std::vector<double> c{0.5, 0.5, 0.5, 0.5};
  CHECK(!best_split(v, c).has_value());
  const std::vector<double> one{3.0}, one_r{1.0};
  CHECK(!best_split(one, one_r).has_value());
  CHECK(!best_split(v, r, 3).has_value());  // leaf constraint unmet
  const std::vector<double> same{2, 2, 2, 2};
  CHECK(!best_split(same, r).has_value());
}

TEST_CASE("best_split tie goes to the lowest threshold") {
  // Splitting at 1.5 or 3.5 gives the same gain.
  const std::vector<double> v{1, 2, 3, 4}, r{1, 0, 0, 1};
  const auto s = best_split(v, r);
  REQUIRE(s.has_value());
  CHECK(s->threshold == 1.5);
}

TEST_CASE("n_trees 0 and constant labels") {
  const auto data = synthetic_data(1, 50, 3);
  GbdtParams p;
  p.n_trees = 0;
  const auto fit = fit_gbdt(data.x, data.reg, p, Objective::mse);
  double mean = 0.0;
  for (double y : data.reg) mean += y;
  mean /= static_cast<double>(data.reg.size());
  CHECK(fit.model.trees().empty());
  CHECK(fit.model.predict(data.x[7].values) == doctest::Approx(mean).epsilon(1e-14));
  CHECK(fit.training_loss.size() == 1);

  const std::vector<double> c(50, 2.5);
  p.n_trees = 10;
  p.min_samples_leaf = 1;
  const auto fc = fit_gbdt(data.x, c, p, Objective::mse);
  for (const auto& f : data.x) CHECK(fc.model.predict(f.values) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("two-leaf fit predicts the leaf values") {
  const auto x = column({1, 2, 10, 11});
  const std::vector<double> y{-1, -1, 1, 1};
  GbdtParams p;
  p.n_trees = 1;
  p.max_depth = 1;
  p.min_samples_leaf = 1;
  p.learning_rate = 1.0;
  const auto fit = fit_gbdt(x, y, p, Objective::mse);
  CHECK(fit.model.base_score() == 0.0);
  CHECK(fit.model.predict(x[0].values) == -1.0);
  CHECK(fit.model.predict(x[1].values) == -1.0);
  CHECK(fit.model.predict(x[2].values) == 1.0);
  CHECK(fit.model.predict(x[3].values) == 1.0);
  const auto& root = fit.model.trees()[0].nodes()[0];
  CHECK(root.feature == 0);
  CHECK(root.threshold == 6.0);
  CHECK(fit.model.predict(x[0].values) == fit.model.predict(x[0].values));
}

TEST_CASE("depth-1 fits match exhaustive search") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 300; ++i) {
    const auto inst = testing_support::random_stump_instance(rng);
    const auto why = testing_support::stump_mismatch(inst);
    CHECK_MESSAGE(why.empty(), "instance ", i, ": ", why);
  }
}

TEST_CASE("training loss never increases without subsampling") {
  const auto data = synthetic_data(3);
  GbdtParams p;
  p.n_trees = 40;
  p.max_depth = 3;
  p.min_samples_leaf = 5;
  for (double lr : {0.1, 1.0}) {
    p.learning_rate = lr;
    for (auto obj : {Objective::mse, Objective::logistic, Objective::hinge}) {
      const auto& y = obj == Objective::mse ? data.reg : data.cls;
      const auto fit = fit_gbdt(data.x, y, p, obj);
      REQUIRE(fit.training_loss.size() == 41);
      for (std::size_t t = 1; t < fit.training_loss.size(); ++t) {
        if (obj == Objective::mse) {
          CHECK(fit.training_loss[t] < fit.training_loss[t - 1]);
        } else {
          CHECK(fit.training_loss[t] <= fit.training_loss[t - 1]);
        }
      }
      CHECK(fit.training_loss.back() < fit.training_loss.front());
      std::vector<double> scores;
      for (const auto& f : data.x) scores.push_back(fit.model.predict(f.values));
      CHECK(objective_loss(obj, scores, y) == doctest::Approx(fit.training_loss.back()).epsilon(1e-12));
    }
  }
}

TEST_CASE("logistic base score is the log-odds; probabilities use a sigmoid") {
  const auto x = column({0, 1, 2, 3});
  const std::vector<double> y{1, 0, 0, 0};
  GbdtParams p;
  p.n_trees = 0;
  const auto fit = fit_gbdt(x, y, p, Objective::logistic);
  CHECK(fit.model.base_score() == doctest::Approx(std::log(0.25 / 0.75)));
  CHECK(fit.model.predict_probability(x[0].values) == doctest::Approx(0.25));
}

TEST_CASE("fit input errors") {
  GbdtParams p;
  CHECK(error_kind([&] { fit_gbdt({}, {}, p, Objective::mse); }) == ErrorKind::data);
  std::vector<PairFeature> x{{{1.0, 2.0}}, {{1.0}}};
  std::vector<double> y{0, 1};
  CHECK(error_kind([&] { fit_gbdt(x, y, p, Objective::mse); }) == ErrorKind::data);
  const auto x1 = column({1, 2});
  std::vector<double> y2{0, 2};
  CHECK(error_kind([&] { fit_gbdt(x1, y2, p, Objective::hinge); }) == ErrorKind::data);
  const auto fit = fit_gbdt(x1, y, p, Objective::mse);
  const std::vector<double> wrong{1.0, 2.0};
  CHECK(error_kind([&] { fit.model.predict(wrong); }) == ErrorKind::data);
  p.learning_rate = 0.0;
  CHECK(error_kind([&] { p.validate(); }) == ErrorKind::config);
}

TEST_CASE("model artifacts round-trip and fits are deterministic") {
  const auto data = synthetic_data(8);
  GbdtParams p;
  p.n_trees = 15;
  p.row_subsample = 0.7;
  p.seed = 4;
  const auto a = fit_gbdt(data.x, data.reg, p, Objective::mse);
  const auto b = fit_gbdt(data.x, data.reg, p, Objective::mse);
  CHECK(a.model.to_json() == b.model.to_json());
  CHECK(a.training_loss == b.training_loss);

  testing_support::TempDir dir;
  a.model.save(dir / "m.json");
  const auto loaded = GbdtModel::load(dir / "m.json");
  CHECK(loaded.to_json() == a.model.to_json());
  for (const auto& f : data.x) CHECK(loaded.predict(f.values) == a.model.predict(f.values));
  CHECK(error_kind([] { GbdtModel::from_json("{\"format\":\"other\"}"); }) == ErrorKind::data);

  // Without subsampling the seed is irrelevant.
  p.row_subsample = 1.0;
  p.seed = 1;
  const auto c = fit_gbdt(data.x, data.reg, p, Objective::mse);
  p.seed = 2;
  const auto d = fit_gbdt(data.x, data.reg, p, Objective::mse);
  CHECK(c.model.trees() .size() == d.model.trees().size());
  for (const auto& f : data.x) CHECK(c.model.predict(f.values) == d.model.predict(f.values));
}

TEST_CASE("tree validation rejects malformed trees") {
  RegressionTree loop({TreeNode{0, 0.5, 0, 0, 0.0}});
  CHECK(error_kind([&] { loop.validate(1); }) == ErrorKind::data);
  RegressionTree bad_feature({TreeNode{3, 0.5, 1, 2, 0.0}, TreeNode{}, TreeNode{}});
  CHECK(error_kind([&] { bad_feature.validate(2); }) == ErrorKind::data);
  RegressionTree ok({TreeNode{1, 0.5, 1, 2, 0.0}, TreeNode{-1, 0, -1, -1, -2.0}, TreeNode{-1, 0, -1, -1, 3.0}});
  CHECK_NOTHROW(ok.validate(2));
  const std::vector<double> lo{9.0, 0.1}, hi{0.0, 0.9};
  CHECK(ok.predict(lo) == -2.0);
  CHECK(ok.predict(hi) == 3.0);
}
