#include <catch2/catch.hpp>
#include <cmath>

#include "oracles.hpp"
#include "stv/svm.hpp"

using namespace stv;

TEST_CASE("separable two-point problem", "[svm]") {
  const std::vector<std::vector<double>> x = {{1, 0}, {0, 1}};
  const std::vector<int> y = {+1, -1};
  const LinearModel m = train_binary(x, y, 100.0);
  REQUIRE(m.decision(x[0]) > 0);
  REQUIRE(m.decision(x[1]) < 0);
  REQUIRE(std::fabs(m.decision(x[0])) >= 1.0 - 1e-3);
  REQUIRE(std::fabs(m.decision(x[1])) >= 1.0 - 1e-3);
}

TEST_CASE("conflicting duplicate points still train", "[svm]") {
  const std::vector<std::vector<double>> x = {{0.5, 0.5}, {0.5, 0.5}};
  const std::vector<int> y = {+1, -1};
  REQUIRE_NOTHROW(train_binary(x, y, 1.0));
}

TEST_CASE("input validation", "[svm]") {
  REQUIRE_THROWS_AS(train_binary({{1, 0}, {0, 1}}, {1, 1}, 1.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(train_binary({{1, 0}, {0, 1, 2}}, {1, -1}, 1.0),
                    std::invalid_argument);
}

TEST_CASE("random separable sets are fit with zero training error", "[svm]") {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) {
      std::vector<double> v(10);
      for (auto& s : v) s = rng.uniform(-1, 1);
      const bool pos = i % 2 == 0;
      v[0] += pos ? 3.0 : -3.0;  // wide margin along the first axis
      x.push_back(v);
      y.push_back(pos ? 1 : -1);
    }
    const LinearModel m = train_binary(x, y, 10.0);
    for (size_t i = 0; i < x.size(); ++i)
      REQUIRE(m.decision(x[i]) * y[i] > 0);
  }
}

TEST_CASE("solver objective matches a brute-force QP reference", "[svm]") {
  SplitMix64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 8 + int(rng.bounded(5));  // 8..12 points
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    int n_pos = 0;
    for (int i = 0; i < n; ++i) {
      const bool pos = i < 2 ? (i == 0) : rng.uniform() < 0.5;  // both present
      n_pos += pos;
      const double cx = pos ? 0.7 : -0.7;
      x.push_back({cx + rng.uniform(-1, 1), rng.uniform(-1, 1)});
      y.push_back(pos ? 1 : -1);
    }
    const double c = std::vector<double>{0.5, 1.0, 10.0}[trial % 3];

    const LinearModel m = train_binary(x, y, c, 1e-4);
    const double primal = oracle::svm_primal(x, y, c, m.w, m.b);
    const oracle::QpSolution ref = oracle::qp_reference(x, y, c);
    REQUIRE(ref.ok);
    REQUIRE(primal >= ref.dual_objective - 1e-9);  // weak duality
    REQUIRE(std::fabs(primal - ref.dual_objective) < 1e-3);
  }
}

TEST_CASE("dual objective increases monotonically and the gap closes",
          "[svm]") {
  SplitMix64 rng(4);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 24; ++i) {
    x.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    y.push_back(i % 2 ? 1 : -1);
  }
  SvmTrace trace;
  train_binary(x, y, 2.0, 1e-4, &trace);
  REQUIRE(trace.gap < 1e-4);
  REQUIRE_FALSE(trace.dual_objective.empty());
  for (size_t i = 1; i < trace.dual_objective.size(); ++i)
    REQUIRE(trace.dual_objective[i] >= trace.dual_objective[i - 1] - 1e-9);
}

TEST_CASE("feature scaling with C/c^2 keeps the decision signs", "[svm]") {
  SplitMix64 rng(6);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) {
    x.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    y.push_back(x.back()[0] + 0.3 * x.back()[1] > 0.1 ? 1 : -1);
  }
  const double c = 1.0, scale = 4.0;
  const LinearModel a = train_binary(x, y, c);
  auto xs = x;
  for (auto& row : xs)
    for (auto& v : row) v *= scale;
  const LinearModel b = train_binary(xs, y, c / (scale * scale));
  for (size_t i = 0; i < x.size(); ++i)
    REQUIRE((a.decision(x[i]) >= 0) == (b.decision(xs[i]) >= 0));
}

TEST_CASE("one-vs-one: pair count and two-class equivalence", "[svm]") {
  SplitMix64 rng(10);
  std::vector<std::vector<double>> x;
  std::vector<std::string> labels;
  for (int c = 0; c < 12; ++c)
    for (int i = 0; i < 3; ++i) {
      x.push_back({double(c) + 0.2 * rng.uniform(), rng.uniform()});
      labels.push_back("class" + std::string(1, char('a' + c)));
    }
  const OvoModel m = train_ovo(x, labels, 1.0);
  REQUIRE(m.n_pairs() == 66);  // 12*11/2

  std::vector<std::vector<double>> x2(x.begin(), x.begin() + 6);
  std::vector<std::string> l2(labels.begin(), labels.begin() + 6);
  const OvoModel m2 = train_ovo(x2, l2, 1.0);
  REQUIRE(m2.n_pairs() == 1);
  for (const auto& q : x2) {
    const std::string want =
        m2.models[0].decision(q) >= 0 ? m2.models[0].pos_class
                                      : m2.models[0].neg_class;
    REQUIRE(predict(m2, q) == want);
  }

  REQUIRE_THROWS_AS(train_ovo(x2, std::vector<std::string>(6, "same"), 1.0),
                    std::invalid_argument);
}

TEST_CASE("three separable clusters classify perfectly", "[svm]") {
  SplitMix64 rng(12);
  std::vector<std::vector<double>> x;
  std::vector<std::string> labels;
  const double cx[3] = {0.0, 5.0, 10.0}, cy[3] = {0.0, 5.0, 0.0};
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 8; ++i) {
      x.push_back({cx[c] + rng.uniform(-1, 1), cy[c] + rng.uniform(-1, 1)});
      labels.push_back(std::string(1, char('A' + c)));
    }
  const OvoModel m = train_ovo(x, labels, 10.0);
  REQUIRE(m.n_pairs() == 3);
  for (size_t i = 0; i < x.size(); ++i) REQUIRE(predict(m, x[i]) == labels[i]);
  const EvalReport r = evaluate(m, x, labels);
  REQUIRE(r.accuracy == 1.0);
  for (double rec : r.recall) REQUIRE(rec == 1.0);
}

TEST_CASE("vote cycles resolve by decision strength, then class order",
          "[svm]") {
  // hand-built cycle: ab votes a, bc votes b, ac votes c; one vote each
  OvoModel m;
  m.classes = {"a", "b", "c"};
  auto mk = [](double w0, double b, const std::string& pos,
               const std::string& neg) {
    LinearModel lm;
    lm.w = {w0};
    lm.b = b;
    lm.pos_class = pos;
    lm.neg_class = neg;
    return lm;
  };
  m.models = {mk(0.0, +0.5, "a", "b"),   // a wins, strength 0.5
              mk(0.0, +2.0, "b", "c"),   // b wins, strength 2.0
              mk(0.0, -1.0, "a", "c")};  // c wins, strength 1.0
  REQUIRE(predict(m, {0.0}) == "b");

  // equal strengths: first class in order wins
  m.models = {mk(0.0, +1.0, "a", "b"), mk(0.0, +1.0, "b", "c"),
              mk(0.0, -1.0, "a", "c")};
  REQUIRE(predict(m, {0.0}) == "a");
  REQUIRE(predict(m, {0.0}) == predict(m, {0.0}));
}

TEST_CASE("constant classifier recall pattern", "[svm]") {
  OvoModel m;
  m.classes = {"A", "B", "C"};
  auto mk = [](const std::string& pos, const std::string& neg, double b) {
    LinearModel lm;
    lm.w = {0.0};
    lm.b = b;
    lm.pos_class = pos;
    lm.neg_class = neg;
    return lm;
  };
  // A beats everyone; B beats C
  m.models = {mk("A", "B", 1.0), mk("A", "C", 1.0), mk("B", "C", 1.0)};
  std::vector<std::vector<double>> x(9, {0.0});
  std::vector<std::string> labels = {"A", "A", "A", "B", "B", "B",
                                     "C", "C", "C"};
  const EvalReport r = evaluate(m, x, labels);
  REQUIRE(r.recall[0] == 1.0);
  REQUIRE(r.recall[1] == 0.0);
  REQUIRE(r.recall[2] == 0.0);
  REQUIRE(r.accuracy == Approx(1.0 / 3.0));
  // confusion rows sum to the per-class support
  for (int c = 0; c < 3; ++c) {
    long s = 0;
    for (int p = 0; p < 3; ++p) s += r.confusion[c][p];
    REQUIRE(s == r.support[c]);
  }
}

TEST_CASE("model file round trip", "[svm]") {
  SplitMix64 rng(14);
  std::vector<std::vector<double>> x;
  std::vector<std::string> labels;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 6; ++i) {
      x.push_back({3.0 * c + rng.uniform(), rng.uniform()});
      labels.push_back(std::string(1, char('p' + c)));
    }
  const OvoModel m = train_ovo(x, labels, 1.0);
  const std::string bytes = ovo_to_bytes(m);
  const OvoModel back = ovo_from_bytes(bytes, "test");
  REQUIRE(back.classes == m.classes);
  REQUIRE(back.n_pairs() == m.n_pairs());
  for (int i = 0; i < m.n_pairs(); ++i) {
    REQUIRE(back.models[i].w == m.models[i].w);
    REQUIRE(back.models[i].b == m.models[i].b);
    REQUIRE(back.models[i].pos_class == m.models[i].pos_class);
  }
  for (const auto& q : x) REQUIRE(predict(back, q) == predict(m, q));
  REQUIRE(ovo_to_bytes(back) == bytes);
}

TEST_CASE("cross-validated C selection is deterministic and on-grid", "[svm]") {
  SplitMix64 rng(16);
  std::vector<std::vector<double>> x;
  std::vector<std::string> labels;
  for (int i = 0; i < 40; ++i) {
    x.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    labels.push_back(x.back()[0] > 0 ? "pos" : "neg");
  }
  const std::vector<double> grid = {0.1, 1.0, 10.0};
  const double a = select_c(x, labels, grid, 5, 3);
  const double b = select_c(x, labels, grid, 5, 3);
  REQUIRE(a == b);
  REQUIRE(std::count(grid.begin(), grid.end(), a) == 1);
}
