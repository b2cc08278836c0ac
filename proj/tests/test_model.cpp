#include <catch_amalgamated.hpp>

#include "metriclearn/model.hpp"
#include "metriclearn/rng.hpp"

using namespace metriclearn;
using Catch::Matchers::WithinAbs;

namespace {
Matrix random_sym(int m, RngStream& rng) {
  Matrix a(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) a(r, c) = rng.gaussian();
  return 0.5 * (a + a.transpose()).eval();
}
Matrix random_mat(int r, int c, RngStream& rng) {
  Matrix a(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) a(i, j) = rng.gaussian();
  return a;
}
std::vector<LabeledTriplet> random_samples(int n, int m, RngStream& rng) {
  std::vector<LabeledTriplet> out;
  const auto total = static_cast<std::uint64_t>(triplet_count(n));
  for (int s = 0; s < m; ++s) {
    const Triplet t = triplet_unrank(n, static_cast<std::int64_t>(rng.uniform_int(total)));
    out.push_back({t, rng.uniform() < 0.5 ? -1 : 1});
  }
  return out;
}
}  // namespace

TEST_CASE("link frozen examples") {
  LinkFunction f1{1.0};
  CHECK_THAT(f1.eval(0.0), WithinAbs(0.5, 1e-15));
  CHECK_THAT(f1.deriv(0.0), WithinAbs(-0.25, 1e-15));
  CHECK(f1.eval(1000.0) < 1e-300);  // saturates toward 0, no overflow
  CHECK(f1.eval(-1000.0) > 1.0 - 1e-12);

  LinkFunction f2{2.0};
  CHECK_THAT(f2.eval(1.0), WithinAbs(1.0 / (1.0 + std::exp(2.0)), 1e-15));

  // monotone decreasing
  for (double x = -5; x < 5; x += 0.25) CHECK(f1.eval(x) > f1.eval(x + 0.25));
}

TEST_CASE("c_f matches endpoint |f'|") {
  LinkFunction f{1.0};
  const double gamma = 2.0;
  const double fe = f.eval(gamma);
  CHECK_THAT(f.c_f(gamma), WithinAbs(fe * (1 - fe), 1e-15));
  CHECK_THAT(f.c_f(gamma), WithinAbs(std::abs(f.deriv(gamma)), 1e-15));
  // quarter e^-gamma lower bound holds for s=1
  CHECK(f.c_f(gamma) >= 0.25 * std::exp(-gamma) * (1 - 1e-12));
}

TEST_CASE("loss frozen values") {
  LossFunction logi{LossKind::LogisticLog, 1.0};
  LossFunction hinge{LossKind::Hinge, 1.0};
  LossFunction zo{LossKind::ZeroOne, 1.0};
  CHECK_THAT(logi.eval(0.0), WithinAbs(std::log(2.0), 1e-15));
  CHECK_THAT(logi.deriv(0.0), WithinAbs(-0.5, 1e-15));
  CHECK(hinge.eval(0.0) == 1.0);
  CHECK(hinge.eval(2.0) == 0.0);
  CHECK(hinge.deriv(1.0) == 0.0);  // kink choice
  CHECK(hinge.deriv(0.5) == -1.0);
  CHECK(zo.eval(-0.1) == 1.0);
  CHECK(zo.eval(0.1) == 0.0);
  CHECK_THROWS(zo.deriv(0.0));
}

TEST_CASE("logistic and hinge are 1-Lipschitz") {
  RngStream rng(3, 0, "model-lipschitz");
  for (auto kind : {LossKind::LogisticLog, LossKind::Hinge}) {
    LossFunction loss{kind, 1.0};
    for (int rep = 0; rep < 500; ++rep) {
      const double u1 = 20 * (rng.uniform() - 0.5), u2 = 20 * (rng.uniform() - 0.5);
      CHECK(std::abs(loss.eval(u1) - loss.eval(u2)) <= std::abs(u1 - u2) + 1e-12);
    }
  }
}

TEST_CASE("empirical risk frozen examples") {
  RngStream rng(9, 0, "model-emp");
  PointSet x(random_mat(3, 6, rng));
  const auto samples = random_samples(6, 40, rng);
  const Matrix zero = Matrix::Zero(3, 3);
  CHECK_THAT(empirical_risk(zero, x, samples, {LossKind::LogisticLog, 1.0}).value,
             WithinAbs(std::log(2.0), 1e-12));
  CHECK_THAT(empirical_risk(zero, x, samples, {LossKind::Hinge, 1.0}).value,
             WithinAbs(1.0, 1e-12));
  CHECK_THROWS(empirical_risk(zero, x, {}, {LossKind::Hinge, 1.0}));
}

TEST_CASE("hinge gradient vanishes when all margins exceed 1") {
  // X = I, K large multiple of identity-like structure giving margins > 1
  PointSet x(Matrix::Identity(4, 4));
  Matrix k = Matrix::Zero(4, 4);
  k(0, 0) = 10.0;
  // l(K,t) = 2K_ik - 2K_ij + K_jj - K_kk = -K_00 = -10 for both triplets,
  // so with y = -1 the hinge margins are +10, well past the kink.
  std::vector<LabeledTriplet> samples = {{Triplet(1, 2, 0), -1},
                                         {Triplet(2, 3, 0), -1}};
  const Matrix g = risk_gradient(k, x, samples, {LossKind::Hinge, 1.0});
  CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient matches central finite differences") {
  RngStream rng(17, 0, "model-grad");
  const double h = 1e-5;
  for (int inst = 0; inst < 20; ++inst) {
    const int p = 2 + static_cast<int>(rng.uniform_int(2));
    const int n = 5;
    PointSet x(random_mat(p, n, rng));
    Matrix k = random_sym(p, rng);
    const auto samples = random_samples(n, 50, rng);
    const LossFunction loss =
        inst % 2 == 0 ? LossFunction{LossKind::LogisticLog, 1.0}
                      : LossFunction{LossKind::Hinge, 1.0};
    const Matrix grad = risk_gradient(k, x, samples, loss);
    double max_rel = 0.0;
    for (int a = 0; a < p; ++a)
      for (int b = a; b < p; ++b) {
        Matrix kp = k, km = k;
        kp(a, b) += h;
        kp(b, a) = kp(a, b);
        km(a, b) -= h;
        km(b, a) = km(a, b);
        const double fd = (empirical_risk(kp, x, samples, loss).value -
                           empirical_risk(km, x, samples, loss).value) /
                          (2 * h);
        // symmetric perturbation hits both (a,b) and (b,a) of the gradient
        const double an = a == b ? grad(a, a) : grad(a, b) + grad(b, a);
        const double scale = std::max({1.0, std::abs(fd), std::abs(an)});
        max_rel = std::max(max_rel, std::abs(fd - an) / scale);
      }
    CHECK(max_rel < 1e-5);
  }
}

TEST_CASE("risk_value_and_gradient agrees with the separate calls") {
  RngStream rng(21, 0, "model-fused");
  PointSet x(random_mat(3, 6, rng));
  const Matrix k = random_sym(3, rng);
  const auto samples = random_samples(6, 30, rng);
  const LossFunction loss{LossKind::LogisticLog, 1.0};
  Matrix grad;
  const double v = risk_value_and_gradient(k, x, samples, loss, grad);
  CHECK_THAT(v, WithinAbs(empirical_risk(k, x, samples, loss).value, 1e-13));
  CHECK((grad - risk_gradient(k, x, samples, loss)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("true risk with zero margins is log 2") {
  PointSet x(Matrix::Identity(5, 5));
  const Matrix kstar = Matrix::Identity(5, 5);  // all margins zero at X=I
  const Matrix k = Matrix::Zero(5, 5);
  const auto r = true_risk(k, kstar, x, LinkFunction{1.0},
                           {LossKind::LogisticLog, 1.0});
  CHECK_THAT(r.value, WithinAbs(std::log(2.0), 1e-12));
}

TEST_CASE("excess risk identities") {
  RngStream rng(27, 0, "model-excess");
  const int p = 3, n = 8;
  PointSet x(random_mat(p, n, rng));
  const Matrix kstar = [&] {
    const Matrix u = random_mat(p, 2, rng);
    return Matrix(u * u.transpose());
  }();
  const Matrix k = kstar + 0.3 * random_sym(p, rng);
  const LinkFunction link{1.0};
  const LossFunction loss{LossKind::LogisticLog, 1.0};

  // KL form equals risk difference under the log loss
  const double diff = true_risk(k, kstar, x, link, loss).value -
                      true_risk(kstar, kstar, x, link, loss).value;
  const double kl = excess_risk_kl(k, kstar, x, link).value;
  CHECK_THAT(kl, WithinAbs(diff, 1e-10));
  CHECK(kl >= 0.0);
  CHECK_THAT(excess_risk_kl(kstar, kstar, x, link).value, WithinAbs(0.0, 1e-14));

  // per-term scalar: KL(0.75 || 0.25) = 0.5 ln 3
  CHECK_THAT(kl_bernoulli(0.75, 0.25), WithinAbs(0.5 * std::log(3.0), 1e-12));

  // lower bound via C_f over the observed margin range
  const Matrix g = gram_of(x, k), gstar = gram_of(x, kstar);
  double gamma = 0.0;
  for (const Triplet& t : TripletRange(n))
    gamma = std::max({gamma, std::abs(l_value(g, t)), std::abs(l_value(gstar, t))});
  const double cf = link.c_f(gamma);
  double sq = 0.0;
  std::int64_t count = 0;
  for (const Triplet& t : TripletRange(n)) {
    const double d = l_value(g, t) - l_value(gstar, t);
    sq += d * d;
    ++count;
  }
  CHECK(kl >= 2.0 * cf * cf * sq / static_cast<double>(count) - 1e-12);
}

TEST_CASE("monte carlo true risk is consistent with the exact sum") {
  RngStream rng(33, 0, "model-mc");
  const int p = 3, n = 12;
  PointSet x(random_mat(p, n, rng));
  const Matrix kstar = [&] {
    const Matrix u = random_mat(p, 2, rng);
    return Matrix(u * u.transpose());
  }();
  const Matrix k = 0.5 * kstar;
  const LinkFunction link{1.0};
  const LossFunction loss{LossKind::LogisticLog, 1.0};
  const auto exact = true_risk(k, kstar, x, link, loss, EvalSet::Full());
  const auto mc = true_risk(k, kstar, x, link, loss, EvalSet::MonteCarlo(100000, 4242));
  CHECK(mc.stderr_ > 0.0);
  CHECK(std::abs(mc.value - exact.value) < 3.0 * mc.stderr_ + 1e-12);
  // determinism of the MC stream
  const auto mc2 = true_risk(k, kstar, x, link, loss, EvalSet::MonteCarlo(100000, 4242));
  CHECK(mc2.value == mc.value);
}
