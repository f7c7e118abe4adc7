#include <surfdarcy/verification.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace surfdarcy;

namespace {

SparseMatrix from_dense(const Eigen::MatrixXd &d) {
  return d.sparseView();
}

SparseMatrix random_sparse(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> col(0, n - 1);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 4.0 + u(rng));
    for (int k = 0; k < 4; ++k)
      t.emplace_back(i, col(rng), u(rng));
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

} // namespace

TEST(SparseLU, Identity) {
  SparseMatrix eye(5, 5);
  eye.setIdentity();
  const SparseLU lu(eye);
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(5, 1, 5);
  EXPECT_LE((lu.solve(b) - b).norm(), 1e-15);
  EXPECT_LE((lu.solve_transpose(b) - b).norm(), 1e-15);
}

TEST(SparseLU, RecoversRandomSolution) {
  const int n = 400;
  const auto a = random_sparse(n, 42);
  const Eigen::VectorXd x = Eigen::VectorXd::Random(n);
  const SparseLU lu(a);
  EXPECT_LE((lu.solve(a * x) - x).norm() / x.norm(), 1e-9);
  const SparseMatrix at = a.transpose();
  EXPECT_LE((lu.solve_transpose(at * x) - x).norm() / x.norm(), 1e-9);
}

TEST(SparseLU, SingularMatrixNamesPivot) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(4, 4);
  d(2, 2) = 0.0;
  try {
    SparseLU lu(from_dense(d));
    FAIL() << "expected an exception";
  } catch (const NumericalError &e) {
    EXPECT_NE(std::string(e.what()).find("singular"), std::string::npos);
  }
}

TEST(SparseLU, RejectsBadShapes) {
  EXPECT_THROW(SparseLU(SparseMatrix(3, 4)), ConfigError);
  SparseMatrix eye(3, 3);
  eye.setIdentity();
  const SparseLU lu(eye);
  EXPECT_THROW(lu.solve(Eigen::VectorXd::Ones(4)), ConfigError);
}

TEST(SolveSystem, TorusCaseOneLevelOne) {
  StudyConfig cfg;
  auto ls = assemble_level(cfg, 1);
  const auto s = solve(ls.system);
  EXPECT_LT(s.relative_residual(), 1e-10);
  EXPECT_EQ(s.u[0].size(), ls.velocity->num_dofs());
  EXPECT_EQ(s.p.size(), ls.pressure->num_dofs());
  const Eigen::VectorXd x = pack(s, ls.system.layout);
  const auto back = unpack(x, ls.system.layout);
  EXPECT_EQ(back.p, s.p);
  EXPECT_EQ(back.multiplier, s.multiplier);
  const auto released = solve_and_release(ls.system);
  EXPECT_EQ(ls.system.matrix.nonZeros(), 0);
  EXPECT_LE((released.p - s.p).norm(), 1e-10 * s.p.norm());
}

TEST(ConditionEstimate, DiagonalMatrix) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 10.0;
  const auto est = estimate_condition(from_dense(d));
  EXPECT_NEAR(est.value, 10.0, 1e-6);
  EXPECT_NEAR(est.sigma_max, 10.0, 1e-6);
  EXPECT_NEAR(est.sigma_min, 1.0, 1e-6);
  EXPECT_FALSE(est.approximate);
}

TEST(ConditionEstimate, PermutationIsPerfectlyConditioned) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(4, 4);
  d(0, 2) = d(1, 0) = d(2, 3) = d(3, 1) = 1.0;
  EXPECT_NEAR(estimate_condition(from_dense(d)).value, 1.0, 1e-10);
}

TEST(ConditionEstimate, MatchesDenseSvd) {
  const auto a = random_sparse(60, 7);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(a)};
  const double exact = svd.singularValues()(0) / svd.singularValues()(59);
  const auto est = estimate_condition(a, 200, 1e-8);
  EXPECT_NEAR(est.value / exact, 1.0, 0.05);
}

TEST(ConditionEstimate, InvariantUnderRowPermutation) {
  const auto a = random_sparse(80, 9);
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm(80);
  perm.setIdentity();
  std::mt19937_64 rng(1);
  std::shuffle(perm.indices().data(), perm.indices().data() + 80, rng);
  const SparseMatrix pa = perm * a;
  const double c1 = estimate_condition(a, 200, 1e-8).value;
  const double c2 = estimate_condition(pa, 200, 1e-8).value;
  EXPECT_NEAR(c2 / c1, 1.0, 0.05);
}

TEST(ConditionEstimate, FlagsIterationCap) {
  const auto a = random_sparse(200, 11);
  EXPECT_TRUE(estimate_condition(a, 1, 1e-14).approximate);
}
