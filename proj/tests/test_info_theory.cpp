#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "demonlab/info_theory.hpp"

using namespace demonlab;
using namespace demonlab::info;

namespace {

// 40-digit reference values, computed outside the library.
constexpr double kH14 = 0.8112781244591328639;

Matrix ginibre(std::mt19937_64& g, int n, int m) {
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix a(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = Complex(N(g), N(g));
  return a;
}

DensityMatrix random_state(std::mt19937_64& g, int n) {
  std::uniform_int_distribution<int> rank(1, n);
  Matrix a = ginibre(g, n, rank(g));
  Matrix r = a * a.adjoint();
  r /= r.trace().real();
  return DensityMatrix(0.5 * (r + r.adjoint()));
}

Matrix random_unitary(std::mt19937_64& g, int n) {
  Eigen::HouseholderQR<Matrix> qr(ginibre(g, n, n));
  return qr.householderQ();
}

Matrix ket(int n, int i) {
  Matrix v = Matrix::Zero(n, 1);
  v(i, 0) = 1.0;
  return v;
}

// sum_i p_i |i><i| (x) |i+1><i+1| in a demon space with one blank state.
DensityMatrix correlated_state(const std::vector<double>& p) {
  const int n = static_cast<int>(p.size());
  Matrix r = Matrix::Zero(n * (n + 1), n * (n + 1));
  for (int i = 0; i < n; ++i) r += p[i] * kron(ket(n, i) * ket(n, i).adjoint(), ket(n + 1, i + 1) * ket(n + 1, i + 1).adjoint());
  return DensityMatrix(r);
}

}  // namespace

TEST(Shannon, Examples) {
  EXPECT_NEAR(shannon_entropy(ProbabilityDistribution({0.5, 0.5})), 1.0, 1e-15);
  EXPECT_EQ(shannon_entropy(ProbabilityDistribution({1.0, 0.0})), 0.0);
  EXPECT_NEAR(shannon_entropy(ProbabilityDistribution({0.25, 0.75})), kH14, 1e-15);
}

TEST(Shannon, RejectsInvalid) {
  EXPECT_THROW(ProbabilityDistribution({-0.1, 1.1}), InvalidInput);
  EXPECT_THROW(ProbabilityDistribution({0.5, 0.4}), InvalidInput);
  EXPECT_THROW(ProbabilityDistribution(std::vector<double>{}), InvalidInput);
}

TEST(BinaryEntropy, MatchesShannon) {
  for (double p = 0.01; p < 1.0; p += 0.07)
    EXPECT_NEAR(binary_entropy(p), shannon_entropy(ProbabilityDistribution({p, 1.0 - p})), 1e-15);
  EXPECT_EQ(binary_entropy(0.0), 0.0);
  EXPECT_EQ(binary_entropy(1.0), 0.0);
}

TEST(VonNeumann, Examples) {
  EXPECT_NEAR(von_neumann_entropy(DensityMatrix::diagonal({0.5, 0.5})), 1.0, 1e-14);
  Vector psi(3);
  psi << Complex(1, 2), Complex(0, -1), 0.5;
  EXPECT_NEAR(von_neumann_entropy(DensityMatrix::pure(psi)), 0.0, 1e-12);
  EXPECT_NEAR(von_neumann_entropy(DensityMatrix::diagonal({0.25, 0.75})), kH14, 1e-14);
}

TEST(DensityMatrixTest, RejectsInvalid) {
  Matrix m(2, 2);
  m << 0.5, 0.1, 0.2, 0.5;
  EXPECT_THROW(DensityMatrix{m}, InvalidInput);
  EXPECT_THROW(DensityMatrix::diagonal({0.5, 0.6}), InvalidInput);
  EXPECT_THROW(DensityMatrix::diagonal({1.1, -0.1}), InvalidInput);
  EXPECT_THROW(DensityMatrix{Matrix::Identity(65, 65) / 65.0}, InvalidInput);
}

TEST(DensityMatrixTest, ClampsRoundingNoise) {
  const DensityMatrix r = DensityMatrix::diagonal({1.0 + 5e-11, -5e-11});
  EXPECT_GE(r.eigenvalues().front(), 0.0);
  EXPECT_NEAR(von_neumann_entropy(r), 0.0, 1e-9);
}

TEST(PartialTrace, SystemMajorOrdering) {
  std::mt19937_64 g(3);
  const DensityMatrix a = random_state(g, 2), b = random_state(g, 3);
  const DensityMatrix ab = kron(a, b);
  EXPECT_LT((reduce_to_system(ab, 2, 3).matrix() - a.matrix()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((reduce_to_demon(ab, 2, 3).matrix() - b.matrix()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(reduce_to_system(ab, 2, 2), InvalidInput);
}

TEST(MutualInformation, Examples) {
  std::mt19937_64 g(5);
  const DensityMatrix prod = kron(random_state(g, 2), random_state(g, 3));
  EXPECT_NEAR(mutual_information(prod, 2, 3), 0.0, 1e-10);

  Matrix c = Matrix::Zero(4, 4);
  c(0, 0) = 0.5;
  c(3, 3) = 0.5;
  EXPECT_NEAR(mutual_information(DensityMatrix(c), 2, 2), 1.0, 1e-14);

  EXPECT_NEAR(mutual_information(correlated_state({0.25, 0.75}), 2, 3), kH14, 1e-12);
  EXPECT_THROW(mutual_information(prod, 3, 3), InvalidInput);
}

TEST(Holevo, Examples) {
  std::mt19937_64 g(11);
  EXPECT_NEAR(holevo_chi(ProbabilityDistribution({1.0}), {random_state(g, 3)}), 0.0, 1e-12);
  EXPECT_NEAR(holevo_chi(ProbabilityDistribution({0.5, 0.5}),
                         {DensityMatrix::basis_state(2, 0), DensityMatrix::basis_state(2, 1)}),
              1.0, 1e-12);
  EXPECT_NEAR(holevo_chi(ProbabilityDistribution({0.25, 0.75}),
                         {DensityMatrix::basis_state(2, 0), DensityMatrix::basis_state(2, 1)}),
              kH14, 1e-12);
  EXPECT_THROW(holevo_chi(ProbabilityDistribution({0.5, 0.5}), {DensityMatrix::basis_state(2, 0)}), InvalidInput);
  EXPECT_THROW(holevo_chi(ProbabilityDistribution({0.5, 0.5}),
                          {DensityMatrix::basis_state(2, 0), DensityMatrix::basis_state(3, 0)}),
               InvalidInput);
}

TEST(Projectors, Validation) {
  EXPECT_NO_THROW(ProjectorSet::computational_basis(4));
  std::mt19937_64 g(2);
  EXPECT_NO_THROW(ProjectorSet::from_basis(random_unitary(g, 3)));
  Matrix p = Matrix::Zero(2, 2);
  p(0, 0) = 1.0;
  EXPECT_THROW(ProjectorSet({p}), InvalidInput);                      // not exhaustive
  EXPECT_THROW(ProjectorSet({p, p, Matrix::Zero(2, 2)}), InvalidInput);  // overlapping
  Matrix half = Matrix::Identity(2, 2) * 0.5;
  EXPECT_THROW(ProjectorSet({half, half}), InvalidInput);              // not idempotent
}

TEST(MeasurementUnitaryTest, InvolutionAndUnitarity) {
  const auto u = build_measurement_unitary(ProjectorSet::computational_basis(2), 0, {1, 2}, 3);
  EXPECT_LT(u.involution_error(), 1e-12);
  EXPECT_LT(u.unitarity_error(), 1e-12);
  EXPECT_EQ(u.matrix().rows(), 6);
}

TEST(MeasurementUnitaryTest, RejectsBadRecords) {
  const auto z = ProjectorSet::computational_basis(2);
  EXPECT_THROW(build_measurement_unitary(z, 0, {1, 1}, 3), InvalidInput);
  EXPECT_THROW(build_measurement_unitary(z, 0, {0, 1}, 3), InvalidInput);
  EXPECT_THROW(build_measurement_unitary(z, 0, {1, 3}, 3), InvalidInput);
  EXPECT_THROW(build_measurement_unitary(z, 0, {1}, 3), InvalidInput);
}

TEST(MeasurementUnitaryTest, WritesTheRecord) {
  const auto u = build_measurement_unitary(ProjectorSet::computational_basis(2), 0, {1, 2}, 3);
  // |1>|blank> -> |1>|record 2>, index s*3 + d.
  EXPECT_EQ(u.matrix()(1 * 3 + 2, 1 * 3 + 0), Complex(1.0));
  EXPECT_EQ(u.matrix()(0 * 3 + 1, 0 * 3 + 0), Complex(1.0));
}

TEST(Audit, CommutingDiagonal) {
  const auto a = measurement_entropy_audit(DensityMatrix::diagonal({0.25, 0.75}), ProjectorSet::computational_basis(2), 3);
  EXPECT_TRUE(a.commuting);
  EXPECT_FALSE(a.holevo_chi.has_value());
  EXPECT_NEAR(a.joint_entropy_change, 0.0, 1e-10);
  EXPECT_NEAR(a.delta_H_D, kH14, 1e-12);
  EXPECT_NEAR(a.delta_I_SD, kH14, 1e-12);
}

TEST(Audit, CertainOutcome) {
  const auto a = measurement_entropy_audit(DensityMatrix::basis_state(2, 0), ProjectorSet::computational_basis(2), 3);
  EXPECT_NEAR(a.delta_H_D, 0.0, 1e-12);
  EXPECT_NEAR(a.delta_I_SD, 0.0, 1e-12);
}

TEST(Audit, NonCommutingPlusState) {
  Vector plus(2);
  plus << 1.0, 1.0;
  const auto a = measurement_entropy_audit(DensityMatrix::pure(plus), ProjectorSet::computational_basis(2), 3);
  EXPECT_FALSE(a.commuting);
  ASSERT_TRUE(a.holevo_chi.has_value());
  EXPECT_NEAR(*a.holevo_chi, 1.0, 1e-12);
  EXPECT_NEAR(a.delta_H_D, 1.0, 1e-12);
  EXPECT_NEAR(a.delta_I_SD, a.delta_H_D, 1e-10);
  // The coupling alone keeps the joint state pure; reading it out costs chi.
  EXPECT_NEAR(a.H_coherent, 0.0, 1e-10);
  EXPECT_NEAR(a.joint_entropy_change, *a.holevo_chi, 1e-10);
}

// Properties over randomly generated states and bases.

TEST(Property, EntropyBounds) {
  std::mt19937_64 g(101);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(g() % 8);
    const double h = von_neumann_entropy(random_state(g, n));
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log2(n) + 1e-12);
  }
}

TEST(Property, UnitaryInvariance) {
  std::mt19937_64 g(102);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(g() % 6);
    const DensityMatrix r = random_state(g, n);
    const Matrix u = random_unitary(g, n);
    Matrix m = u * r.matrix() * u.adjoint();
    const DensityMatrix rr(0.5 * (m + m.adjoint()));
    EXPECT_NEAR(von_neumann_entropy(rr), von_neumann_entropy(r), 1e-10);
  }
}

TEST(Property, InvolutionForRandomBases) {
  std::mt19937_64 g(103);
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(g() % 4);
    const auto projs = ProjectorSet::from_basis(random_unitary(g, n));
    std::vector<std::size_t> deltas;
    for (int i = 0; i < n; ++i) deltas.push_back(static_cast<std::size_t>(i + 1));
    const auto u = build_measurement_unitary(projs, 0, deltas, static_cast<std::size_t>(n + 1));
    EXPECT_LT(u.involution_error(), 1e-12);
    EXPECT_LT(u.unitarity_error(), 1e-12);
  }
}

TEST(Property, CorrelationIdentity) {
  std::mt19937_64 g(104);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(g() % 4);
    std::vector<double> p(static_cast<std::size_t>(n));
    double s = 0.0;
    for (double& x : p) s += (x = U(g));
    for (double& x : p) x /= s;
    EXPECT_NEAR(mutual_information(correlated_state(p), static_cast<std::size_t>(n), static_cast<std::size_t>(n + 1)),
                shannon_entropy(ProbabilityDistribution(p)), 1e-10);
  }
}

TEST(Property, HolevoNonNegativeAndZeroForEqualComponents) {
  std::mt19937_64 g(105);
  std::uniform_real_distribution<double> U(0.05, 1.0);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(g() % 4);
    const int k = 1 + static_cast<int>(g() % 4);
    std::vector<double> p(static_cast<std::size_t>(k));
    double s = 0.0;
    for (double& x : p) s += (x = U(g));
    for (double& x : p) x /= s;
    std::vector<DensityMatrix> comps, same;
    const DensityMatrix fixed = random_state(g, n);
    for (int i = 0; i < k; ++i) {
      comps.push_back(random_state(g, n));
      same.push_back(fixed);
    }
    EXPECT_GE(holevo_chi(ProbabilityDistribution(p), comps), -1e-10);
    EXPECT_NEAR(holevo_chi(ProbabilityDistribution(p), same), 0.0, 1e-10);
  }
}

TEST(Property, AuditIdentity) {
  std::mt19937_64 g(106);
  int noncommuting = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(g() % 3);
    const DensityMatrix r = random_state(g, n);
    const auto projs = (t % 3 == 0) ? ProjectorSet::computational_basis(static_cast<std::size_t>(n))
                                    : ProjectorSet::from_basis(random_unitary(g, n));
    const auto a = measurement_entropy_audit(r, projs, static_cast<std::size_t>(n + 1));
    EXPECT_NEAR(a.delta_H_D, a.delta_I_SD, 1e-10);
    EXPECT_GE(a.joint_entropy_change, -1e-10);
    if (!a.commuting) {
      ++noncommuting;
      ASSERT_TRUE(a.holevo_chi.has_value());
      EXPECT_GE(*a.holevo_chi, -1e-10);
    }
  }
  EXPECT_GT(noncommuting, 50);
}

TEST(Property, CommutingMeasurementKeepsJointEntropy) {
  std::mt19937_64 g(107);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(g() % 4);
    std::vector<double> d(static_cast<std::size_t>(n));
    double s = 0.0;
    for (double& x : d) s += (x = U(g));
    for (double& x : d) x /= s;
    const auto a =
        measurement_entropy_audit(DensityMatrix::diagonal(d), ProjectorSet::computational_basis(static_cast<std::size_t>(n)),
                                  static_cast<std::size_t>(n + 1));
    EXPECT_TRUE(a.commuting);
    EXPECT_NEAR(a.joint_entropy_change, 0.0, 1e-10);
    EXPECT_NEAR(a.delta_H_D, shannon_entropy(ProbabilityDistribution(d)), 1e-10);
  }
}
