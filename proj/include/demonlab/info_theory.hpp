#pragma once

// Entropies, mutual information and the measurement-as-unitary model on small
// density matrices. All logarithms are base 2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "demonlab/errors.hpp"

namespace demonlab::info {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr std::size_t kMaxDim = 64;
inline constexpr double kTolerance = 1e-12;
inline constexpr double kEigenSlack = 1e-10;

namespace detail {

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double xlg(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

// Entropy of a spectrum; tiny negative eigenvalues are rounding noise.
inline double spectrum_entropy(const std::vector<double>& eig) {
  double h = 0.0;
  for (double v : eig) {
    if (v < -kEigenSlack) throw InvalidInput("negative eigenvalue " + std::to_string(v));
    h -= xlg(std::max(v, 0.0));
  }
  return h < 0.0 ? 0.0 : h;
}

}  // namespace detail

class ProbabilityDistribution {
 public:
  ProbabilityDistribution() = default;

  explicit ProbabilityDistribution(std::vector<double> weights) : w_(std::move(weights)) {
    if (w_.empty()) throw InvalidInput("empty distribution");
    double sum = 0.0;
    for (double x : w_) {
      if (!(x >= 0.0)) throw InvalidInput("negative or NaN probability");
      sum += x;
    }
    if (std::abs(sum - 1.0) > kTolerance) throw InvalidInput("probabilities do not sum to 1");
  }

  const std::vector<double>& weights() const noexcept { return w_; }
  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }

 private:
  std::vector<double> w_;
};

class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) throw InvalidInput("density matrix must be square");
    if (static_cast<std::size_t>(m_.rows()) > kMaxDim) throw InvalidInput("density matrix dimension above 64");
    if (detail::max_abs(m_ - m_.adjoint()) > kTolerance) throw InvalidInput("density matrix not Hermitian");
    const Complex tr = m_.trace();
    if (std::abs(tr.real() - 1.0) > kTolerance || std::abs(tr.imag()) > kTolerance)
      throw InvalidInput("density matrix trace is not 1");
    m_ = (0.5 * (m_ + m_.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    eig_.assign(ev.data(), ev.data() + ev.size());
    if (eig_.front() < -kEigenSlack) throw InvalidInput("density matrix not positive semidefinite");
    for (double& v : eig_) v = std::max(v, 0.0);
  }

  static DensityMatrix diagonal(const std::vector<double>& d) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return DensityMatrix(std::move(m));
  }

  static DensityMatrix pure(const Vector& psi) {
    const double n = psi.norm();
    if (n == 0.0) throw InvalidInput("zero state vector");
    const Vector v = psi / n;
    return DensityMatrix(v * v.adjoint());
  }

  static DensityMatrix basis_state(std::size_t dim, std::size_t index) {
    if (index >= dim) throw InvalidInput("basis index out of range");
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return pure(v);
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }
  /// Ascending, clamped at zero.
  const std::vector<double>& eigenvalues() const noexcept { return eig_; }

 private:
  Matrix m_;
  std::vector<double> eig_;
};

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline DensityMatrix kron(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix(kron(a.matrix(), b.matrix()));
}

namespace detail {

inline void check_split(std::size_t dim, std::size_t dim_s, std::size_t dim_d) {
  if (dim_s == 0 || dim_d == 0 || dim_s * dim_d != dim) throw InvalidInput("dimension mismatch");
}

}  // namespace detail

// Joint index is s * dim_d + d.
inline DensityMatrix reduce_to_system(const DensityMatrix& rho, std::size_t dim_s, std::size_t dim_d) {
  detail::check_split(rho.dim(), dim_s, dim_d);
  const auto ns = static_cast<Eigen::Index>(dim_s), nd = static_cast<Eigen::Index>(dim_d);
  Matrix out = Matrix::Zero(ns, ns);
  for (Eigen::Index s = 0; s < ns; ++s)
    for (Eigen::Index t = 0; t < ns; ++t)
      for (Eigen::Index d = 0; d < nd; ++d) out(s, t) += rho.matrix()(s * nd + d, t * nd + d);
  return DensityMatrix(std::move(out));
}

inline DensityMatrix reduce_to_demon(const DensityMatrix& rho, std::size_t dim_s, std::size_t dim_d) {
  detail::check_split(rho.dim(), dim_s, dim_d);
  const auto ns = static_cast<Eigen::Index>(dim_s), nd = static_cast<Eigen::Index>(dim_d);
  Matrix out = Matrix::Zero(nd, nd);
  for (Eigen::Index d = 0; d < nd; ++d)
    for (Eigen::Index e = 0; e < nd; ++e)
      for (Eigen::Index s = 0; s < ns; ++s) out(d, e) += rho.matrix()(s * nd + d, s * nd + e);
  return DensityMatrix(std::move(out));
}

inline double shannon_entropy(const ProbabilityDistribution& p) {
  double h = 0.0;
  for (double x : p.weights()) h -= detail::xlg(x);
  return h < 0.0 ? 0.0 : h;
}

/// h(p) = -p lg p - (1-p) lg(1-p), with h(0) = h(1) = 0.
inline double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("binary_entropy: p outside [0,1]");
  return -detail::xlg(p) - detail::xlg(1.0 - p);
}

inline double von_neumann_entropy(const DensityMatrix& rho) {
  return detail::spectrum_entropy(rho.eigenvalues());
}

inline double mutual_information(const DensityMatrix& rho_sd, std::size_t dim_s, std::size_t dim_d) {
  detail::check_split(rho_sd.dim(), dim_s, dim_d);
  return von_neumann_entropy(reduce_to_system(rho_sd, dim_s, dim_d)) +
         von_neumann_entropy(reduce_to_demon(rho_sd, dim_s, dim_d)) - von_neumann_entropy(rho_sd);
}

inline double holevo_chi(const ProbabilityDistribution& p, const std::vector<DensityMatrix>& components) {
  if (components.empty() || components.size() != p.size()) throw InvalidInput("holevo_chi: dimension mismatch");
  const std::size_t dim = components.front().dim();
  Matrix avg = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  double mixed = 0.0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (components[i].dim() != dim) throw InvalidInput("holevo_chi: dimension mismatch");
    avg += p[i] * components[i].matrix();
    mixed += p[i] * von_neumann_entropy(components[i]);
  }
  // Renormalise away the 1e-12 slack allowed in the weights.
  avg /= avg.trace().real();
  return von_neumann_entropy(DensityMatrix(std::move(avg))) - mixed;
}

class ProjectorSet {
 public:
  explicit ProjectorSet(std::vector<Matrix> projectors) : p_(std::move(projectors)) {
    if (p_.empty()) throw InvalidInput("empty projector set");
    const auto n = p_.front().rows();
    if (n == 0 || static_cast<std::size_t>(n) > kMaxDim) throw InvalidInput("projector dimension out of range");
    Matrix sum = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < p_.size(); ++i) {
      const Matrix& a = p_[i];
      if (a.rows() != n || a.cols() != n) throw InvalidInput("projector dimension mismatch");
      if (detail::max_abs(a - a.adjoint()) > kTolerance) throw InvalidInput("projector not Hermitian");
      if (detail::max_abs(a * a - a) > kTolerance) throw InvalidInput("projector not idempotent");
      for (std::size_t j = 0; j < i; ++j)
        if (std::abs((a * p_[j]).trace()) > kTolerance) throw InvalidInput("projectors not mutually exclusive");
      sum += a;
    }
    if (detail::max_abs(sum - Matrix::Identity(n, n)) > kTolerance) throw InvalidInput("projectors not exhaustive");
  }

  static ProjectorSet computational_basis(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    std::vector<Matrix> ps;
    for (Eigen::Index i = 0; i < n; ++i) {
      Matrix p = Matrix::Zero(n, n);
      p(i, i) = 1.0;
      ps.push_back(std::move(p));
    }
    return ProjectorSet(std::move(ps));
  }

  /// Rank-one projectors onto the columns of a unitary.
  static ProjectorSet from_basis(const Matrix& basis) {
    std::vector<Matrix> ps;
    for (Eigen::Index c = 0; c < basis.cols(); ++c) ps.push_back(basis.col(c) * basis.col(c).adjoint());
    return ProjectorSet(std::move(ps));
  }

  std::size_t size() const noexcept { return p_.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(p_.front().rows()); }
  const Matrix& operator[](std::size_t i) const { return p_[i]; }
  const std::vector<Matrix>& projectors() const noexcept { return p_; }

 private:
  std::vector<Matrix> p_;
};

class MeasurementUnitary {
 public:
  MeasurementUnitary(Matrix u, std::size_t dim_s, std::size_t dim_d, std::size_t delta_o,
                     std::vector<std::size_t> deltas)
      : u_(std::move(u)), dim_s_(dim_s), dim_d_(dim_d), delta_o_(delta_o), deltas_(std::move(deltas)) {
    const auto n = static_cast<Eigen::Index>(dim_s_ * dim_d_);
    if (u_.rows() != n || u_.cols() != n) throw InvalidInput("unitary dimension mismatch");
    if (unitarity_error() > kTolerance) throw InvalidInput("matrix is not unitary");
    if (involution_error() > kTolerance) throw InvalidInput("matrix is not an involution");
  }

  const Matrix& matrix() const noexcept { return u_; }
  std::size_t dim_s() const noexcept { return dim_s_; }
  std::size_t dim_d() const noexcept { return dim_d_; }
  std::size_t delta_o() const noexcept { return delta_o_; }
  const std::vector<std::size_t>& deltas() const noexcept { return deltas_; }

  double unitarity_error() const {
    return detail::max_abs(u_ * u_.adjoint() - Matrix::Identity(u_.rows(), u_.cols()));
  }
  double involution_error() const { return detail::max_abs(u_ * u_ - Matrix::Identity(u_.rows(), u_.cols())); }

  DensityMatrix apply(const DensityMatrix& rho) const {
    if (static_cast<Eigen::Index>(rho.dim()) != u_.rows()) throw InvalidInput("state dimension mismatch");
    return DensityMatrix(u_ * rho.matrix() * u_.adjoint());
  }

 private:
  Matrix u_;
  std::size_t dim_s_, dim_d_, delta_o_;
  std::vector<std::size_t> deltas_;
};

/// U = sum_i P_i (x) V_i where V_i exchanges |delta_o> and |delta_i> and is the
/// identity on every other record state.
inline MeasurementUnitary build_measurement_unitary(const ProjectorSet& projs, std::size_t delta_o,
                                                    std::vector<std::size_t> deltas, std::size_t demon_dim = 0) {
  if (deltas.size() != projs.size()) throw InvalidInput("one record index per projector required");
  std::size_t top = delta_o;
  for (std::size_t d : deltas) top = std::max(top, d);
  if (demon_dim == 0) demon_dim = top + 1;
  if (top >= demon_dim) throw InvalidInput("record index outside demon space");
  if (projs.dim() * demon_dim > kMaxDim) throw InvalidInput("joint dimension above 64");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (deltas[i] == delta_o) throw InvalidInput("record index coincides with the blank state");
    for (std::size_t j = 0; j < i; ++j)
      if (deltas[i] == deltas[j]) throw InvalidInput("duplicate record indices");
  }
  const auto nd = static_cast<Eigen::Index>(demon_dim);
  const auto ns = static_cast<Eigen::Index>(projs.dim());
  Matrix u = Matrix::Zero(ns * nd, ns * nd);
  for (std::size_t i = 0; i < projs.size(); ++i) {
    Matrix v = Matrix::Identity(nd, nd);
    const auto a = static_cast<Eigen::Index>(delta_o), b = static_cast<Eigen::Index>(deltas[i]);
    v(a, a) = 0.0;
    v(b, b) = 0.0;
    v(a, b) = 1.0;
    v(b, a) = 1.0;
    u += kron(projs[i], v);
  }
  return MeasurementUnitary(std::move(u), projs.dim(), demon_dim, delta_o, std::move(deltas));
}

struct MeasurementAudit {
  double H_before = 0.0;    // joint S+D before the coupling
  double H_coherent = 0.0;  // joint after U, before reduction
  double H_after = 0.0;     // joint after reduction in the record basis
  double joint_entropy_change = 0.0;
  double H_D_before = 0.0, H_D_after = 0.0, delta_H_D = 0.0;
  double I_before = 0.0, I_after = 0.0, delta_I_SD = 0.0;
  double H_S_before = 0.0, H_S_after = 0.0;
  bool commuting = true;
  std::optional<double> holevo_chi;  // present when the projectors do not commute with rho_S
  std::vector<double> outcome_probabilities;
  double unitarity_error = 0.0;
  double involution_error = 0.0;
};

/// The demon starts in |0> and records outcome i in |i+1>. After the coupling
/// the joint state is reduced in the record basis, i.e. only the
/// classically readable correlations are kept.
inline MeasurementAudit measurement_entropy_audit(const DensityMatrix& rho_s, const ProjectorSet& projs,
                                                  std::size_t demon_dim) {
  if (projs.dim() != rho_s.dim()) throw InvalidInput("projector and state dimensions differ");
  if (demon_dim < projs.size() + 1) throw InvalidInput("demon needs one blank state plus one per outcome");
  std::vector<std::size_t> deltas(projs.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) deltas[i] = i + 1;
  const MeasurementUnitary u = build_measurement_unitary(projs, 0, deltas, demon_dim);

  const std::size_t ds = rho_s.dim(), dd = demon_dim;
  const DensityMatrix before = kron(rho_s, DensityMatrix::basis_state(dd, 0));
  const DensityMatrix coherent = u.apply(before);

  Matrix reduced = coherent.matrix();
  const auto nd = static_cast<Eigen::Index>(dd);
  for (Eigen::Index r = 0; r < reduced.rows(); ++r)
    for (Eigen::Index c = 0; c < reduced.cols(); ++c)
      if (r % nd != c % nd) reduced(r, c) = 0.0;
  const DensityMatrix after(std::move(reduced));

  MeasurementAudit a;
  a.unitarity_error = u.unitarity_error();
  a.involution_error = u.involution_error();
  a.H_before = von_neumann_entropy(before);
  a.H_coherent = von_neumann_entropy(coherent);
  a.H_after = von_neumann_entropy(after);
  a.joint_entropy_change = a.H_after - a.H_before;
  a.H_D_before = von_neumann_entropy(reduce_to_demon(before, ds, dd));
  a.H_D_after = von_neumann_entropy(reduce_to_demon(after, ds, dd));
  a.delta_H_D = a.H_D_after - a.H_D_before;
  a.I_before = mutual_information(before, ds, dd);
  a.I_after = mutual_information(after, ds, dd);
  a.delta_I_SD = a.I_after - a.I_before;
  a.H_S_before = von_neumann_entropy(rho_s);
  a.H_S_after = von_neumann_entropy(reduce_to_system(after, ds, dd));

  std::vector<double> probs;
  std::vector<DensityMatrix> parts;
  for (const Matrix& p : projs.projectors()) {
    if (detail::max_abs(p * rho_s.matrix() - rho_s.matrix() * p) > kEigenSlack) a.commuting = false;
    const Matrix branch = p * rho_s.matrix() * p;
    const double w = branch.trace().real();
    a.outcome_probabilities.push_back(w);
    if (w > kTolerance) {
      probs.push_back(w);
      parts.emplace_back(branch / w);
    }
  }
  if (!a.commuting) {
    double total = 0.0;
    for (double w : probs) total += w;
    for (double& w : probs) w /= total;
    a.holevo_chi = holevo_chi(ProbabilityDistribution(std::move(probs)), parts);
  }
  return a;
}

}  // namespace demonlab::info
