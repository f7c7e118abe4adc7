#pragma once

#include <surfdarcy/assembly.hpp>
#include <surfdarcy/error.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <suitesparse/umfpack.h>

#include <array>
#include <cstdint>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace surfdarcy {

/// Sparse LU factorization (UMFPACK, 64-bit indices, nested-dissection
/// ordering when available) of a square matrix, with solves for A and A^T.
class SparseLU {
public:
  using Csc = Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t>;

  explicit SparseLU(const SparseMatrix &a) : csc_(a) { factorize(); }
  explicit SparseLU(Csc a) : csc_(std::move(a)) { factorize(); }

  /// `refine` enables UMFPACK's iterative refinement (on by default).
  Eigen::VectorXd solve(const Eigen::VectorXd &b, bool refine = true) const {
    return run(UMFPACK_A, b, refine);
  }
  Eigen::VectorXd solve_transpose(const Eigen::VectorXd &b, bool refine = true) const {
    return run(UMFPACK_At, b, refine);
  }

  const Csc &matrix() const { return csc_; }
  std::int64_t rows() const { return csc_.rows(); }

private:
  struct NumericDeleter {
    void operator()(void *p) const {
      if (p)
        umfpack_dl_free_numeric(&p);
    }
  };

  void factorize() {
    if (csc_.rows() != csc_.cols())
      throw ConfigError("LU factorization needs a square matrix");
    csc_.makeCompressed();
    umfpack_dl_defaults(control_.data());
    // The default initial allocation follows a very pessimistic fill
    // estimate; start small and let UMFPACK grow instead.
    control_[UMFPACK_ALLOC_INIT] = -1e7;
    const std::int64_t n = csc_.rows();
    void *symbolic = nullptr;
    long status = UMFPACK_ERROR_invalid_system;
    for (double ordering : {double(UMFPACK_ORDERING_METIS), double(UMFPACK_ORDERING_AMD)}) {
      control_[UMFPACK_ORDERING] = ordering;
      status = umfpack_dl_symbolic(n, n, csc_.outerIndexPtr(), csc_.innerIndexPtr(),
                                   csc_.valuePtr(), &symbolic, control_.data(),
                                   info_.data());
      if (status == UMFPACK_OK)
        break;
    }
    if (status != UMFPACK_OK)
      throw NumericalError("symbolic factorization failed (UMFPACK status " +
                           std::to_string(status) + ")");
    void *numeric = nullptr;
    status = umfpack_dl_numeric(csc_.outerIndexPtr(), csc_.innerIndexPtr(),
                                csc_.valuePtr(), symbolic, &numeric, control_.data(),
                                info_.data());
    umfpack_dl_free_symbolic(&symbolic);
    numeric_.reset(numeric);
    if (status == UMFPACK_WARNING_singular_matrix)
      throw NumericalError("singular matrix: zero pivot at unknown " +
                           std::to_string(zero_pivot()));
    if (status == UMFPACK_ERROR_out_of_memory)
      throw NumericalError("out of memory during LU factorization of " +
                           std::to_string(n) + " unknowns");
    if (status != UMFPACK_OK)
      throw NumericalError("numeric factorization failed (UMFPACK status " +
                           std::to_string(status) + ")");
  }

  Eigen::VectorXd run(long sys, const Eigen::VectorXd &b, bool refine) const {
    if (b.size() != csc_.rows())
      throw ConfigError("right-hand side size mismatch");
    Eigen::VectorXd x(b.size());
    std::array<double, UMFPACK_INFO> info{};
    auto control = control_;
    if (!refine)
      control[UMFPACK_IRSTEP] = 0;
    const long status = umfpack_dl_solve(sys, csc_.outerIndexPtr(), csc_.innerIndexPtr(),
                                         csc_.valuePtr(), x.data(), b.data(),
                                         numeric_.get(), control.data(), info.data());
    if (status != UMFPACK_OK)
      throw NumericalError("triangular solve failed (UMFPACK status " +
                           std::to_string(status) + ")");
    return x;
  }

  /// Original column index of the first zero entry on the diagonal of U.
  std::int64_t zero_pivot() const {
    const std::int64_t n = csc_.rows();
    std::vector<std::int64_t> q(n);
    std::vector<double> d(n);
    std::int64_t do_recip = 0;
    umfpack_dl_get_numeric(nullptr, nullptr, nullptr, nullptr, nullptr, nullptr,
                           nullptr, q.data(), d.data(), &do_recip, nullptr,
                           numeric_.get());
    for (std::int64_t k = 0; k < n; ++k)
      if (d[k] == 0.0)
        return q[k];
    return -1;
  }

  Csc csc_;
  std::array<double, UMFPACK_CONTROL> control_{};
  std::array<double, UMFPACK_INFO> info_{};
  std::unique_ptr<void, NumericDeleter> numeric_;
};

struct Solution {
  std::array<Eigen::VectorXd, 3> u;
  Eigen::VectorXd p;
  double multiplier = 0.0;
  double residual_norm = 0.0;
  double rhs_norm = 0.0;

  double relative_residual() const {
    return rhs_norm > 0.0 ? residual_norm / rhs_norm : residual_norm;
  }
};

inline Solution unpack(const Eigen::VectorXd &x, const SystemLayout &lay) {
  Solution s;
  for (int c = 0; c < 3; ++c)
    s.u[c] = x.segment(lay.u_offset(c), lay.n_u);
  s.p = x.segment(lay.p_offset(), lay.n_p);
  s.multiplier = x[lay.multiplier()];
  return s;
}

inline Eigen::VectorXd pack(const Solution &s, const SystemLayout &lay) {
  Eigen::VectorXd x(lay.total());
  for (int c = 0; c < 3; ++c)
    x.segment(lay.u_offset(c), lay.n_u) = s.u[c];
  x.segment(lay.p_offset(), lay.n_p) = s.p;
  x[lay.multiplier()] = s.multiplier;
  return x;
}

/// Solve with an existing factorization of system.matrix.
inline Solution solve(const AssembledSystem &system, const SparseLU &lu) {
  const Eigen::VectorXd x = lu.solve(system.rhs);
  Solution s = unpack(x, system.layout);
  s.residual_norm = (system.matrix * x - system.rhs).norm();
  s.rhs_norm = system.rhs.norm();
  return s;
}

/// Direct solve of A x = b; the residual is recomputed from the
/// assembled matrix.
inline Solution solve(const AssembledSystem &system) {
  const SparseLU lu(system.matrix);
  const Eigen::VectorXd x = lu.solve(system.rhs);
  Solution s = unpack(x, system.layout);
  s.residual_norm = (system.matrix * x - system.rhs).norm();
  s.rhs_norm = system.rhs.norm();
  return s;
}

/// Same as solve(), but releases the assembled matrix before factorizing.
inline Solution solve_and_release(AssembledSystem &system) {
  SparseLU::Csc csc = system.matrix;
  system.matrix = SparseMatrix();
  const SparseLU lu(std::move(csc));
  const Eigen::VectorXd x = lu.solve(system.rhs);
  Solution s = unpack(x, system.layout);
  s.residual_norm = (lu.matrix() * x - system.rhs).norm();
  s.rhs_norm = system.rhs.norm();
  return s;
}

struct ConditionEstimate {
  double value = 0.0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  bool approximate = false; // power iterations hit the cap before settling
};

/// 2-norm condition number sigma_max / sigma_min from power iteration on
/// A^T A and on (A^T A)^{-1}, the latter through an existing factorization
/// of A.
inline ConditionEstimate estimate_condition(const SparseMatrix &a, const SparseLU &lu,
                                            int max_iterations = 30,
                                            double rel_tol = 1e-3) {
  if (lu.rows() != a.rows())
    throw ConfigError("factorization does not match the matrix");
  const int n = static_cast<int>(a.rows());
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  Eigen::VectorXd start(n);
  for (int i = 0; i < n; ++i)
    start[i] = dist(rng);
  start.normalize();

  auto power = [&](auto &&apply, bool &converged) {
    Eigen::VectorXd x = start;
    double lambda = 0.0;
    converged = false;
    for (int it = 0; it < max_iterations; ++it) {
      Eigen::VectorXd y = apply(x);
      const double next = x.dot(y);
      const double norm = y.norm();
      if (!(norm > 0.0))
        throw NumericalError("power iteration collapsed");
      x = y / norm;
      if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) {
        lambda = next;
        converged = true;
        break;
      }
      lambda = next;
    }
    return lambda;
  };
  bool conv_max = false, conv_min = false;
  const double lmax = power(
      [&](const Eigen::VectorXd &x) -> Eigen::VectorXd {
        return a.transpose() * (a * x);
      },
      conv_max);
  const double linv = power(
      [&](const Eigen::VectorXd &x) -> Eigen::VectorXd {
        return lu.solve(lu.solve_transpose(x, false), false);
      },
      conv_min);
  ConditionEstimate est;
  est.sigma_max = std::sqrt(lmax);
  est.sigma_min = 1.0 / std::sqrt(linv);
  est.value = est.sigma_max / est.sigma_min;
  est.approximate = !(conv_max && conv_min);
  return est;
}

inline ConditionEstimate estimate_condition(const SparseMatrix &a,
                                            int max_iterations = 30,
                                            double rel_tol = 1e-3) {
  const SparseLU lu(a);
  return estimate_condition(a, lu, max_iterations, rel_tol);
}

inline ConditionEstimate estimate_condition(const AssembledSystem &system) {
  return estimate_condition(system.matrix);
}

} // namespace surfdarcy
