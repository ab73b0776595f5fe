#pragma once

// Small dense convex solver: barrier path following with primal-dual
// centring steps.
//
// Decision variables are a real vector x (n_scalar entries) and, optionally,
// one real symmetric matrix X (matrix_dim x matrix_dim) constrained to be
// positive semidefinite. Complex Hermitian variables enter through their real
// embedding [[Re, -Im], [Im, Re]]; coefficient matrices built with the
// add_hermitian_* helpers carry the factor 1/2 so that <coef, Y> equals
// Re Tr(C Psi) for an embedded Psi.
//
// Constraint families:
//   a^T x + <A, X> <= b        (linear inequality)
//   a^T x + <A, X>  = b        (linear equality)
//   x^T Q x + q^T x <= c       (convex quadratic in x, Q >= 0)
// Objective (maximized): c^T x + <C, X> + sum_k w_k tau_k log2(1 + eps_k e_k / tau_k).
//
// Iterates stay strictly primal feasible (phase I supplies the start); dual
// variables are carried explicitly, so the reported gap is the complementarity
// of an actual primal-dual pair. The Newton system eliminates X through a
// Schur complement on the constraints touching it, so a step costs O(n^3) in
// the matrix dimension rather than O(n^6) in the number of matrix entries.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "model.hpp"

namespace arwpcn::conic {

/// Real symmetric coefficient matrix stored as explicit entries plus
/// rank-one terms s * u u^T.
class SymCoeff {
 public:
  struct Entry {
    int i;
    int j;
    double v;
  };
  struct RankOne {
    double scale;
    VectorXd u;
  };

  /// Adds v at (i, j) only.
  void add_entry(int i, int j, double v);
  /// Adds v at (i, j) and (j, i) (once when i == j).
  void add_symmetric(int i, int j, double v);
  void add_rank_one(double scale, VectorXd u);

  bool empty() const { return entries_.empty() && low_rank_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }
  const std::vector<RankOne>& low_rank() const { return low_rank_; }

  double inner(const MatrixXd& X) const;
  double trace() const;
  void accumulate(MatrixXd& S, double scale) const;
  MatrixXd dense(int n) const;
  /// Largest index referenced + 1 (0 when empty).
  int extent() const;

 private:
  std::vector<Entry> entries_;
  std::vector<RankOne> low_rank_;
};

/// Adds 1/2 emb(C) where C is Hermitian with C_ij = v and C_ji = conj(v);
/// for i == j, v must be real. n is the complex dimension.
void add_hermitian_entry(SymCoeff& out, int n, int i, int j, cd v);
/// Adds 1/2 * scale * emb(u u^H).
void add_hermitian_rank_one(SymCoeff& out, double scale, const VectorXcd& u);

/// [[Re H, -Im H], [Im H, Re H]]; throws DomainError if H is not Hermitian.
MatrixXd embed_hermitian(const MatrixXcd& H);
/// Hermitian matrix whose embedding is the J-symmetrization of Y (2n x 2n).
MatrixXcd project_embedded(const MatrixXd& Y);

struct RankOneFactor {
  VectorXcd v;      // sqrt(lambda_1) * dominant eigenvector
  double residual;  // lambda_2 / lambda_1 (0 for the zero matrix)
};

/// Dominant eigenpair factor of a PSD Hermitian matrix. Throws DomainError if
/// the smallest eigenvalue is below -floor * max(1, lambda_max).
RankOneFactor extract_rank_one(const MatrixXcd& X, double floor = 1e-9);

struct LinearConstraint {
  VectorXd a;  // length n_scalar, may be empty for matrix-only constraints
  SymCoeff A;
  double b = 0.0;
};

struct QuadraticConstraint {
  MatrixXd Q;  // n_scalar x n_scalar, PSD
  VectorXd q;
  double c = 0.0;
};

/// weight * tau log2(1 + eps * e / tau) with tau = x[time_index], e = x[energy_index].
struct PerspectiveLog {
  int time_index = -1;
  int energy_index = -1;
  double eps = 0.0;
  double weight = 1.0;
};

struct ConicProblem {
  int n_scalar = 0;
  int matrix_dim = 0;
  VectorXd objective;  // linear part on x (empty means zero)
  SymCoeff objective_matrix;
  std::vector<PerspectiveLog> perspective_terms;
  std::vector<LinearConstraint> inequalities;
  std::vector<LinearConstraint> equalities;
  std::vector<QuadraticConstraint> quadratics;
  /// Optional strictly feasible start; phase I runs when absent or not interior.
  std::optional<VectorXd> x0;
  std::optional<MatrixXd> X0;

  /// Throws DomainError on inconsistent dimensions, non-PSD Q, bad indices.
  void validate() const;
  double objective_value(const VectorXd& x, const MatrixXd& X) const;
};

enum class Status { Optimal, Infeasible, MaxIter, NumericalFailure };
const char* to_string(Status s);

struct SolverOptions {
  double tol = 1e-8;            // target duality gap (complementarity)
  double mu0 = 1.0;             // initial barrier parameter
  double mu_factor = 10.0;      // mu <- mu / mu_factor per centering
  int max_newton = 1500;        // total Newton steps (phase I counted separately)
  int max_stage_newton = 100;
};

struct SolverReport {
  Status status = Status::NumericalFailure;
  double objective_value = 0.0;
  int iterations = 0;           // Newton steps of phase II
  int phase1_iterations = 0;
  int centering_steps = 0;
  double duality_gap_estimate = 0.0;
  double barrier_parameter_final = 0.0;
  double stationarity_residual = 0.0;
  VectorXd ineq_multipliers;    // one per user inequality
  VectorXd eq_multipliers;
  VectorXd quad_multipliers;
  MatrixXd matrix_multiplier;   // Z, with <Z, X> part of the gap
  std::vector<double> objective_trace;  // objective at each centred point
  std::string message;
};

struct ConicSolution {
  VectorXd x;
  MatrixXd X;
  SolverReport report;
};

ConicSolution solve(const ConicProblem& problem, const SolverOptions& options);
ConicSolution solve(const ConicProblem& problem, double tol);

}  // namespace arwpcn::conic
