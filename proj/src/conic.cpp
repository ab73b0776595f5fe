#include "conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "errors.hpp"

namespace arwpcn::conic {

// ---------------------------------------------------------------------------
// SymCoeff

void SymCoeff::add_entry(int i, int j, double v) {
  if (v != 0.0) entries_.push_back({i, j, v});
}

void SymCoeff::add_symmetric(int i, int j, double v) {
  add_entry(i, j, v);
  if (i != j) add_entry(j, i, v);
}

void SymCoeff::add_rank_one(double scale, VectorXd u) {
  if (scale != 0.0 && u.squaredNorm() > 0.0) low_rank_.push_back({scale, std::move(u)});
}

double SymCoeff::inner(const MatrixXd& X) const {
  double acc = 0.0;
  for (const auto& e : entries_) acc += e.v * X(e.i, e.j);
  for (const auto& r : low_rank_) acc += r.scale * r.u.dot(X * r.u);
  return acc;
}

double SymCoeff::trace() const {
  double acc = 0.0;
  for (const auto& e : entries_)
    if (e.i == e.j) acc += e.v;
  for (const auto& r : low_rank_) acc += r.scale * r.u.squaredNorm();
  return acc;
}

void SymCoeff::accumulate(MatrixXd& S, double scale) const {
  if (scale == 0.0) return;
  for (const auto& e : entries_) S(e.i, e.j) += scale * e.v;
  for (const auto& r : low_rank_) S.noalias() += (scale * r.scale) * r.u * r.u.transpose();
}

MatrixXd SymCoeff::dense(int n) const {
  MatrixXd S = MatrixXd::Zero(n, n);
  accumulate(S, 1.0);
  return S;
}

int SymCoeff::extent() const {
  int m = 0;
  for (const auto& e : entries_) m = std::max({m, e.i + 1, e.j + 1});
  for (const auto& r : low_rank_) m = std::max(m, static_cast<int>(r.u.size()));
  return m;
}

void add_hermitian_entry(SymCoeff& out, int n, int i, int j, cd v) {
  if (i == j) {
    out.add_entry(i, i, 0.5 * v.real());
    out.add_entry(i + n, i + n, 0.5 * v.real());
    return;
  }
  const double re = 0.5 * v.real();
  const double im = 0.5 * v.imag();
  // C_ij = v
  out.add_entry(i, j, re);
  out.add_entry(i + n, j + n, re);
  out.add_entry(i + n, j, im);
  out.add_entry(i, j + n, -im);
  // C_ji = conj(v)
  out.add_entry(j, i, re);
  out.add_entry(j + n, i + n, re);
  out.add_entry(j + n, i, -im);
  out.add_entry(j, i + n, im);
}

void add_hermitian_rank_one(SymCoeff& out, double scale, const VectorXcd& u) {
  const Eigen::Index n = u.size();
  VectorXd u1(2 * n), u2(2 * n);
  u1 << u.real(), u.imag();
  u2 << -u.imag(), u.real();
  out.add_rank_one(0.5 * scale, std::move(u1));
  out.add_rank_one(0.5 * scale, std::move(u2));
}

MatrixXd embed_hermitian(const MatrixXcd& H) {
  if (H.rows() != H.cols()) throw DomainError("embed_hermitian: matrix must be square");
  const double scale = H.norm();
  if ((H - H.adjoint()).norm() > 1e-10 * std::max(scale, 1e-300) && scale > 0.0)
    throw DomainError("embed_hermitian: matrix is not Hermitian");
  const Eigen::Index n = H.rows();
  MatrixXd E(2 * n, 2 * n);
  E.topLeftCorner(n, n) = H.real();
  E.topRightCorner(n, n) = -H.imag();
  E.bottomLeftCorner(n, n) = H.imag();
  E.bottomRightCorner(n, n) = H.real();
  return E;
}

MatrixXcd project_embedded(const MatrixXd& Y) {
  const Eigen::Index n = Y.rows() / 2;
  MatrixXcd H(n, n);
  H.real() = 0.5 * (Y.topLeftCorner(n, n) + Y.bottomRightCorner(n, n));
  H.imag() = 0.5 * (Y.bottomLeftCorner(n, n) - Y.topRightCorner(n, n));
  return 0.5 * (H + H.adjoint());
}

RankOneFactor extract_rank_one(const MatrixXcd& X, double floor) {
  if (X.rows() != X.cols() || X.rows() == 0) throw DomainError("extract_rank_one: empty or non-square");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (X + X.adjoint()));
  const VectorXd& ev = es.eigenvalues();  // ascending
  const Eigen::Index n = ev.size();
  const double l1 = ev[n - 1];
  if (ev[0] < -floor * std::max(1.0, std::abs(l1)))
    throw DomainError("extract_rank_one: matrix is indefinite beyond the eigenvalue floor");
  if (l1 <= 0.0) return {VectorXcd::Zero(n), 0.0};
  const double l2 = n > 1 ? std::max(ev[n - 2], 0.0) : 0.0;
  return {std::sqrt(l1) * es.eigenvectors().col(n - 1), l2 / l1};
}

// ---------------------------------------------------------------------------
// Problem

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::MaxIter: return "max_iter";
    case Status::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

namespace {

double dot_or_zero(const VectorXd& a, const VectorXd& x) { return a.size() ? a.dot(x) : 0.0; }

double perspective_value(const PerspectiveLog& term, double tau, double e) {
  if (tau <= 0.0) return 0.0;
  return term.weight * tau * std::log1p(term.eps * e / tau) / std::numbers::ln2;
}

}  // namespace

void ConicProblem::validate() const {
  if (n_scalar < 0 || matrix_dim < 0) throw DomainError("ConicProblem: negative dimension");
  if (n_scalar == 0 && matrix_dim == 0) throw DomainError("ConicProblem: no variables");
  if (objective.size() != 0 && objective.size() != n_scalar)
    throw DomainError("ConicProblem: objective length mismatch");
  if (objective_matrix.extent() > matrix_dim) throw DomainError("ConicProblem: objective matrix out of range");
  auto check_linear = [&](const LinearConstraint& c) {
    if (c.a.size() != 0 && c.a.size() != n_scalar) throw DomainError("ConicProblem: constraint vector length mismatch");
    if (c.A.extent() > matrix_dim) throw DomainError("ConicProblem: constraint matrix out of range");
    if (!std::isfinite(c.b)) throw DomainError("ConicProblem: non-finite right-hand side");
  };
  for (const auto& c : inequalities) check_linear(c);
  for (const auto& c : equalities) check_linear(c);
  for (const auto& c : quadratics) {
    if (c.Q.rows() != n_scalar || c.Q.cols() != n_scalar || (c.q.size() != 0 && c.q.size() != n_scalar))
      throw DomainError("ConicProblem: quadratic constraint dimension mismatch");
    if ((c.Q - c.Q.transpose()).norm() > 1e-12 * (1.0 + c.Q.norm()))
      throw DomainError("ConicProblem: quadratic constraint matrix not symmetric");
    if (n_scalar > 0) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(c.Q, Eigen::EigenvaluesOnly);
      if (es.eigenvalues()[0] < -1e-10) throw DomainError("ConicProblem: quadratic constraint matrix not PSD");
    }
  }
  for (const auto& p : perspective_terms) {
    if (p.time_index < 0 || p.time_index >= n_scalar || p.energy_index < 0 || p.energy_index >= n_scalar ||
        p.time_index == p.energy_index)
      throw DomainError("ConicProblem: perspective-log term references invalid indices");
    if (!(p.eps >= 0.0) || !(p.weight >= 0.0)) throw DomainError("ConicProblem: perspective-log eps/weight must be >= 0");
  }
  if (x0 && x0->size() != n_scalar) throw DomainError("ConicProblem: x0 length mismatch");
  if (X0 && (X0->rows() != matrix_dim || X0->cols() != matrix_dim)) throw DomainError("ConicProblem: X0 size mismatch");
}

double ConicProblem::objective_value(const VectorXd& x, const MatrixXd& X) const {
  double f = dot_or_zero(objective, x);
  if (matrix_dim > 0 && !objective_matrix.empty()) f += objective_matrix.inner(X);
  for (const auto& p : perspective_terms) f += perspective_value(p, x[p.time_index], x[p.energy_index]);
  return f;
}

// ---------------------------------------------------------------------------
// Path-following engine
//
// Iterates stay primal strictly feasible; the dual variables (y for the
// inequalities, mu for the equalities, Z for the matrix cone) are carried
// explicitly. Each stage fixes the barrier parameter and applies damped
// Newton steps (HKM direction for the matrix block) to the perturbed KKT
// system until the point is centred, then the parameter drops by mu_factor.

namespace {

struct Engine {
  const ConicProblem& prob;
  std::vector<LinearConstraint> ineq;  // user inequalities followed by domain bounds
  std::vector<int> x_only;
  std::vector<int> touching;
  int p;
  int n;
  double degree;

  explicit Engine(const ConicProblem& pr) : prob(pr), p(pr.n_scalar), n(pr.matrix_dim) {
    ineq = prob.inequalities;
    for (const auto& term : prob.perspective_terms) {
      LinearConstraint c;
      c.a = VectorXd::Zero(p);
      c.a[term.time_index] = -1.0;
      c.b = -model::kTauMin;
      ineq.push_back(std::move(c));
      // log argument: tau + eps e > 0
      LinearConstraint d;
      d.a = VectorXd::Zero(p);
      d.a[term.time_index] = -1.0;
      d.a[term.energy_index] = -term.eps;
      d.b = 0.0;
      ineq.push_back(std::move(d));
    }
    for (int i = 0; i < static_cast<int>(ineq.size()); ++i)
      (n > 0 && !ineq[i].A.empty() ? touching : x_only).push_back(i);
    degree = static_cast<double>(ineq.size() + prob.quadratics.size()) + n;
  }

  double lin_value(const LinearConstraint& c, const VectorXd& x, const MatrixXd& X) const {
    double v = dot_or_zero(c.a, x);
    if (n > 0 && !c.A.empty()) v += c.A.inner(X);
    return v;
  }

  bool in_domain(const VectorXd& x) const {
    for (const auto& term : prob.perspective_terms) {
      const double tau = x[term.time_index];
      if (!(tau > 0.0)) return false;
      if (!(1.0 + term.eps * x[term.energy_index] / tau > 0.0)) return false;
    }
    return x.allFinite();
  }

  VectorXd quad_gradient(const QuadraticConstraint& q, const VectorXd& x) const {
    VectorXd g = 2.0 * q.Q * x;
    if (q.q.size()) g += q.q;
    return g;
  }

  /// Constraint slacks; false when (x, X) is not strictly feasible.
  bool slacks(const VectorXd& x, const MatrixXd& X, VectorXd& s_lin, VectorXd& s_quad) const {
    if (!in_domain(x)) return false;
    s_lin.resize(static_cast<Eigen::Index>(ineq.size()));
    for (std::size_t i = 0; i < ineq.size(); ++i) {
      s_lin[i] = ineq[i].b - lin_value(ineq[i], x, X);
      if (!(s_lin[i] > 0.0)) return false;
    }
    s_quad.resize(static_cast<Eigen::Index>(prob.quadratics.size()));
    for (std::size_t j = 0; j < prob.quadratics.size(); ++j) {
      const auto& q = prob.quadratics[j];
      s_quad[j] = q.c - x.dot(q.Q * x) - dot_or_zero(q.q, x);
      if (!(s_quad[j] > 0.0)) return false;
    }
    if (n > 0) {
      Eigen::LLT<MatrixXd> llt(X);
      if (llt.info() != Eigen::Success) return false;
      if (!(llt.matrixLLT().diagonal().minCoeff() > 0.0)) return false;
    }
    return true;
  }

  /// Gradient and Hessian of -objective restricted to x.
  void objective_derivatives(const VectorXd& x, VectorXd& grad, MatrixXd& hess) const {
    grad = VectorXd::Zero(p);
    hess = MatrixXd::Zero(p, p);
    if (prob.objective.size()) grad -= prob.objective;
    for (const auto& term : prob.perspective_terms) {
      const int it = term.time_index;
      const int ie = term.energy_index;
      const double tau = x[it];
      const double u = x[ie] / tau;
      const double denom = 1.0 + term.eps * u;
      const double w = term.weight / std::numbers::ln2;
      grad[ie] -= w * term.eps / denom;
      grad[it] -= w * (std::log1p(term.eps * u) - term.eps * u / denom);
      const double c = w * term.eps * term.eps / (tau * denom * denom);
      hess(it, it) += c * u * u;
      hess(it, ie) -= c * u;
      hess(ie, it) -= c * u;
      hess(ie, ie) += c;
    }
  }

  struct State {
    VectorXd x;
    MatrixXd X;
    VectorXd s_lin;
    VectorXd s_quad;
    VectorXd y;      // inequality multipliers (user + domain)
    VectorXd yq;     // quadratic-constraint multipliers
    VectorXd nu;     // equality multipliers
    MatrixXd Z;      // matrix-cone multiplier
  };

  struct Residual {
    VectorXd rx;     // -grad f + sum y a + sum yq grad g + sum nu a_eq
    MatrixXd RX;     // -C + sum y A + sum nu B - Z
    VectorXd req;    // b_eq - a^T x - <B, X>
    double comp_lin = 0.0;   // max |y s / mu - 1|
    double comp_mat = 0.0;   // || L^T Z L / mu - I ||_F
    double merit = 0.0;
  };

  Residual residual(double mu, const State& st) const {
    Residual r;
    VectorXd fg;
    MatrixXd fh;
    objective_derivatives(st.x, fg, fh);
    r.rx = fg;
    for (std::size_t i = 0; i < ineq.size(); ++i)
      if (ineq[i].a.size()) r.rx += st.y[i] * ineq[i].a;
    for (std::size_t j = 0; j < prob.quadratics.size(); ++j) r.rx += st.yq[j] * quad_gradient(prob.quadratics[j], st.x);
    for (std::size_t l = 0; l < prob.equalities.size(); ++l)
      if (prob.equalities[l].a.size()) r.rx += st.nu[l] * prob.equalities[l].a;
    r.req.resize(static_cast<Eigen::Index>(prob.equalities.size()));
    for (std::size_t l = 0; l < prob.equalities.size(); ++l)
      r.req[l] = prob.equalities[l].b - lin_value(prob.equalities[l], st.x, st.X);
    double comp2 = 0.0;
    for (Eigen::Index i = 0; i < st.y.size(); ++i) {
      const double c = st.y[i] * st.s_lin[i] - mu;
      comp2 += c * c;
      r.comp_lin = std::max(r.comp_lin, std::abs(c) / mu);
    }
    for (Eigen::Index j = 0; j < st.yq.size(); ++j) {
      const double c = st.yq[j] * st.s_quad[j] - mu;
      comp2 += c * c;
      r.comp_lin = std::max(r.comp_lin, std::abs(c) / mu);
    }
    double rx2 = 0.0;
    if (n > 0) {
      r.RX = -st.Z;
      prob.objective_matrix.accumulate(r.RX, -1.0);
      for (int i : touching) ineq[i].A.accumulate(r.RX, st.y[i]);
      for (std::size_t l = 0; l < prob.equalities.size(); ++l) prob.equalities[l].A.accumulate(r.RX, st.nu[l]);
      Eigen::LLT<MatrixXd> llt(st.X);
      const MatrixXd L = llt.matrixL();
      MatrixXd W = L.transpose() * st.Z * L;
      W.diagonal().array() -= mu;
      comp2 += W.squaredNorm();
      r.comp_mat = W.norm() / mu;
      rx2 = r.RX.squaredNorm();
    }
    r.merit = r.rx.squaredNorm() + rx2 + r.req.squaredNorm() + comp2;
    return r;
  }

  struct Step {
    VectorXd dx;
    MatrixXd dX;
    VectorXd dy;
    VectorXd dyq;
    VectorXd dnu;
    MatrixXd dZ;
    bool ok = false;
  };

  /// Tr(A Zi B X) for the structured coefficients.
  static double cross(const SymCoeff& A, const SymCoeff& B, const MatrixXd& Zi, const MatrixXd& X,
                      const std::vector<VectorXd>& Zu_a, const std::vector<VectorXd>& Xu_a,
                      const std::vector<VectorXd>& Zu_b, const std::vector<VectorXd>& Xu_b) {
    double g = 0.0;
    for (const auto& ea : A.entries())
      for (const auto& eb : B.entries()) g += ea.v * eb.v * Zi(ea.j, eb.i) * X(eb.j, ea.i);
    // A sparse, B = s v v^T: (X v)^T A (Zi v)
    for (std::size_t rb = 0; rb < B.low_rank().size(); ++rb) {
      double acc = 0.0;
      for (const auto& ea : A.entries()) acc += ea.v * Xu_b[rb][ea.i] * Zu_b[rb][ea.j];
      g += B.low_rank()[rb].scale * acc;
    }
    // A = s u u^T, B sparse: (Zi u)^T B (X u)
    for (std::size_t ra = 0; ra < A.low_rank().size(); ++ra) {
      double acc = 0.0;
      for (const auto& eb : B.entries()) acc += eb.v * Zu_a[ra][eb.i] * Xu_a[ra][eb.j];
      g += A.low_rank()[ra].scale * acc;
      for (std::size_t rb = 0; rb < B.low_rank().size(); ++rb) {
        const VectorXd& u = A.low_rank()[ra].u;
        g += A.low_rank()[ra].scale * B.low_rank()[rb].scale * u.dot(Zu_b[rb]) * B.low_rank()[rb].u.dot(Xu_a[ra]);
      }
    }
    return g;
  }

  Step newton(double mu, const State& st, const Residual& res) const {
    Step step;
    VectorXd fg;
    MatrixXd fh;
    objective_derivatives(st.x, fg, fh);

    MatrixXd H = fh;
    VectorXd rhs_x = -res.rx;
    for (int i : x_only) {
      const auto& a = ineq[i].a;
      if (a.size() == 0) continue;
      H.noalias() += (st.y[i] / st.s_lin[i]) * (a * a.transpose());
      rhs_x -= (mu / st.s_lin[i] - st.y[i]) * a;
    }
    std::vector<VectorXd> qg(prob.quadratics.size());
    for (std::size_t j = 0; j < prob.quadratics.size(); ++j) {
      const auto& q = prob.quadratics[j];
      qg[j] = quad_gradient(q, st.x);
      H.noalias() += (2.0 * st.yq[j]) * q.Q + (st.yq[j] / st.s_quad[j]) * (qg[j] * qg[j].transpose());
      rhs_x -= (mu / st.s_quad[j] - st.yq[j]) * qg[j];
    }

    const int nj = n > 0 ? static_cast<int>(touching.size()) : 0;
    const int nl = static_cast<int>(prob.equalities.size());
    const int nc = n > 0 ? nj + nl : 0;

    MatrixXd Zi, V;
    std::vector<const SymCoeff*> cols;
    MatrixXd M = MatrixXd::Zero(nc, nc);
    VectorXd cv = VectorXd::Zero(nc);
    if (n > 0) {
      Eigen::LLT<MatrixXd> zllt(st.Z);
      if (zllt.info() != Eigen::Success) return step;
      Zi = zllt.solve(MatrixXd::Identity(n, n));
      Zi = 0.5 * (Zi + Zi.transpose()).eval();
      // V = mu Zi - X - sym(Zi R_X X)
      const MatrixXd T = Zi * res.RX * st.X;
      V = mu * Zi - st.X - 0.5 * (T + T.transpose());
      for (int i : touching) cols.push_back(&ineq[i].A);
      for (const auto& e : prob.equalities) cols.push_back(&e.A);
      std::vector<std::vector<VectorXd>> Zu(nc), Xu(nc);
      for (int a = 0; a < nc; ++a) {
        for (const auto& r : cols[a]->low_rank()) {
          Zu[a].push_back(Zi * r.u);
          Xu[a].push_back(st.X * r.u);
        }
        cv[a] = cols[a]->inner(V);
      }
      for (int a = 0; a < nc; ++a)
        for (int b = a; b < nc; ++b) {
          const double g = cross(*cols[a], *cols[b], Zi, st.X, Zu[a], Xu[a], Zu[b], Xu[b]);
          const double h = a == b ? g : cross(*cols[b], *cols[a], Zi, st.X, Zu[b], Xu[b], Zu[a], Xu[a]);
          M(a, b) = M(b, a) = 0.5 * (g + h);
        }
    }

    const int dim = p + nj + nl;
    MatrixXd K = MatrixXd::Zero(dim, dim);
    VectorXd rhs(dim);
    K.topLeftCorner(p, p) = H;
    rhs.head(p) = rhs_x;
    for (int j = 0; j < nj; ++j) {
      const int i = touching[j];
      if (ineq[i].a.size()) {
        K.block(0, p + j, p, 1) = ineq[i].a;
        K.block(p + j, 0, 1, p) = ineq[i].a.transpose();
      }
      rhs[p + j] = st.s_lin[i] - mu / st.y[i] - cv[j];
    }
    for (int l = 0; l < nl; ++l) {
      const auto& e = prob.equalities[l];
      if (e.a.size()) {
        K.block(0, p + nj + l, p, 1) = e.a;
        K.block(p + nj + l, 0, 1, p) = e.a.transpose();
      }
      rhs[p + nj + l] = res.req[l] - (n > 0 ? cv[nj + l] : 0.0);
    }
    if (nc > 0) K.bottomRightCorner(nc, nc) = -M;
    for (int j = 0; j < nj; ++j) K(p + j, p + j) -= st.s_lin[touching[j]] / st.y[touching[j]];

    // Symmetric diagonal equilibration before factorization.
    VectorXd d(dim);
    for (int k = 0; k < dim; ++k) {
      const double a = std::abs(K(k, k));
      d[k] = a > 0.0 && std::isfinite(a) ? 1.0 / std::sqrt(a) : 1.0;
    }
    const MatrixXd Ks = d.asDiagonal() * K * d.asDiagonal();
    const VectorXd rs = d.cwiseProduct(rhs);
    VectorXd sol;
    double reg = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      MatrixXd Kr = Ks;
      if (reg > 0.0) {
        for (int k = 0; k < p; ++k) Kr(k, k) += reg;
        for (int k = p; k < dim; ++k) Kr(k, k) -= reg;
      }
      Eigen::PartialPivLU<MatrixXd> lu(Kr);
      sol = lu.solve(rs);
      if (sol.allFinite() && (Kr * sol - rs).norm() <= 1e-9 * (1.0 + rs.norm())) break;
      reg = reg == 0.0 ? 1e-14 : reg * 100.0;
      sol.resize(0);
    }
    if (sol.size() == 0) return step;
    sol = d.cwiseProduct(sol);

    step.dx = sol.head(p);
    step.dnu = sol.segment(p + nj, nl);
    step.dy = VectorXd::Zero(static_cast<Eigen::Index>(ineq.size()));
    for (int j = 0; j < nj; ++j) step.dy[touching[j]] = sol[p + j];
    for (int i : x_only) {
      const double da = dot_or_zero(ineq[i].a, step.dx);
      step.dy[i] = (st.y[i] / st.s_lin[i]) * da - st.y[i] + mu / st.s_lin[i];
    }
    step.dyq = VectorXd::Zero(static_cast<Eigen::Index>(prob.quadratics.size()));
    for (std::size_t j = 0; j < prob.quadratics.size(); ++j)
      step.dyq[j] = (st.yq[j] / st.s_quad[j]) * qg[j].dot(step.dx) - st.yq[j] + mu / st.s_quad[j];
    if (n > 0) {
      step.dZ = res.RX;
      for (int j = 0; j < nj; ++j) ineq[touching[j]].A.accumulate(step.dZ, step.dy[touching[j]]);
      for (int l = 0; l < nl; ++l) prob.equalities[l].A.accumulate(step.dZ, step.dnu[l]);
      step.dZ = 0.5 * (step.dZ + step.dZ.transpose()).eval();
      const MatrixXd T = Zi * step.dZ * st.X;
      step.dX = mu * Zi - st.X - 0.5 * (T + T.transpose());
    }
    step.ok = step.dx.allFinite() && step.dy.allFinite() && (n == 0 || (step.dX.allFinite() && step.dZ.allFinite()));
    return step;
  }

  /// Largest alpha with P + alpha dP positive definite (infinity if none binds).
  static double cone_step(const MatrixXd& P, const MatrixXd& dP) {
    Eigen::LLT<MatrixXd> llt(P);
    MatrixXd W = llt.matrixL().solve(dP);
    W = llt.matrixL().solve(W.transpose().eval());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (W + W.transpose()), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()[0];
    return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
  }

  static double ratio_step(const VectorXd& v, const VectorXd& dv) {
    double a = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
    return a;
  }

  bool line_search(double mu, State& st, const Step& step, double merit_ref, Residual& res_new) const {
    VectorXd ds(static_cast<Eigen::Index>(ineq.size()));
    for (std::size_t i = 0; i < ineq.size(); ++i) {
      double v = -dot_or_zero(ineq[i].a, step.dx);
      if (n > 0 && !ineq[i].A.empty()) v -= ineq[i].A.inner(step.dX);
      ds[i] = v;
    }
    double amax = std::min({ratio_step(st.s_lin, ds), ratio_step(st.y, step.dy), ratio_step(st.yq, step.dyq)});
    if (n > 0) amax = std::min({amax, cone_step(st.X, step.dX), cone_step(st.Z, step.dZ)});
    double alpha = std::min(1.0, 0.99 * amax);

    // Primal barrier function and its slope along the primal step; the
    // primal part of a primal-dual direction is a descent direction for it.
    const double phi0 = barrier_value(mu, st);
    VectorXd fg;
    MatrixXd fh;
    objective_derivatives(st.x, fg, fh);
    double slope = fg.dot(step.dx);
    for (Eigen::Index i = 0; i < ds.size(); ++i) slope -= mu * ds[i] / st.s_lin[i];
    for (std::size_t j = 0; j < prob.quadratics.size(); ++j)
      slope += mu * quad_gradient(prob.quadratics[j], st.x).dot(step.dx) / st.s_quad[j];
    if (n > 0) {
      slope -= prob.objective_matrix.inner(step.dX);
      Eigen::LLT<MatrixXd> xl(st.X);
      slope -= mu * xl.solve(step.dX).trace();
    }
    const bool descent = std::isfinite(phi0) && slope < -1e-14 * (1.0 + std::abs(phi0));
    State trial;
    while (alpha > 1e-12) {
      trial.x = st.x + alpha * step.dx;
      trial.y = st.y + alpha * step.dy;
      trial.yq = st.yq + alpha * step.dyq;
      trial.nu = st.nu + alpha * step.dnu;
      if (n > 0) {
        trial.X = st.X + alpha * step.dX;
        trial.Z = st.Z + alpha * step.dZ;
      }
      bool ok = slacks(trial.x, trial.X, trial.s_lin, trial.s_quad) && (trial.y.size() == 0 || trial.y.minCoeff() > 0.0) &&
                (trial.yq.size() == 0 || trial.yq.minCoeff() > 0.0);
      if (ok && n > 0) {
        Eigen::LLT<MatrixXd> zl(trial.Z);
        ok = zl.info() == Eigen::Success;
      }
      if (ok) {
        res_new = residual(mu, trial);
        if (std::isfinite(res_new.merit)) {
          if (res_new.merit <= (1.0 - 0.01 * alpha) * merit_ref) break;
          if (descent && barrier_value(mu, trial) <= phi0 + 1e-4 * alpha * slope) break;
        }
      }
      alpha *= 0.5;
    }
    if (alpha <= 1e-12) return false;
    st = std::move(trial);
    return true;
  }

  /// -objective - mu (sum log s + log det X) at a state whose slacks are current.
  double barrier_value(double mu, const State& st) const {
    double v = -prob.objective_value(st.x, st.X);
    v -= mu * (st.s_lin.array().log().sum() + st.s_quad.array().log().sum());
    if (n > 0) {
      Eigen::LLT<MatrixXd> llt(st.X);
      if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
      const VectorXd d = llt.matrixLLT().diagonal();
      v -= 2.0 * mu * d.array().log().sum();
    }
    return v;
  }

  bool centred(const Residual& r, const State& st) const {
    VectorXd fg;
    MatrixXd fh;
    objective_derivatives(st.x, fg, fh);
    const double sx = 1.0 + (fg.size() ? fg.cwiseAbs().maxCoeff() : 0.0);
    if (r.rx.size() && r.rx.cwiseAbs().maxCoeff() > kDualTol * sx) return false;
    if (n > 0) {
      const double sc = 1.0 + (prob.objective_matrix.empty() ? 0.0 : prob.objective_matrix.dense(n).cwiseAbs().maxCoeff());
      if (r.RX.cwiseAbs().maxCoeff() > kDualTol * sc) return false;
    }
    for (std::size_t l = 0; l < prob.equalities.size(); ++l)
      if (std::abs(r.req[l]) > kPrimalTol * (1.0 + std::abs(prob.equalities[l].b))) return false;
    return r.comp_lin <= kProximity && r.comp_mat <= kProximity;
  }

  static constexpr double kDualTol = 1e-10;
  static constexpr double kPrimalTol = 1e-10;
  static constexpr double kProximity = 1e-2;
  static constexpr std::size_t kMeritWindow = 8;

  double gap(const State& st) const {
    double g = st.y.dot(st.s_lin) + st.yq.dot(st.s_quad);
    if (n > 0) g += st.X.cwiseProduct(st.Z).sum();
    return g;
  }

  /// Completes a primal strictly feasible state with duals on the central path
  /// in the complementarity sense.
  bool init_state(State& st, double mu) const {
    if (!slacks(st.x, st.X, st.s_lin, st.s_quad)) return false;
    st.y = mu * st.s_lin.cwiseInverse();
    st.yq = mu * st.s_quad.cwiseInverse();
    st.nu = VectorXd::Zero(static_cast<Eigen::Index>(prob.equalities.size()));
    if (n > 0) {
      Eigen::LLT<MatrixXd> llt(st.X);
      st.Z = mu * llt.solve(MatrixXd::Identity(n, n));
      st.Z = 0.5 * (st.Z + st.Z.transpose()).eval();
    }
    return true;
  }

  enum class Outcome { Converged, Stopped, MaxIter, Stall };

  struct RunResult {
    Outcome outcome = Outcome::Stall;
    double mu = 1.0;
    int newton = 0;
    int centerings = 0;
    std::vector<double> trace;
    Residual last;
  };

  RunResult run(State& st, const SolverOptions& opt, const std::function<bool(const State&)>& stop) const {
    RunResult rr;
    rr.mu = opt.mu0;
    for (int outer = 0; outer < 400; ++outer) {
      Residual res = residual(rr.mu, st);
      int stage_steps = 0;
      std::vector<double> recent{res.merit};
      while (!centred(res, st)) {
        if (rr.newton >= opt.max_newton) {
          rr.outcome = Outcome::MaxIter;
          rr.last = res;
          return rr;
        }
        if (stage_steps >= opt.max_stage_newton) break;
        Step step = newton(rr.mu, st, res);
        Residual next;
        if (!step.ok || !line_search(rr.mu, st, step, *std::max_element(recent.begin(), recent.end()), next)) {
          // Accept a stalled stage only when it is already close to the path.
          if (res.comp_lin <= 0.5 && res.comp_mat <= 0.5) break;
          rr.outcome = Outcome::Stall;
          rr.last = res;
          return rr;
        }
        res = std::move(next);
        recent.push_back(res.merit);
        if (recent.size() > kMeritWindow) recent.erase(recent.begin());
        ++rr.newton;
        ++stage_steps;
      }
      rr.last = res;
      ++rr.centerings;
      rr.trace.push_back(prob.objective_value(st.x, st.X));
      if (stop && stop(st)) {
        rr.outcome = Outcome::Stopped;
        return rr;
      }
      if (gap(st) <= opt.tol && centred(res, st)) {
        rr.outcome = Outcome::Converged;
        return rr;
      }
      rr.mu /= opt.mu_factor;
    }
    rr.outcome = Outcome::MaxIter;
    return rr;
  }
};

bool strictly_feasible(const Engine& eng, const VectorXd& x, const MatrixXd& X) {
  VectorXd sl, sq;
  if (!eng.slacks(x, X, sl, sq)) return false;
  for (const auto& e : eng.prob.equalities)
    if (std::abs(e.b - eng.lin_value(e, x, X)) > 1e-9 * (1.0 + std::abs(e.b))) return false;
  return true;
}

struct PhaseOne {
  bool feasible = false;
  VectorXd x;
  MatrixXd X;
  int iterations = 0;
  std::string message;
};

PhaseOne phase_one(const Engine& eng, const SolverOptions& opt) {
  const ConicProblem& P = eng.prob;
  const int p = P.n_scalar;
  const int n = P.matrix_dim;

  VectorXd x0 = P.x0 ? *P.x0 : VectorXd::Zero(p);
  MatrixXd X0 = n > 0 ? (P.X0 ? *P.X0 : MatrixXd::Identity(n, n)) : MatrixXd();

  // Minimum-norm correction onto the equality affine set.
  const int nl = static_cast<int>(P.equalities.size());
  if (nl > 0) {
    std::vector<MatrixXd> B(nl);
    MatrixXd gram = MatrixXd::Zero(nl, nl);
    VectorXd r(nl);
    for (int l = 0; l < nl; ++l) {
      if (n > 0) B[l] = P.equalities[l].A.dense(n);
      r[l] = P.equalities[l].b - eng.lin_value(P.equalities[l], x0, X0);
    }
    for (int l = 0; l < nl; ++l)
      for (int m = 0; m < nl; ++m) {
        double g = 0.0;
        if (P.equalities[l].a.size() && P.equalities[m].a.size()) g += P.equalities[l].a.dot(P.equalities[m].a);
        if (n > 0) g += B[l].cwiseProduct(B[m]).sum();
        gram(l, m) = g;
      }
    const VectorXd mu = gram.completeOrthogonalDecomposition().solve(r);
    for (int l = 0; l < nl; ++l) {
      if (P.equalities[l].a.size()) x0 += mu[l] * P.equalities[l].a;
      if (n > 0) X0 += mu[l] * B[l];
    }
  }

  // Initial infeasibility level.
  double worst = 0.0;
  for (const auto& c : eng.ineq) worst = std::max(worst, eng.lin_value(c, x0, X0) - c.b);
  for (const auto& q : P.quadratics) worst = std::max(worst, x0.dot(q.Q * x0) + dot_or_zero(q.q, x0) - q.c);
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(X0, Eigen::EigenvaluesOnly);
    worst = std::max(worst, -es.eigenvalues()[0]);
  }
  const double s0 = worst + 1.0;

  ConicProblem aux;
  aux.n_scalar = p + 1;
  aux.matrix_dim = n;
  aux.objective = VectorXd::Zero(p + 1);
  aux.objective[p] = -1.0;
  auto lift = [&](const VectorXd& a) {
    VectorXd out = VectorXd::Zero(p + 1);
    if (a.size()) out.head(p) = a;
    return out;
  };
  for (const auto& c : eng.ineq) {
    LinearConstraint lc;
    lc.a = lift(c.a);
    lc.a[p] = -(1.0 + (n > 0 ? c.A.trace() : 0.0));
    lc.A = c.A;
    lc.b = c.b;
    aux.inequalities.push_back(std::move(lc));
  }
  for (const auto& c : P.equalities) {
    LinearConstraint lc;
    lc.a = lift(c.a);
    lc.a[p] = n > 0 ? -c.A.trace() : 0.0;
    lc.A = c.A;
    lc.b = c.b;
    aux.equalities.push_back(std::move(lc));
  }
  for (const auto& q : P.quadratics) {
    QuadraticConstraint qc;
    qc.Q = MatrixXd::Zero(p + 1, p + 1);
    qc.Q.topLeftCorner(p, p) = q.Q;
    qc.q = lift(q.q);
    qc.q[p] = -1.0;
    qc.c = q.c;
    aux.quadratics.push_back(std::move(qc));
  }
  {
    LinearConstraint lb;  // s >= -1
    lb.a = VectorXd::Zero(p + 1);
    lb.a[p] = -1.0;
    lb.b = 1.0;
    aux.inequalities.push_back(std::move(lb));
  }
  const double radius = 1e3 * (1.0 + (p > 0 ? x0.cwiseAbs().maxCoeff() : 0.0));
  for (int i = 0; i < p; ++i) {
    LinearConstraint up, lo;
    up.a = VectorXd::Zero(p + 1);
    up.a[i] = 1.0;
    up.b = x0[i] + radius;
    lo.a = VectorXd::Zero(p + 1);
    lo.a[i] = -1.0;
    lo.b = -x0[i] + radius;
    aux.inequalities.push_back(std::move(up));
    aux.inequalities.push_back(std::move(lo));
  }
  MatrixXd Y0;
  if (n > 0) {
    Y0 = X0 + s0 * MatrixXd::Identity(n, n);
    LinearConstraint tr;
    for (int i = 0; i < n; ++i) tr.A.add_entry(i, i, 1.0);
    tr.b = 1e3 * (1.0 + Y0.trace());
    aux.inequalities.push_back(std::move(tr));
  }

  Engine aux_eng(aux);
  Engine::State st;
  st.x = VectorXd(p + 1);
  st.x.head(p) = x0;
  st.x[p] = s0;
  st.X = Y0;
  PhaseOne out;
  if (!aux_eng.init_state(st, opt.mu0)) {
    out.message = "phase I: could not construct an interior start";
    return out;
  }
  SolverOptions o = opt;
  o.tol = 1e-10;
  auto stop = [&](const Engine::State& s) { return s.x[p] < 0.0; };
  Engine::RunResult rr = aux_eng.run(st, o, stop);
  out.iterations = rr.newton;
  if (rr.outcome == Engine::Outcome::Stopped) {
    out.feasible = true;
    out.x = st.x.head(p);
    const double s = st.x[p];
    if (n > 0) out.X = st.X - s * MatrixXd::Identity(n, n);
    return out;
  }
  out.message = rr.outcome == Engine::Outcome::Converged ? "phase I: no strictly feasible point"
                                                         : "phase I: did not converge";
  return out;
}


}  // namespace

ConicSolution solve(const ConicProblem& problem, const SolverOptions& options) {
  problem.validate();
  Engine eng(problem);
  ConicSolution sol;
  SolverReport& rep = sol.report;
  const int n = problem.matrix_dim;

  Engine::State st;
  bool have_start = false;
  if (problem.x0 || problem.X0) {
    st.x = problem.x0 ? *problem.x0 : VectorXd::Zero(problem.n_scalar);
    st.X = n > 0 ? (problem.X0 ? *problem.X0 : MatrixXd::Identity(n, n)) : MatrixXd();
    have_start = strictly_feasible(eng, st.x, st.X);
  }
  if (!have_start) {
    PhaseOne ph = phase_one(eng, options);
    rep.phase1_iterations = ph.iterations;
    if (!ph.feasible) {
      rep.status = ph.message == "phase I: no strictly feasible point" ? Status::Infeasible : Status::NumericalFailure;
      rep.message = ph.message;
      sol.x = ph.x;
      return sol;
    }
    st.x = std::move(ph.x);
    st.X = std::move(ph.X);
  }
  if (!eng.init_state(st, options.mu0)) {
    rep.status = Status::NumericalFailure;
    rep.message = "start point left the barrier domain";
    return sol;
  }

  Engine::RunResult rr = eng.run(st, options, {});
  rep.iterations = rr.newton;
  rep.centering_steps = rr.centerings;
  rep.objective_trace = rr.trace;
  rep.duality_gap_estimate = eng.gap(st);
  rep.barrier_parameter_final = rr.mu;
  switch (rr.outcome) {
    case Engine::Outcome::Converged: rep.status = Status::Optimal; break;
    case Engine::Outcome::MaxIter: rep.status = Status::MaxIter; rep.message = "iteration budget exhausted"; break;
    default: rep.status = Status::NumericalFailure; rep.message = "Newton step breakdown"; break;
  }

  sol.x = st.x;
  sol.X = st.X;
  rep.objective_value = problem.objective_value(st.x, st.X);
  const int n_user = static_cast<int>(problem.inequalities.size());
  rep.ineq_multipliers = st.y.head(n_user);
  rep.quad_multipliers = st.yq;
  rep.eq_multipliers = st.nu;
  rep.matrix_multiplier = st.Z;
  rep.stationarity_residual = rr.last.rx.size() ? rr.last.rx.cwiseAbs().maxCoeff() : 0.0;
  return sol;
}

ConicSolution solve(const ConicProblem& problem, double tol) {
  SolverOptions o;
  o.tol = tol;
  return solve(problem, o);
}

}  // namespace arwpcn::conic
