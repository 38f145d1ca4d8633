#include "aerialqp/qp_solver.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace aerialqp {

const char* to_string(QPStatus status) {
  switch (status) {
    case QPStatus::kOptimal: return "optimal";
    case QPStatus::kInfeasible: return "infeasible";
    case QPStatus::kMaxIter: return "max_iter";
  }
  return "unknown";
}

double kkt_residual(const QPInstance& p, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda_eq,
                    const Eigen::VectorXd& mu_in) {
  Eigen::VectorXd grad = p.H * x + p.g;
  if (p.A_eq.rows() > 0) grad.noalias() += p.A_eq.transpose() * lambda_eq;
  if (p.A_in.rows() > 0) grad.noalias() += p.A_in.transpose() * mu_in;
  double res = grad.cwiseAbs().maxCoeff();
  if (p.A_eq.rows() > 0) res = std::max(res, (p.A_eq * x - p.b_eq).cwiseAbs().maxCoeff());
  if (p.A_in.rows() > 0) {
    const Eigen::VectorXd slack = p.A_in * x - p.b_in;
    res = std::max(res, slack.maxCoeff());
    res = std::max(res, -mu_in.minCoeff());
    res = std::max(res, mu_in.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }
  return res;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDependenceTol = 1e-10;

// Constraint i in the dual form: normal_i' x >= rhs_i (equalities hold with "=").
struct ConstraintSet {
  Eigen::MatrixXd normals;  // d x (m_e + m_i)
  Eigen::VectorXd rhs;
  Eigen::Index num_eq = 0;

  [[nodiscard]] bool is_equality(Eigen::Index i) const { return i < num_eq; }
  [[nodiscard]] double slack(Eigen::Index i, const Eigen::VectorXd& x) const { return normals.col(i).dot(x) - rhs[i]; }
};

// Orthogonal factorization of L^{-1} N_A, rebuilt whenever the active set changes.
class ActiveFactorization {
 public:
  ActiveFactorization(const Eigen::MatrixXd& L_inv, Eigen::Index dim) : L_inv_(L_inv), dim_(dim) {}

  void rebuild(const ConstraintSet& cs, const std::vector<Eigen::Index>& active) {
    q_ = static_cast<Eigen::Index>(active.size());
    if (q_ == 0) {
      Q_ = Eigen::MatrixXd::Identity(dim_, dim_);
      R_.resize(0, 0);
      return;
    }
    Eigen::MatrixXd B(dim_, q_);
    for (Eigen::Index k = 0; k < q_; ++k) B.col(k) = L_inv_ * cs.normals.col(active[static_cast<std::size_t>(k)]);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
    Q_ = qr.householderQ() * Eigen::MatrixXd::Identity(dim_, dim_);
    R_ = qr.matrixQR().topLeftCorner(q_, q_).triangularView<Eigen::Upper>();
  }

  // Primal step z (in the null space of the active normals) and multiplier change r for normal np.
  // Returns false when np is linearly dependent on the active normals (z = 0).
  bool directions(const Eigen::VectorXd& np, Eigen::VectorXd& z, Eigen::VectorXd& r) const {
    const Eigen::VectorXd dd = Q_.transpose() * (L_inv_ * np);
    const Eigen::Index free = dim_ - q_;
    if (q_ > 0) {
      r = R_.triangularView<Eigen::Upper>().solve(dd.head(q_));
    } else {
      r.resize(0);
    }
    const double total = dd.norm();
    if (free == 0 || dd.tail(free).norm() <= kDependenceTol * total) {
      z = Eigen::VectorXd::Zero(dim_);
      return false;
    }
    z = L_inv_.transpose() * (Q_.rightCols(free) * dd.tail(free));
    return true;
  }

  // Solves the equality-constrained subproblem on the active set for (x, u).
  void solve_active(const ConstraintSet& cs, const std::vector<Eigen::Index>& active, const Eigen::VectorXd& g,
                    Eigen::VectorXd& x, Eigen::VectorXd& u) const {
    const Eigen::VectorXd g_hat = L_inv_ * g;
    Eigen::VectorXd y;
    if (q_ == 0) {
      u.resize(0);
      y = -g_hat;
    } else {
      Eigen::VectorXd b(q_);
      for (Eigen::Index k = 0; k < q_; ++k) b[k] = cs.rhs[active[static_cast<std::size_t>(k)]];
      const Eigen::MatrixXd Q1 = Q_.leftCols(q_);
      const Eigen::VectorXd w = R_.transpose().triangularView<Eigen::Lower>().solve(b) + Q1.transpose() * g_hat;
      u = R_.triangularView<Eigen::Upper>().solve(w);
      y = Q1 * (R_.triangularView<Eigen::Upper>() * u) - g_hat;
    }
    x = L_inv_.transpose() * y;
  }

 private:
  const Eigen::MatrixXd& L_inv_;
  Eigen::Index dim_;
  Eigen::Index q_ = 0;
  Eigen::MatrixXd Q_;
  Eigen::MatrixXd R_;
};

void check_dimensions(const QPInstance& p) {
  const Eigen::Index d = p.H.rows();
  if (d == 0 || p.H.cols() != d || p.g.size() != d) throw std::invalid_argument("qp: H/g dimension mismatch");
  if (p.A_eq.rows() != p.b_eq.size() || (p.A_eq.rows() > 0 && p.A_eq.cols() != d)) {
    throw std::invalid_argument("qp: equality block dimension mismatch");
  }
  if (p.A_in.rows() != p.b_in.size() || (p.A_in.rows() > 0 && p.A_in.cols() != d)) {
    throw std::invalid_argument("qp: inequality block dimension mismatch");
  }
  if (p.A_eq.rows() > d) throw std::invalid_argument("qp: more equality rows than variables");
}

}  // namespace

QPSolution solve_qp(const QPInstance& p, const QPSettings& settings) {
  check_dimensions(p);
  const Eigen::Index d = p.dim();
  const Eigen::Index me = p.A_eq.rows();
  const Eigen::Index mi = p.A_in.rows();

  Eigen::LLT<Eigen::MatrixXd> llt(p.H);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("qp: H is not positive definite");
  const Eigen::MatrixXd L_inv =
      llt.matrixL().solve(Eigen::MatrixXd::Identity(d, d));

  ConstraintSet cs;
  cs.num_eq = me;
  cs.normals.resize(d, me + mi);
  cs.rhs.resize(me + mi);
  if (me > 0) {
    cs.normals.leftCols(me) = p.A_eq.transpose();
    cs.rhs.head(me) = p.b_eq;
  }
  if (mi > 0) {
    cs.normals.rightCols(mi) = -p.A_in.transpose();
    cs.rhs.tail(mi) = -p.b_in;
  }

  QPSolution sol;
  Eigen::VectorXd x = -llt.solve(p.g);
  std::vector<Eigen::Index> active;
  std::vector<double> u;
  std::vector<bool> is_active(static_cast<std::size_t>(me + mi), false);
  ActiveFactorization fact(L_inv, d);
  fact.rebuild(cs, active);

  Eigen::VectorXd z, r;
  auto finish = [&](QPStatus status) {
    sol.status = status;
    sol.x = x;
    sol.lambda_eq = Eigen::VectorXd::Zero(me);
    sol.mu_in = Eigen::VectorXd::Zero(mi);
    if (status == QPStatus::kOptimal) {
      Eigen::VectorXd u_polished;
      fact.solve_active(cs, active, p.g, sol.x, u_polished);
      for (std::size_t k = 0; k < active.size(); ++k) {
        const Eigen::Index c = active[k];
        if (cs.is_equality(c)) {
          sol.lambda_eq[c] = -u_polished[static_cast<Eigen::Index>(k)];
        } else {
          sol.mu_in[c - me] = u_polished[static_cast<Eigen::Index>(k)];
          sol.active_set.push_back(static_cast<int>(c - me));
        }
      }
      std::sort(sol.active_set.begin(), sol.active_set.end());
    }
    sol.kkt_residual = kkt_residual(p, sol.x, sol.lambda_eq, sol.mu_in);
    return sol;
  };

  // Equalities enter first with full steps; their multipliers carry no sign restriction.
  for (Eigen::Index c = 0; c < me; ++c) {
    const Eigen::VectorXd np = cs.normals.col(c);
    const double s = cs.slack(c, x);
    if (!fact.directions(np, z, r)) {
      const double scale = std::max(1.0, std::abs(cs.rhs[c]));
      if (std::abs(s) <= settings.tol * scale) continue;  // redundant row
      return finish(QPStatus::kInfeasible);
    }
    const double t = -s / z.dot(np);
    x += t * z;
    for (std::size_t k = 0; k < u.size(); ++k) u[k] -= t * r[static_cast<Eigen::Index>(k)];
    active.push_back(c);
    u.push_back(t);
    is_active[static_cast<std::size_t>(c)] = true;
    fact.rebuild(cs, active);
    ++sol.iterations;
  }

  while (true) {
    // Most violated inequality; ties resolve to the lowest index.
    Eigen::Index p_idx = -1;
    double worst = -settings.tol;
    for (Eigen::Index c = me; c < me + mi; ++c) {
      if (is_active[static_cast<std::size_t>(c)]) continue;
      const double s = cs.slack(c, x);
      if (s < worst) {
        worst = s;
        p_idx = c;
      }
    }
    if (p_idx < 0) return finish(QPStatus::kOptimal);

    const Eigen::VectorXd np = cs.normals.col(p_idx);
    double u_p = 0.0;
    while (true) {
      if (sol.iterations >= settings.max_iter) return finish(QPStatus::kMaxIter);
      const bool independent = fact.directions(np, z, r);

      // Dual step: largest t keeping active inequality multipliers nonnegative.
      double t1 = kInf;
      std::size_t drop = active.size();
      for (std::size_t k = 0; k < active.size(); ++k) {
        if (cs.is_equality(active[k])) continue;
        const double rk = r[static_cast<Eigen::Index>(k)];
        if (rk > 0.0) {
          const double ratio = u[k] / rk;
          if (ratio < t1) {
            t1 = ratio;
            drop = k;
          }
        }
      }
      // Primal step: t that makes constraint p active.
      const double t2 = independent ? -cs.slack(p_idx, x) / z.dot(np) : kInf;
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) return finish(QPStatus::kInfeasible);

      if (independent) x += t * z;
      for (std::size_t k = 0; k < u.size(); ++k) u[k] -= t * r[static_cast<Eigen::Index>(k)];
      u_p += t;

      if (t2 <= t1) {
        active.push_back(p_idx);
        u.push_back(u_p);
        is_active[static_cast<std::size_t>(p_idx)] = true;
        fact.rebuild(cs, active);
        ++sol.iterations;
        break;
      }
      is_active[static_cast<std::size_t>(active[drop])] = false;
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
      u.erase(u.begin() + static_cast<std::ptrdiff_t>(drop));
      fact.rebuild(cs, active);
      ++sol.iterations;
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

void write_block(std::ostream& out, const char* name, const Eigen::MatrixXd& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << m(r, c);
    out << '\n';
  }
}

Eigen::MatrixXd read_block(std::istream& in, const std::string& expected) {
  std::string name;
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> name >> rows >> cols) || name != expected || rows < 0 || cols < 0) {
    throw std::runtime_error("qp dump: expected block '" + expected + "'");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!(in >> m(r, c))) throw std::runtime_error("qp dump: truncated block '" + expected + "'");
    }
  }
  return m;
}

}  // namespace

void write_qp_text(std::ostream& out, const QPInstance& p) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  write_block(out, "H", p.H);
  write_block(out, "g", p.g);
  write_block(out, "A_eq", p.A_eq);
  write_block(out, "b_eq", p.b_eq);
  write_block(out, "A_in", p.A_in);
  write_block(out, "b_in", p.b_in);
  out.flags(flags);
  out.precision(precision);
}

QPInstance read_qp_text(std::istream& in) {
  QPInstance p;
  p.H = read_block(in, "H");
  p.g = read_block(in, "g");
  p.A_eq = read_block(in, "A_eq");
  p.b_eq = read_block(in, "b_eq");
  p.A_in = read_block(in, "A_in");
  p.b_in = read_block(in, "b_in");
  return p;
}

}  // namespace aerialqp
