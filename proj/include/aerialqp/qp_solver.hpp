#ifndef AERIALQP_QP_SOLVER_HPP_
#define AERIALQP_QP_SOLVER_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace aerialqp {

/// min 0.5 x'Hx + g'x  s.t.  A_eq x = b_eq,  A_in x <= b_in.
struct QPInstance {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;

  [[nodiscard]] Eigen::Index dim() const { return H.rows(); }
  [[nodiscard]] double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(H * x) + g.dot(x); }
};

enum class QPStatus { kOptimal, kInfeasible, kMaxIter };

const char* to_string(QPStatus status);

struct QPSolution {
  Eigen::VectorXd x;
  QPStatus status = QPStatus::kMaxIter;
  int iterations = 0;          // active-set changes (additions + removals)
  std::vector<int> active_set; // indices into the inequality rows, ascending
  Eigen::VectorXd lambda_eq;   // H x + g + A_eq' lambda + A_in' mu = 0
  Eigen::VectorXd mu_in;
  double kkt_residual = 0.0;
};

struct QPSettings {
  double tol = 1e-9;
  int max_iter = 200;
};

/// Largest violation among stationarity, primal feasibility, dual feasibility and
/// complementary slackness for a candidate primal/dual point.
double kkt_residual(const QPInstance& p, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda_eq,
                    const Eigen::VectorXd& mu_in);

/// Dual active-set method (Goldfarb-Idnani) for strictly convex dense QPs.
/// Throws std::invalid_argument when dimensions disagree or H is not positive definite.
QPSolution solve_qp(const QPInstance& p, const QPSettings& settings = {});

/// Plain-text dump: one header line per block ("H rows cols") followed by row-major values.
void write_qp_text(std::ostream& out, const QPInstance& p);
QPInstance read_qp_text(std::istream& in);

}  // namespace aerialqp

#endif  // AERIALQP_QP_SOLVER_HPP_
