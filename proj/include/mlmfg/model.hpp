#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mlmfg/linalg.hpp"

namespace mlmfg {

/// Block sizes of a multi-leader-multi-follower game.
///
/// Leader nu owns `leader_dims[nu]` strategy coordinates and
/// `leader_rows[nu]` rows of the polyhedral constraint A x <= b. Follower
/// omega owns `follower_dims[omega]` strategy coordinates and
/// `follower_constraints[omega]` rows of g(x, y) <= 0. Stacked vectors
/// concatenate the blocks in index order.
struct Dimensions {
  std::vector<int> leader_dims;           // n_nu
  std::vector<int> follower_dims;         // m_omega
  std::vector<int> follower_constraints;  // l_omega
  std::vector<int> leader_rows;           // p_nu

  int n_leaders() const { return static_cast<int>(leader_dims.size()); }
  int n_followers() const { return static_cast<int>(follower_dims.size()); }
  int n() const;
  int m() const;
  int l() const;
  int p() const;

  int leader_offset(int nu) const;
  int follower_offset(int omega) const;
  int constraint_offset(int omega) const;
  int leader_row_offset(int nu) const;

  /// Throws DimensionError unless every list is nonempty, the leader and
  /// follower lists have matching lengths, and every entry is positive.
  void check() const;

  bool operator==(const Dimensions&) const = default;
};

struct LeaderBlock {
  Matrix H;               // n_nu x n_nu
  Matrix G_cross;         // n_nu x (n - n_nu), columns follow the other leaders in order
  std::vector<Matrix> D;  // D[omega]: n_nu x m_omega
  Vector q;               // n_nu
  Matrix A;               // p_nu x n_nu
  Vector b;               // p_nu

  bool operator==(const LeaderBlock&) const;
};

struct FollowerBlock {
  Matrix M;        // m_omega x m_omega, symmetric
  Matrix Q_cross;  // m_omega x (m - m_omega), columns follow the other followers in order
  Vector c;        // m_omega
  double a = 0.0;

  bool operator==(const FollowerBlock&) const;
};

/// Data of the quadratic game
///
///   leader nu:     min  1/2 x'H x + x'G_cross x_{-nu} + sum_omega x'D[omega] y_omega + q'x
///                  s.t. A x <= b, x >= 0
///   follower omega: min 1/2 y'M y + y'Q_cross y_{-omega} - sum_nu x_nu'D_{nu,omega} y
///                  s.t. c'y + sum_nu d_nu'x_nu + a >= 0, y >= 0
///
/// where d_nu is `coupling[nu]`.
struct ProblemInstance {
  Dimensions dims;
  std::vector<LeaderBlock> leaders;
  std::vector<FollowerBlock> followers;
  std::vector<Vector> coupling;

  bool operator==(const ProblemInstance&) const;
};

/// The two-leader two-follower quadratic instance used in the experiments
/// (the extended model, with x >= 0 on the leaders).
ProblemInstance hori_fukushima_extended();

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
  /// Smallest eigenvalue of the symmetric part of the stacked follower
  /// matrix; NaN when the shapes did not allow assembling it.
  double min_follower_eigenvalue = 0.0;
};

/// Checks shapes, symmetry of every M_omega (1e-12 absolute) and positive
/// definiteness of the follower block matrix (smallest eigenvalue of its
/// symmetric part > 1e-10). Never throws.
ValidationReport validate_instance(const ProblemInstance& inst);

/// Polyhedron {x | A x <= b, x >= 0} of the stacked leader strategies.
struct LeaderConstraints {
  Matrix A;  // p x n, block diagonal
  Vector b;  // p
};

/// Evaluation interface of a smooth multi-leader-multi-follower game.
///
/// Derivatives use the transposed-Jacobian convention: for F: R^k -> R^r,
/// grad F is the k x r matrix whose column i is the gradient of F_i.
/// Follower constraints are written g(x, y) <= 0 and must be block
/// separable: g^omega depends on (x, y^omega) only. Implementations are
/// immutable; all members are pure functions of their arguments.
class GameModel {
 public:
  virtual ~GameModel() = default;

  virtual const Dimensions& dims() const = 0;

  /// Followers' VI field G(x, y), an m-vector.
  virtual Vector follower_field(const Vector& x, const Vector& y) const = 0;
  /// grad_y G, m x m.
  virtual Matrix follower_field_jac_y(const Vector& x, const Vector& y) const = 0;
  /// grad_x G, n x m.
  virtual Matrix follower_field_jac_x(const Vector& x, const Vector& y) const = 0;

  virtual Vector constraints(const Vector& x, const Vector& y) const = 0;
  /// grad_y g, m x l.
  virtual Matrix constraint_jac_y(const Vector& x, const Vector& y) const = 0;
  /// grad_x g, n x l.
  virtual Matrix constraint_jac_x(const Vector& x, const Vector& y) const = 0;
  /// sum_i lambda_i grad^2_yy g_i, m x m.
  virtual Matrix constraint_hess_yy(const Vector& x, const Vector& y, const Vector& lambda) const = 0;
  /// sum_i lambda_i grad^2_xy g_i, n x m.
  virtual Matrix constraint_hess_xy(const Vector& x, const Vector& y, const Vector& lambda) const = 0;

  /// theta^nu(x, y).
  virtual double leader_objective(int nu, const Vector& x, const Vector& y) const = 0;
  /// grad_{x^nu} theta^nu, an n_nu-vector.
  virtual Vector leader_grad_x(int nu, const Vector& x, const Vector& y) const = 0;
  /// grad_y theta^nu, an m-vector.
  virtual Vector leader_grad_y(int nu, const Vector& x, const Vector& y) const = 0;

  virtual const LeaderConstraints& leader_constraints() const = 0;

  /// Rows of the leader polyhedron owned by leader nu, restricted to x^nu.
  LeaderConstraints leader_block_constraints(int nu) const;
};

/// GameModel of a validated ProblemInstance. Follower constraints are
/// packed per follower as (-c'y - sum_nu d_nu'x_nu - a, -y) so that
/// l_omega = 1 + m_omega.
class QuadraticGameModel final : public GameModel {
 public:
  explicit QuadraticGameModel(ProblemInstance inst);

  const Dimensions& dims() const override { return inst_.dims; }
  const ProblemInstance& instance() const { return inst_; }

  /// Stacked follower matrix [[M_1, Q_12, ...], [Q_21, M_2, ...], ...].
  const Matrix& follower_matrix() const { return follower_matrix_; }

  Vector follower_field(const Vector& x, const Vector& y) const override;
  Matrix follower_field_jac_y(const Vector& x, const Vector& y) const override;
  Matrix follower_field_jac_x(const Vector& x, const Vector& y) const override;
  Vector constraints(const Vector& x, const Vector& y) const override;
  Matrix constraint_jac_y(const Vector& x, const Vector& y) const override;
  Matrix constraint_jac_x(const Vector& x, const Vector& y) const override;
  Matrix constraint_hess_yy(const Vector& x, const Vector& y, const Vector& lambda) const override;
  Matrix constraint_hess_xy(const Vector& x, const Vector& y, const Vector& lambda) const override;
  double leader_objective(int nu, const Vector& x, const Vector& y) const override;
  Vector leader_grad_x(int nu, const Vector& x, const Vector& y) const override;
  Vector leader_grad_y(int nu, const Vector& x, const Vector& y) const override;
  const LeaderConstraints& leader_constraints() const override { return leader_constraints_; }

 private:
  void check_args(const Vector& x, const Vector& y) const;
  Vector others(const Vector& x, int nu) const;

  ProblemInstance inst_;
  Matrix follower_matrix_;  // K, m x m
  Matrix leader_coupling_;  // B, m x n, block (omega, nu) = D_{nu,omega}'
  Matrix constraint_y_;     // grad_y g, m x l
  Matrix constraint_x_;     // grad_x g, n x l
  Vector constraint_const_;
  LeaderConstraints leader_constraints_;
};

/// Validates `inst` and wraps it. Throws DimensionError naming the first
/// offending field, or std::invalid_argument listing every violation.
std::unique_ptr<QuadraticGameModel> build_quadratic_model(const ProblemInstance& inst);

}  // namespace mlmfg
