#include "mlmfg/model.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "mlmfg/errors.hpp"

namespace mlmfg {

namespace {

int sum(const std::vector<int>& v) { return std::accumulate(v.begin(), v.end(), 0); }

int prefix(const std::vector<int>& v, int k) {
  if (k < 0 || k > static_cast<int>(v.size())) {
    throw DimensionError(fmt::format("block index {} out of range [0, {}]", k, v.size()));
  }
  return std::accumulate(v.begin(), v.begin() + k, 0);
}

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) out(i, j++) = v;
    ++i;
  }
  return out;
}

Vector vec(std::initializer_list<double> values) {
  Vector out(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) out(i++) = v;
  return out;
}

bool same(const Matrix& a, const Matrix& b) { return a.rows() == b.rows() && a.cols() == b.cols() && a == b; }

void expect_shape(std::vector<std::string>& out, const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                  const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    out.push_back(fmt::format("{}: dimension mismatch, expected {}x{}, got {}x{}", name, rows, cols, m.rows(),
                              m.cols()));
  }
}

void expect_length(std::vector<std::string>& out, const Vector& v, Eigen::Index len, const std::string& name) {
  if (v.size() != len) {
    out.push_back(fmt::format("{}: dimension mismatch, expected length {}, got {}", name, len, v.size()));
  }
}

std::vector<std::string> shape_violations(const ProblemInstance& inst) {
  std::vector<std::string> out;
  const Dimensions& d = inst.dims;
  try {
    d.check();
  } catch (const DimensionError& e) {
    out.push_back(fmt::format("dims: {}", e.what()));
    return out;
  }
  const int n = d.n();
  const int m = d.m();
  if (static_cast<int>(inst.leaders.size()) != d.n_leaders()) {
    out.push_back(fmt::format("leaders: dimension mismatch, expected {} entries, got {}", d.n_leaders(),
                              inst.leaders.size()));
    return out;
  }
  if (static_cast<int>(inst.followers.size()) != d.n_followers()) {
    out.push_back(fmt::format("followers: dimension mismatch, expected {} entries, got {}", d.n_followers(),
                              inst.followers.size()));
    return out;
  }
  if (static_cast<int>(inst.coupling.size()) != d.n_leaders()) {
    out.push_back(fmt::format("coupling: dimension mismatch, expected {} entries, got {}", d.n_leaders(),
                              inst.coupling.size()));
    return out;
  }
  for (int nu = 0; nu < d.n_leaders(); ++nu) {
    const LeaderBlock& L = inst.leaders[nu];
    const int nn = d.leader_dims[nu];
    const int pn = d.leader_rows[nu];
    const std::string pre = fmt::format("leaders[{}]", nu);
    expect_shape(out, L.H, nn, nn, pre + ".H");
    expect_shape(out, L.G_cross, nn, n - nn, pre + ".G_cross");
    if (static_cast<int>(L.D.size()) != d.n_followers()) {
      out.push_back(fmt::format("{}.D: dimension mismatch, expected {} matrices, got {}", pre, d.n_followers(),
                                L.D.size()));
    } else {
      for (int w = 0; w < d.n_followers(); ++w) {
        expect_shape(out, L.D[w], nn, d.follower_dims[w], fmt::format("{}.D[{}]", pre, w));
      }
    }
    expect_length(out, L.q, nn, pre + ".q");
    expect_shape(out, L.A, pn, nn, pre + ".A");
    expect_length(out, L.b, pn, pre + ".b");
    expect_length(out, inst.coupling[nu], nn, fmt::format("coupling[{}]", nu));
  }
  for (int w = 0; w < d.n_followers(); ++w) {
    const FollowerBlock& F = inst.followers[w];
    const int mw = d.follower_dims[w];
    const std::string pre = fmt::format("followers[{}]", w);
    expect_shape(out, F.M, mw, mw, pre + ".M");
    expect_shape(out, F.Q_cross, mw, m - mw, pre + ".Q_cross");
    expect_length(out, F.c, mw, pre + ".c");
    if (d.follower_constraints[w] != 1 + mw) {
      out.push_back(fmt::format("dims.l_omega[{}]: dimension mismatch, quadratic followers need 1 + m_omega = {}, got {}",
                                w, 1 + mw, d.follower_constraints[w]));
    }
  }
  return out;
}

Matrix stacked_follower_matrix(const ProblemInstance& inst) {
  const Dimensions& d = inst.dims;
  Matrix K = Matrix::Zero(d.m(), d.m());
  for (int w = 0; w < d.n_followers(); ++w) {
    const int row = d.follower_offset(w);
    const int mw = d.follower_dims[w];
    K.block(row, row, mw, mw) = inst.followers[w].M;
    int cross_col = 0;
    for (int o = 0; o < d.n_followers(); ++o) {
      if (o == w) continue;
      const int mo = d.follower_dims[o];
      K.block(row, d.follower_offset(o), mw, mo) = inst.followers[w].Q_cross.middleCols(cross_col, mo);
      cross_col += mo;
    }
  }
  return K;
}

}  // namespace

int Dimensions::n() const { return sum(leader_dims); }
int Dimensions::m() const { return sum(follower_dims); }
int Dimensions::l() const { return sum(follower_constraints); }
int Dimensions::p() const { return sum(leader_rows); }
int Dimensions::leader_offset(int nu) const { return prefix(leader_dims, nu); }
int Dimensions::follower_offset(int omega) const { return prefix(follower_dims, omega); }
int Dimensions::constraint_offset(int omega) const { return prefix(follower_constraints, omega); }
int Dimensions::leader_row_offset(int nu) const { return prefix(leader_rows, nu); }

void Dimensions::check() const {
  if (leader_dims.empty() || follower_dims.empty()) {
    throw DimensionError("at least one leader and one follower are required");
  }
  if (leader_rows.size() != leader_dims.size()) {
    throw DimensionError(fmt::format("p_nu has {} entries for {} leaders", leader_rows.size(), leader_dims.size()));
  }
  if (follower_constraints.size() != follower_dims.size()) {
    throw DimensionError(fmt::format("l_omega has {} entries for {} followers", follower_constraints.size(),
                                     follower_dims.size()));
  }
  for (const auto* list : {&leader_dims, &follower_dims, &follower_constraints, &leader_rows}) {
    for (int v : *list) {
      if (v <= 0) throw DimensionError("block sizes must be strictly positive");
    }
  }
}

bool LeaderBlock::operator==(const LeaderBlock& o) const {
  if (D.size() != o.D.size()) return false;
  for (std::size_t i = 0; i < D.size(); ++i) {
    if (!same(D[i], o.D[i])) return false;
  }
  return same(H, o.H) && same(G_cross, o.G_cross) && same(q, o.q) && same(A, o.A) && same(b, o.b);
}

bool FollowerBlock::operator==(const FollowerBlock& o) const {
  return same(M, o.M) && same(Q_cross, o.Q_cross) && same(c, o.c) && a == o.a;
}

bool ProblemInstance::operator==(const ProblemInstance& o) const {
  if (coupling.size() != o.coupling.size()) return false;
  for (std::size_t i = 0; i < coupling.size(); ++i) {
    if (!same(coupling[i], o.coupling[i])) return false;
  }
  return dims == o.dims && leaders == o.leaders && followers == o.followers;
}

ProblemInstance hori_fukushima_extended() {
  ProblemInstance inst;
  inst.dims = Dimensions{{2, 2}, {2, 2}, {3, 3}, {2, 2}};

  const Matrix G12 = mat({{2, -1}, {2, 2}});
  const Matrix Q12 = mat({{1, 1}, {1, 2}});

  LeaderBlock l1;
  l1.H = mat({{3, -4}, {-4, 2}});
  l1.G_cross = G12;
  l1.D = {mat({{1, 2}, {2, 1}}), mat({{1, 2}, {1, 1}})};
  l1.q = vec({-6, -6});
  l1.A = mat({{2, 1}, {1, 2}});
  l1.b = vec({3, 1});

  LeaderBlock l2;
  l2.H = mat({{4, -5}, {-5, -3}});
  l2.G_cross = -G12.transpose();
  l2.D = {mat({{2, 1}, {1, 1}}), mat({{2, 1}, {1, 2}})};
  l2.q = vec({-6, -6});
  l2.A = mat({{1, 2}, {2, 1}});
  l2.b = vec({3, 1});

  FollowerBlock f1;
  f1.M = mat({{3, 1}, {1, 3}});
  f1.Q_cross = Q12;
  f1.c = vec({-1, -1});
  f1.a = 4;

  FollowerBlock f2;
  f2.M = mat({{2, 1}, {1, 3}});
  f2.Q_cross = -Q12.transpose();
  f2.c = vec({-1, -1});
  f2.a = 4;

  inst.leaders = {l1, l2};
  inst.followers = {f1, f2};
  inst.coupling = {vec({1, 1}), vec({1, 1})};
  return inst;
}

ValidationReport validate_instance(const ProblemInstance& inst) {
  ValidationReport report;
  report.violations = shape_violations(inst);
  if (!report.violations.empty()) {
    report.ok = false;
    report.min_follower_eigenvalue = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  for (std::size_t w = 0; w < inst.followers.size(); ++w) {
    const Matrix& M = inst.followers[w].M;
    const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12) {
      report.violations.push_back(fmt::format("followers[{}].M: not symmetric (max |M - M'| = {:.3e})", w, asym));
    }
  }
  const Matrix K = stacked_follower_matrix(inst);
  const Matrix sym = 0.5 * (K + K.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  report.min_follower_eigenvalue = eig.eigenvalues().minCoeff();
  if (!(report.min_follower_eigenvalue > 1e-10)) {
    report.violations.push_back(fmt::format(
        "follower matrix: not positive definite (smallest eigenvalue of symmetric part {:.6g})",
        report.min_follower_eigenvalue));
  }
  for (std::size_t nu = 0; nu < inst.leaders.size(); ++nu) {
    const auto& L = inst.leaders[nu];
    if (!L.H.allFinite() || !L.G_cross.allFinite() || !L.q.allFinite() || !L.A.allFinite() || !L.b.allFinite()) {
      report.violations.push_back(fmt::format("leaders[{}]: non-finite entries", nu));
    }
  }
  report.ok = report.violations.empty();
  return report;
}

LeaderConstraints GameModel::leader_block_constraints(int nu) const {
  const Dimensions& d = dims();
  const LeaderConstraints& all = leader_constraints();
  const int row = d.leader_row_offset(nu);
  const int col = d.leader_offset(nu);
  return LeaderConstraints{all.A.block(row, col, d.leader_rows[nu], d.leader_dims[nu]),
                           all.b.segment(row, d.leader_rows[nu])};
}

QuadraticGameModel::QuadraticGameModel(ProblemInstance inst) : inst_(std::move(inst)) {
  const Dimensions& d = inst_.dims;
  const int n = d.n();
  const int m = d.m();
  const int l = d.l();

  follower_matrix_ = stacked_follower_matrix(inst_);

  leader_coupling_ = Matrix::Zero(m, n);
  for (int w = 0; w < d.n_followers(); ++w) {
    for (int nu = 0; nu < d.n_leaders(); ++nu) {
      leader_coupling_.block(d.follower_offset(w), d.leader_offset(nu), d.follower_dims[w], d.leader_dims[nu]) =
          inst_.leaders[nu].D[w].transpose();
    }
  }

  // g^omega = (-c'y^omega - sum_nu d_nu'x^nu - a_omega, -y^omega)
  constraint_y_ = Matrix::Zero(m, l);
  constraint_x_ = Matrix::Zero(n, l);
  constraint_const_ = Vector::Zero(l);
  for (int w = 0; w < d.n_followers(); ++w) {
    const int row = d.constraint_offset(w);
    const int yo = d.follower_offset(w);
    const int mw = d.follower_dims[w];
    constraint_y_.block(yo, row, mw, 1) = -inst_.followers[w].c;
    for (int nu = 0; nu < d.n_leaders(); ++nu) {
      constraint_x_.block(d.leader_offset(nu), row, d.leader_dims[nu], 1) = -inst_.coupling[nu];
    }
    constraint_const_(row) = -inst_.followers[w].a;
    for (int j = 0; j < mw; ++j) constraint_y_(yo + j, row + 1 + j) = -1.0;
  }

  leader_constraints_.A = Matrix::Zero(d.p(), n);
  leader_constraints_.b = Vector::Zero(d.p());
  for (int nu = 0; nu < d.n_leaders(); ++nu) {
    const int row = d.leader_row_offset(nu);
    leader_constraints_.A.block(row, d.leader_offset(nu), d.leader_rows[nu], d.leader_dims[nu]) = inst_.leaders[nu].A;
    leader_constraints_.b.segment(row, d.leader_rows[nu]) = inst_.leaders[nu].b;
  }
}

void QuadraticGameModel::check_args(const Vector& x, const Vector& y) const {
  require_size(x, inst_.dims.n(), "x");
  require_size(y, inst_.dims.m(), "y");
}

Vector QuadraticGameModel::others(const Vector& x, int nu) const {
  const Dimensions& d = inst_.dims;
  const int off = d.leader_offset(nu);
  const int nn = d.leader_dims[nu];
  Vector out(x.size() - nn);
  out << x.head(off), x.tail(x.size() - off - nn);
  return out;
}

Vector QuadraticGameModel::follower_field(const Vector& x, const Vector& y) const {
  check_args(x, y);
  return follower_matrix_ * y - leader_coupling_ * x;
}

Matrix QuadraticGameModel::follower_field_jac_y(const Vector& x, const Vector& y) const {
  check_args(x, y);
  return follower_matrix_.transpose();
}

Matrix QuadraticGameModel::follower_field_jac_x(const Vector& x, const Vector& y) const {
  check_args(x, y);
  return -leader_coupling_.transpose();
}

Vector QuadraticGameModel::constraints(const Vector& x, const Vector& y) const {
  check_args(x, y);
  return constraint_const_ + constraint_y_.transpose() * y + constraint_x_.transpose() * x;
}

Matrix QuadraticGameModel::constraint_jac_y(const Vector& x, const Vector& y) const {
  check_args(x, y);
  return constraint_y_;
}

Matrix QuadraticGameModel::constraint_jac_x(const Vector& x, const Vector& y) const {
  check_args(x, y);
  return constraint_x_;
}

Matrix QuadraticGameModel::constraint_hess_yy(const Vector& x, const Vector& y, const Vector& lambda) const {
  check_args(x, y);
  require_size(lambda, inst_.dims.l(), "lambda");
  return Matrix::Zero(inst_.dims.m(), inst_.dims.m());
}

Matrix QuadraticGameModel::constraint_hess_xy(const Vector& x, const Vector& y, const Vector& lambda) const {
  check_args(x, y);
  require_size(lambda, inst_.dims.l(), "lambda");
  return Matrix::Zero(inst_.dims.n(), inst_.dims.m());
}

double QuadraticGameModel::leader_objective(int nu, const Vector& x, const Vector& y) const {
  check_args(x, y);
  const Dimensions& d = inst_.dims;
  const LeaderBlock& L = inst_.leaders.at(nu);
  const Vector xn = x.segment(d.leader_offset(nu), d.leader_dims[nu]);
  double value = 0.5 * xn.dot(L.H * xn) + xn.dot(L.G_cross * others(x, nu)) + L.q.dot(xn);
  for (int w = 0; w < d.n_followers(); ++w) {
    value += xn.dot(L.D[w] * y.segment(d.follower_offset(w), d.follower_dims[w]));
  }
  return value;
}

Vector QuadraticGameModel::leader_grad_x(int nu, const Vector& x, const Vector& y) const {
  check_args(x, y);
  const Dimensions& d = inst_.dims;
  const LeaderBlock& L = inst_.leaders.at(nu);
  const Vector xn = x.segment(d.leader_offset(nu), d.leader_dims[nu]);
  Vector grad = 0.5 * (L.H + L.H.transpose()) * xn + L.G_cross * others(x, nu) + L.q;
  for (int w = 0; w < d.n_followers(); ++w) {
    grad += L.D[w] * y.segment(d.follower_offset(w), d.follower_dims[w]);
  }
  return grad;
}

Vector QuadraticGameModel::leader_grad_y(int nu, const Vector& x, const Vector& y) const {
  check_args(x, y);
  const Dimensions& d = inst_.dims;
  const LeaderBlock& L = inst_.leaders.at(nu);
  const Vector xn = x.segment(d.leader_offset(nu), d.leader_dims[nu]);
  Vector grad(d.m());
  for (int w = 0; w < d.n_followers(); ++w) {
    grad.segment(d.follower_offset(w), d.follower_dims[w]) = L.D[w].transpose() * xn;
  }
  return grad;
}

std::unique_ptr<QuadraticGameModel> build_quadratic_model(const ProblemInstance& inst) {
  const auto shapes = shape_violations(inst);
  if (!shapes.empty()) throw DimensionError(shapes.front());
  const ValidationReport report = validate_instance(inst);
  if (!report.ok) {
    std::string msg = "invalid instance:";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw std::invalid_argument(msg);
  }
  return std::make_unique<QuadraticGameModel>(inst);
}

}  // namespace mlmfg
