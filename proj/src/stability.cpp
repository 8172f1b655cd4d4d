#include "poislin/stability.hpp"

#include <Eigen/SVD>

namespace poislin {

namespace {

int numeric_rank(const Eigen::MatrixXd& m, double tol, Eigen::MatrixXd* kernel = nullptr) {
  if (m.rows() == 0 || m.cols() == 0) {
    if (kernel) *kernel = Eigen::MatrixXd::Identity(m.cols(), m.cols());
    return 0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  double thresh = tol * std::max(1.0, svd.singularValues()(0));
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > thresh) ++rank;
  if (kernel) {
    *kernel = svd.matrixV().rightCols(m.cols() - rank);
  }
  return rank;
}

}  // namespace

void validate(const FoliationData& data) {
  if (data.n < 0 || data.b1 < 0 || data.b2 < 0 || data.b3 < 0)
    throw StructuralError("FoliationData: negative dimension");
  if (data.var.rows() != data.b2 || data.var.cols() != data.n)
    throw StructuralError("FoliationData: var matrix must be b2 x n");
  if (data.wedge.rows() != data.b3 || data.wedge.cols() != data.b1 * data.n)
    throw StructuralError("FoliationData: wedge matrix must be b3 x (b1*n)");
}

StabilityReport check_conditions(const FoliationData& data, double tol) {
  validate(data);
  StabilityReport rep;
  Eigen::MatrixXd ker_var;
  rep.rank_var = numeric_rank(data.var, tol, &ker_var);
  rep.kernel_dim = data.n - rep.rank_var;
  rep.c1 = (rep.rank_var == data.b2);
  rep.c2 = (rep.kernel_dim <= 1);

  Eigen::MatrixXd ker_wedge;
  rep.rank_wedge = numeric_rank(data.wedge, tol, &ker_wedge);
  rep.c3 = (rep.rank_wedge == data.b1 * data.n);

  rep.equivalent_H2_AS_zero = rep.c1 && rep.c2 && rep.c3;
  if (!rep.equivalent_H2_AS_zero) {
    if (!rep.c2 && ker_var.cols() > 0)
      rep.certificate = ker_var.col(0);
    else if (!rep.c3 && ker_wedge.cols() > 0)
      rep.certificate = ker_wedge.col(0);
    else if (!rep.c1) {
      // cokernel witness: a left null vector of var
      Eigen::MatrixXd coker;
      numeric_rank(data.var.transpose(), tol, &coker);
      if (coker.cols() > 0) rep.certificate = coker.col(0);
    }
  }
  return rep;
}

int h2_AS_kernel_dim(const FoliationData& data, double tol) {
  validate(data);
  int rank_var = numeric_rank(data.var, tol);
  int rank_wedge = numeric_rank(data.wedge, tol);
  int coker_var = data.b2 - rank_var;
  int ker_wedge = data.b1 * data.n - rank_wedge;
  int ker_var = data.n - rank_var;
  int lambda2_ker = ker_var * (ker_var - 1) / 2;
  return coker_var + ker_wedge + lambda2_ker;
}

}  // namespace poislin
