#include "poislin/liealg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace poislin {

void validate_spec(const LieAlgebraSpec& g, double tol) {
  const int d = g.dim;
  if (d < 1 || d > kMaxDim) throw StructuralError("LieAlgebraSpec: dim out of range");
  if (g.c.size() != static_cast<size_t>(d) * d * d)
    throw StructuralError("LieAlgebraSpec: structure constant array has wrong size");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        if (std::abs(g.structure(i, j, k) + g.structure(j, i, k)) > tol)
          throw StructuralError("LieAlgebraSpec: structure constants are not antisymmetric");
  // Jacobi: sum_m C^m_{ij}C^l_{mk} + C^m_{jk}C^l_{mi} + C^m_{ki}C^l_{mj} = 0
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double s = 0;
          for (int m = 0; m < d; ++m)
            s += g.structure(i, j, m) * g.structure(m, k, l) +
                 g.structure(j, k, m) * g.structure(m, i, l) +
                 g.structure(k, i, m) * g.structure(m, j, l);
          if (std::abs(s) > tol)
            throw StructuralError("LieAlgebraSpec: Jacobi identity fails");
        }
  if (g.inner_product) {
    const Eigen::MatrixXd& ip = *g.inner_product;
    if (ip.rows() != d || ip.cols() != d)
      throw StructuralError("LieAlgebraSpec: inner product has wrong shape");
    if ((ip - ip.transpose()).norm() > tol)
      throw StructuralError("LieAlgebraSpec: inner product is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ip);
    if (es.eigenvalues().minCoeff() <= 0)
      throw StructuralError("LieAlgebraSpec: inner product is not positive definite");
    // ad-invariance: <[x,y],z> + <y,[x,z]> = 0 on basis triples
    for (int x = 0; x < d; ++x)
      for (int y = 0; y < d; ++y)
        for (int z = 0; z < d; ++z) {
          double s = 0;
          for (int m = 0; m < d; ++m)
            s += g.structure(x, y, m) * ip(m, z) + g.structure(x, z, m) * ip(y, m);
          if (std::abs(s) > 1e-10)
            throw StructuralError("LieAlgebraSpec: inner product is not ad-invariant");
        }
  }
}

LieAlgebraSpec lie_so3() {
  LieAlgebraSpec g;
  g.dim = 3;
  g.name = "so3";
  g.c.assign(27, 0.0);
  auto eps = [](int i, int j, int k) -> double {
    if (i == j || j == k || i == k) return 0.0;
    return ((j - i) * (k - j) * (k - i) > 0) ? 1.0 : -1.0;
  };
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) g.structure(i, j, k) = eps(i, j, k);
  return g;
}

// su(2) in the basis i*sigma_1, i*sigma_2, i*sigma_3, where [e_i,e_j] =
// -2 eps_{ijk} e_k; isomorphic to so3 but with differently scaled constants.
LieAlgebraSpec lie_su2() {
  LieAlgebraSpec g = lie_so3();
  g.name = "su2";
  for (auto& v : g.c) v *= -2.0;
  return g;
}

LieAlgebraSpec direct_sum(const LieAlgebraSpec& a, const LieAlgebraSpec& b,
                          const std::string& name) {
  LieAlgebraSpec g;
  g.dim = a.dim + b.dim;
  g.name = name;
  g.c.assign(static_cast<size_t>(g.dim) * g.dim * g.dim, 0.0);
  for (int i = 0; i < a.dim; ++i)
    for (int j = 0; j < a.dim; ++j)
      for (int k = 0; k < a.dim; ++k) g.structure(i, j, k) = a.structure(i, j, k);
  for (int i = 0; i < b.dim; ++i)
    for (int j = 0; j < b.dim; ++j)
      for (int k = 0; k < b.dim; ++k)
        g.structure(a.dim + i, a.dim + j, a.dim + k) = b.structure(i, j, k);
  return g;
}

LieAlgebraSpec lie_abelian(int n) {
  LieAlgebraSpec g;
  g.dim = n;
  g.name = "abelian" + std::to_string(n);
  g.c.assign(static_cast<size_t>(n) * n * n, 0.0);
  return g;
}

LieAlgebraSpec lie_so3_so3() { return direct_sum(lie_so3(), lie_so3(), "so3+so3"); }

LieAlgebraSpec lie_so3_r() { return direct_sum(lie_so3(), lie_abelian(1), "so3+R"); }

LieAlgebraSpec lie_by_name(const std::string& name) {
  if (name == "so3") return lie_so3();
  if (name == "su2") return lie_su2();
  if (name == "so3+so3") return lie_so3_so3();
  if (name == "so3+R") return lie_so3_r();
  if (name.rfind("abelian", 0) == 0) {
    int n = std::stoi(name.substr(7));
    return lie_abelian(n);
  }
  throw StructuralError("unknown built-in Lie algebra: " + name);
}

CompactCenterReport compact_center_check(const LieAlgebraSpec& g, double tol) {
  const int d = g.dim;
  CompactCenterReport rep;

  // center: kernel of x -> ad_x, as a (d*d) x d matrix
  Eigen::MatrixXd ad_map(d * d, d);
  for (int i = 0; i < d; ++i)
    for (int c = 0; c < d; ++c)
      for (int e = 0; e < d; ++e) ad_map(c * d + e, i) = g.structure(i, e, c);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_center(ad_map);
  double thresh = tol * std::max(1.0, svd_center.singularValues().size()
                                          ? svd_center.singularValues()(0)
                                          : 0.0);
  int rank_center = 0;
  for (int i = 0; i < svd_center.singularValues().size(); ++i)
    if (svd_center.singularValues()(i) > thresh) ++rank_center;
  rep.center_dim = d - rank_center;

  // derived algebra: span of the brackets of basis pairs
  Eigen::MatrixXd der(d, d * (d - 1) / 2);
  int col = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j, ++col)
      for (int k = 0; k < d; ++k) der(k, col) = g.structure(i, j, k);
  if (der.cols() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_der(der);
    double t2 = tol * std::max(1.0, svd_der.singularValues()(0));
    rep.derived_dim = 0;
    for (int i = 0; i < svd_der.singularValues().size(); ++i)
      if (svd_der.singularValues()(i) > t2) ++rep.derived_dim;
  }

  // Killing form K_{ab} = tr(ad_a ad_b)
  Eigen::MatrixXd killing(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      double s = 0;
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) s += g.structure(a, e, c) * g.structure(b, c, e);
      killing(a, b) = s;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(killing);
  rep.killing_eigenvalues = es.eigenvalues();
  double scale = std::max(1.0, rep.killing_eigenvalues.cwiseAbs().maxCoeff());
  int negative = 0, zero = 0;
  for (int i = 0; i < d; ++i) {
    double l = rep.killing_eigenvalues(i);
    if (l > tol * scale)
      ;  // positive eigenvalue: not compact
    else if (l < -tol * scale)
      ++negative;
    else
      ++zero;
  }
  rep.is_compact_type = (negative + zero == d) && (zero == rep.center_dim);
  rep.admissible = rep.is_compact_type && rep.center_dim <= 1;
  return rep;
}

}  // namespace poislin
