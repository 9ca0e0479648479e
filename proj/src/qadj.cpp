#include "qgraph/qadj.hpp"

#include <cmath>

namespace qgraph {

SchurCheck check_schur_idempotent(const QuantumGraph& g) {
  const QuantumSpace& sp = g.space;
  double d2 = sp.delta_sq();
  double resid = 0, scale = 1.0;
  for (int p = 0; p < sp.dim(); ++p) {
    AlgebraElement e = AlgebraElement::Zero(sp.dim());
    e[p] = 1.0;
    TensorElement t = sp.comultiply(e);
    // (A ⊗ A) acts on coordinates as A t A^T.
    TensorElement at = g.adj.matrix * t * g.adj.matrix.transpose();
    AlgebraElement lhs = sp.multiply_tensor(at);
    AlgebraElement rhs = d2 * g.apply(e);
    resid = std::max(resid, max_abs(AlgebraElement(lhs - rhs)));
    scale = std::max({scale, max_abs(lhs), max_abs(rhs)});
  }
  return {within_tol(resid, scale), resid};
}

namespace {

// Embedding of a coordinate vector as a block-diagonal N×N matrix.
Mat embed(const QuantumSpace& sp, const AlgebraElement& x) {
  int N = sp.blocks().matrix_dim();
  Mat m = Mat::Zero(N, N);
  int row = 0;
  for (int a = 0; a < sp.num_blocks(); ++a) {
    int n = sp.block_size(a);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(row + i, row + j) = x[sp.unit_index(a, i, j)];
    row += n;
  }
  return m;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat k(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

}  // namespace

Mat choi_matrix(const QuantumGraph& g) {
  const QuantumSpace& sp = g.space;
  int N = sp.blocks().matrix_dim();
  Mat choi = Mat::Zero(N * N, N * N);
  for (int p = 0; p < sp.dim(); ++p) {
    AlgebraElement e = AlgebraElement::Zero(sp.dim());
    e[p] = 1.0;
    choi += kron(embed(sp, e), embed(sp, g.apply(e)));
  }
  return choi;
}

CpCheck check_cp(const QuantumGraph& g) {
  Mat choi = choi_matrix(g);
  double herm = max_abs(Mat(choi - choi.adjoint()));
  Mat h = 0.5 * (choi + Mat(choi.adjoint()));
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  double lo = es.eigenvalues().minCoeff();
  double hi = std::max(1.0, std::abs(es.eigenvalues().maxCoeff()));
  CpCheck out;
  out.min_eigenvalue = lo;
  out.hermiticity_residual = herm;
  out.cp = within_tol(herm, max_abs(choi)) && lo >= -tolerance() * hi;
  return out;
}

int kraus_rank(const QuantumGraph& g) {
  if (g.space.num_blocks() != 1) fail(Errc::MultiBlock, "Kraus rank requires a single block");
  if (!check_cp(g).cp) fail(Errc::NotCP, "Kraus rank requires a completely positive map");
  Mat choi = choi_matrix(g);
  Eigen::JacobiSVD<Mat> svd(choi);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0) return 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tolerance() * sv(0)) ++rank;
  return rank;
}

TensorElement epsilon_vector(const QuantumGraph& g) {
  TensorElement t = g.space.comultiply(g.space.identity());
  // (id ⊗ A): second-leg coordinates transform by A^T on the right.
  return (t * g.adj.matrix.transpose()) / g.space.delta_sq();
}

std::set<int> quantum_sources(const QuantumGraph& g) {
  const QuantumSpace& sp = g.space;
  std::set<int> out;
  for (int a = 0; a < sp.num_blocks(); ++a) {
    double m = 0;
    for (int i = 0; i < sp.block_size(a); ++i)
      for (int j = 0; j < sp.block_size(a); ++j)
        m = std::max(m, max_abs(Vec(g.adj.matrix.col(sp.unit_index(a, i, j)))));
    if (within_tol(m, max_abs(g.adj.matrix))) out.insert(a);
  }
  return out;
}

std::set<int> quantum_sinks(const QuantumGraph& g) {
  const QuantumSpace& sp = g.space;
  std::set<int> out;
  for (int a = 0; a < sp.num_blocks(); ++a) {
    double m = 0;
    for (int i = 0; i < sp.block_size(a); ++i)
      for (int j = 0; j < sp.block_size(a); ++j)
        m = std::max(m, max_abs(Vec(g.adj.matrix.row(sp.unit_index(a, i, j)).transpose())));
    if (within_tol(m, max_abs(g.adj.matrix))) out.insert(a);
  }
  return out;
}

Ideal range_ideal(const QuantumGraph& g) {
  std::set<int> sinks = quantum_sinks(g);
  Ideal k;
  for (int a = 0; a < g.space.num_blocks(); ++a)
    if (!sinks.count(a)) k.blocks.insert(a);
  return k;
}

GraphValidation validate_graph(const QuantumGraph& g) {
  GraphValidation v;
  if (g.adj.matrix.rows() != g.dim() || g.adj.matrix.cols() != g.dim())
    fail(Errc::ValidationError, "adjacency matrix has wrong dimensions");
  if (!g.adj.matrix.allFinite()) fail(Errc::ValidationError, "adjacency matrix has non-finite entries");
  v.delta_sq = validate_delta_form(g.space);
  v.schur = check_schur_idempotent(g);
  if (!v.schur.pass)
    fail(Errc::ValidationError,
         "quantum Schur idempotence fails, residual " + std::to_string(v.schur.residual));
  v.cp = check_cp(g);
  if (!v.cp.cp)
    fail(Errc::ValidationError,
         "adjacency is not completely positive, min Choi eigenvalue " +
             std::to_string(v.cp.min_eigenvalue));
  v.degenerate_zero = within_tol(max_abs(g.adj.matrix));
  return v;
}

QuantumGraph complete_graph(const QuantumSpace& space) {
  Mat A = Mat::Zero(space.dim(), space.dim());
  AlgebraElement id = space.identity();
  for (int p = 0; p < space.dim(); ++p) {
    AlgebraElement e = AlgebraElement::Zero(space.dim());
    e[p] = 1.0;
    A.col(p) = space.delta_sq() * space.psi(e) * id;
  }
  return {space, {A}};
}

QuantumGraph trivial_graph(const QuantumSpace& space) {
  return {space, {Mat::Identity(space.dim(), space.dim())}};
}

QuantumGraph rank_one_graph(const QuantumSpace& space, const std::vector<Mat>& t_blocks) {
  if (static_cast<int>(t_blocks.size()) != space.num_blocks())
    fail(Errc::ValidationError, "rank-one graph needs one T block per algebra block");
  for (int a = 0; a < space.num_blocks(); ++a) {
    int n = space.block_size(a);
    if (t_blocks[a].rows() != n || t_blocks[a].cols() != n)
      fail(Errc::ValidationError, "T block size mismatch");
    // Schur idempotence for A(x) = TxT* needs Tr(ρ_a^{-1} T_a* T_a) = δ² per block.
    Mat w = t_blocks[a].adjoint() * t_blocks[a];
    double tr = 0;
    for (int i = 0; i < n; ++i) tr += (w(i, i) / space.rho(a, i)).real();
    if (!within_tol(tr - space.delta_sq(), space.delta_sq()))
      fail(Errc::TraceConstraintViolated,
           "Tr(rho^{-1} T*T) = " + std::to_string(tr) + " != delta^2 on block " +
               std::to_string(a + 1));
  }
  AlgebraElement t = AlgebraElement::Zero(space.dim());
  for (int a = 0; a < space.num_blocks(); ++a) {
    int n = space.block_size(a);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) t[space.unit_index(a, i, j)] = t_blocks[a](i, j);
  }
  Mat A = space.left_mult_matrix(t) * space.right_mult_matrix(space.star(t));
  return {space, {A}};
}

QuantumGraph classical_graph(const Eigen::MatrixXd& zero_one) {
  int d = static_cast<int>(zero_one.rows());
  if (zero_one.cols() != d || d < 1) fail(Errc::ValidationError, "classical adjacency must be square");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (zero_one(i, j) != 0.0 && zero_one(i, j) != 1.0)
        fail(Errc::ValidationError, "classical adjacency entries must be 0 or 1");
  QuantumSpace space = QuantumSpace::tracial(BlockStructure{std::vector<int>(d, 1)});
  return {space, {zero_one.cast<Complex>()}};
}

QuantumGraph main_example(int n) {
  if (n < 1) fail(Errc::ValidationError, "main example needs n >= 1");
  QuantumSpace space = QuantumSpace::tracial(BlockStructure{{n, n, n}});
  Mat A = Mat::Zero(space.dim(), space.dim());
  // A(x1 ⊕ x2 ⊕ x3) = (x1+x2+x3) ⊕ (x1+x2) ⊕ 0, entrywise on matrix units.
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        int src = space.unit_index(a, i, j);
        A(space.unit_index(0, i, j), src) = 1.0;
        if (a < 2) A(space.unit_index(1, i, j), src) = 1.0;
      }
  return {space, {A}};
}

}  // namespace qgraph
