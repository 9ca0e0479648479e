#include "qgraph/qspace.hpp"

#include <cmath>

namespace qgraph {

namespace {

void check_weights(const BlockStructure& blocks, const std::vector<std::vector<double>>& rho) {
  if (blocks.num_blocks() < 1) fail(Errc::ValidationError, "block structure is empty");
  for (int n : blocks.sizes)
    if (n < 1) fail(Errc::ValidationError, "block sizes must be positive");
  if (static_cast<int>(rho.size()) != blocks.num_blocks())
    fail(Errc::ValidationError, "density weights must cover every block");
  for (int a = 0; a < blocks.num_blocks(); ++a)
    if (static_cast<int>(rho[a].size()) != blocks.sizes[a])
      fail(Errc::ValidationError, "density weight count mismatch in block " + std::to_string(a + 1));
}

}  // namespace

QuantumSpace::QuantumSpace(BlockStructure blocks, std::vector<std::vector<double>> rho)
    : blocks_(std::move(blocks)), rho_(std::move(rho)) {
  check_weights(blocks_, rho_);

  double trace = 0;
  for (int a = 0; a < num_blocks(); ++a) {
    for (double w : rho_[a]) {
      if (!(w > 0)) fail(Errc::NonInvertibleDensity, "density weight <= 0");
      trace += w;
    }
  }
  if (!within_tol(trace - 1.0)) fail(Errc::NotAState, "density weights do not sum to 1");

  delta_sq_ = 0;
  for (double w : rho_[0]) delta_sq_ += 1.0 / w;
  for (int a = 1; a < num_blocks(); ++a) {
    double s = 0;
    for (double w : rho_[a]) s += 1.0 / w;
    if (!within_tol(s - delta_sq_, delta_sq_))
      fail(Errc::NotDeltaForm, "inverse weight sums differ across blocks");
  }

  dim_ = blocks_.dim();
  offsets_.resize(num_blocks());
  int off = 0;
  for (int a = 0; a < num_blocks(); ++a) {
    offsets_[a] = off;
    off += blocks_.sizes[a] * blocks_.sizes[a];
  }
  weights_.resize(dim_);
  unit_block_.resize(dim_);
  unit_row_.resize(dim_);
  unit_col_.resize(dim_);
  for (int a = 0; a < num_blocks(); ++a) {
    int n = blocks_.sizes[a];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        int p = unit_index(a, i, j);
        weights_[p] = rho_[a][j];
        unit_block_[p] = a;
        unit_row_[p] = i;
        unit_col_[p] = j;
      }
  }
}

QuantumSpace QuantumSpace::tracial(BlockStructure blocks) {
  int dim = blocks.dim();
  std::vector<std::vector<double>> rho;
  for (int n : blocks.sizes) rho.emplace_back(n, static_cast<double>(n) / dim);
  return QuantumSpace(std::move(blocks), std::move(rho));
}

AlgebraElement QuantumSpace::unit(int a, int i, int j) const {
  AlgebraElement x = AlgebraElement::Zero(dim_);
  x[unit_index(a, i, j)] = 1.0;
  return x;
}

AlgebraElement QuantumSpace::identity() const {
  AlgebraElement x = AlgebraElement::Zero(dim_);
  for (int a = 0; a < num_blocks(); ++a)
    for (int i = 0; i < blocks_.sizes[a]; ++i) x[unit_index(a, i, i)] = 1.0;
  return x;
}

AlgebraElement QuantumSpace::block_identity(int a) const {
  AlgebraElement x = AlgebraElement::Zero(dim_);
  for (int i = 0; i < blocks_.sizes[a]; ++i) x[unit_index(a, i, i)] = 1.0;
  return x;
}

AlgebraElement QuantumSpace::ideal_identity(const std::vector<int>& blocks) const {
  AlgebraElement x = AlgebraElement::Zero(dim_);
  for (int a : blocks)
    for (int i = 0; i < blocks_.sizes[a]; ++i) x[unit_index(a, i, i)] = 1.0;
  return x;
}

AlgebraElement QuantumSpace::multiply(const AlgebraElement& x, const AlgebraElement& y) const {
  AlgebraElement z = AlgebraElement::Zero(dim_);
  for (int a = 0; a < num_blocks(); ++a) {
    int n = blocks_.sizes[a], off = offsets_[a];
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n; ++l) {
        Complex s = 0;
        for (int k = 0; k < n; ++k) s += x[off + i * n + k] * y[off + k * n + l];
        z[off + i * n + l] = s;
      }
  }
  return z;
}

AlgebraElement QuantumSpace::star(const AlgebraElement& x) const {
  AlgebraElement z(dim_);
  for (int p = 0; p < dim_; ++p) {
    int a = unit_block_[p];
    z[unit_index(a, unit_col_[p], unit_row_[p])] = std::conj(x[p]);
  }
  return z;
}

Complex QuantumSpace::psi(const AlgebraElement& x) const {
  Complex s = 0;
  for (int a = 0; a < num_blocks(); ++a)
    for (int i = 0; i < blocks_.sizes[a]; ++i) s += rho_[a][i] * x[unit_index(a, i, i)];
  return s;
}

Complex QuantumSpace::gns_inner(const AlgebraElement& x, const AlgebraElement& y) const {
  // ⟨e_p|e_q⟩ = δ_pq w_p, so no products are needed.
  Complex s = 0;
  for (int p = 0; p < dim_; ++p) s += std::conj(x[p]) * y[p] * weights_[p];
  return s;
}

AlgebraElement QuantumSpace::adapted_unit(int a, int i, int j) const {
  AlgebraElement x = AlgebraElement::Zero(dim_);
  x[unit_index(a, i, j)] = 1.0 / std::sqrt(rho_[a][i] * rho_[a][j]);
  return x;
}

std::vector<AlgebraElement> QuantumSpace::adapted_units() const {
  std::vector<AlgebraElement> fs;
  fs.reserve(dim_);
  for (int a = 0; a < num_blocks(); ++a)
    for (int i = 0; i < blocks_.sizes[a]; ++i)
      for (int j = 0; j < blocks_.sizes[a]; ++j) fs.push_back(adapted_unit(a, i, j));
  return fs;
}

Mat QuantumSpace::left_mult_matrix(const AlgebraElement& x) const {
  Mat L = Mat::Zero(dim_, dim_);
  // e_ij e_kl = δ_jk e_il within a block.
  for (int a = 0; a < num_blocks(); ++a) {
    int n = blocks_.sizes[a], off = offsets_[a];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Complex c = x[off + i * n + j];
        if (c == 0.0) continue;
        for (int l = 0; l < n; ++l) L(off + i * n + l, off + j * n + l) += c;
      }
  }
  return L;
}

Mat QuantumSpace::right_mult_matrix(const AlgebraElement& x) const {
  Mat R = Mat::Zero(dim_, dim_);
  for (int a = 0; a < num_blocks(); ++a) {
    int n = blocks_.sizes[a], off = offsets_[a];
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        Complex c = x[off + k * n + l];
        if (c == 0.0) continue;
        for (int i = 0; i < n; ++i) R(off + i * n + l, off + i * n + k) += c;
      }
  }
  return R;
}

AlgebraElement QuantumSpace::multiply_tensor(const TensorElement& t) const {
  AlgebraElement z = AlgebraElement::Zero(dim_);
  for (int a = 0; a < num_blocks(); ++a) {
    int n = blocks_.sizes[a], off = offsets_[a];
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) z[off + i * n + l] += t(off + i * n + k, off + k * n + l);
  }
  return z;
}

TensorElement QuantumSpace::comultiply(const AlgebraElement& x) const {
  TensorElement t = TensorElement::Zero(dim_, dim_);
  for (int a = 0; a < num_blocks(); ++a) {
    int n = blocks_.sizes[a], off = offsets_[a];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Complex c = x[off + i * n + j];
        if (c == 0.0) continue;
        for (int k = 0; k < n; ++k) t(off + i * n + k, off + k * n + j) += c / rho_[a][k];
      }
  }
  return t;
}

TensorElement QuantumSpace::tensor_left(const AlgebraElement& x, const TensorElement& t) const {
  return left_mult_matrix(x) * t;
}

TensorElement QuantumSpace::tensor_right(const TensorElement& t, const AlgebraElement& y) const {
  // Right multiplication acts on the second leg: coefficients transform by
  // the transpose of the right-multiplication matrix.
  return t * right_mult_matrix(y).transpose();
}

TensorElement QuantumSpace::tensor_star(const TensorElement& t) const {
  TensorElement z(dim_, dim_);
  for (int p = 0; p < dim_; ++p) {
    int sp = unit_index(unit_block_[p], unit_col_[p], unit_row_[p]);
    for (int q = 0; q < dim_; ++q) {
      int sq = unit_index(unit_block_[q], unit_col_[q], unit_row_[q]);
      z(sp, sq) = std::conj(t(p, q));
    }
  }
  return z;
}

Complex QuantumSpace::gns_inner2(const TensorElement& s, const TensorElement& t) const {
  Complex acc = 0;
  for (int p = 0; p < dim_; ++p)
    for (int q = 0; q < dim_; ++q) acc += std::conj(s(p, q)) * t(p, q) * weights_[p] * weights_[q];
  return acc;
}

AlgebraElement QuantumSpace::bvalued_inner2(const TensorElement& s, const TensorElement& t) const {
  // ⟨Σ s_pq e_p⊗e_q | Σ t_p'q' e_p'⊗e_q'⟩ = Σ ψ(e_p* e_p') e_q* e_q'
  //                                       = Σ_p w_p conj(s_pq) t_pq' (e_q* e_q').
  Mat W = Mat::Zero(dim_, dim_);
  for (int q = 0; q < dim_; ++q)
    for (int q2 = 0; q2 < dim_; ++q2) {
      Complex acc = 0;
      for (int p = 0; p < dim_; ++p) acc += weights_[p] * std::conj(s(p, q)) * t(p, q2);
      W(q, q2) = acc;
    }
  AlgebraElement out = AlgebraElement::Zero(dim_);
  // e_q* e_q2 = δ_{block} δ_{row} e_{col(q), col(q2)}.
  for (int q = 0; q < dim_; ++q) {
    int a = unit_block_[q];
    int n = blocks_.sizes[a], off = offsets_[a];
    int i = unit_row_[q], j = unit_col_[q];
    for (int l = 0; l < n; ++l) out[off + j * n + l] += W(q, off + i * n + l);
  }
  return out;
}

Mat QuantumSpace::adjoint_map(const Mat& L) const {
  Mat A(dim_, dim_);
  for (int p = 0; p < dim_; ++p)
    for (int q = 0; q < dim_; ++q) A(p, q) = std::conj(L(q, p)) * weights_[q] / weights_[p];
  return A;
}

double QuantumSpace::op_norm(const AlgebraElement& x) const {
  double nrm = 0;
  for (int a = 0; a < num_blocks(); ++a) {
    int n = blocks_.sizes[a], off = offsets_[a];
    Mat blk(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) blk(i, j) = x[off + i * n + j];
    Eigen::JacobiSVD<Mat> svd(blk);
    nrm = std::max(nrm, svd.singularValues()(0));
  }
  return nrm;
}

bool QuantumSpace::is_hermitian(const AlgebraElement& x) const {
  AlgebraElement d = x - star(x);
  return within_tol(max_abs(d), max_abs(x));
}

double validate_delta_form(const QuantumSpace& space) {
  double trace = 0, delta_sq = 0;
  for (int a = 0; a < space.num_blocks(); ++a) {
    double s = 0;
    for (int i = 0; i < space.block_size(a); ++i) {
      double w = space.rho(a, i);
      if (!(w > 0)) fail(Errc::NonInvertibleDensity, "density weight <= 0");
      trace += w;
      s += 1.0 / w;
    }
    if (a == 0)
      delta_sq = s;
    else if (!within_tol(s - delta_sq, delta_sq))
      fail(Errc::NotDeltaForm, "inverse weight sums differ across blocks");
  }
  if (!within_tol(trace - 1.0)) fail(Errc::NotAState, "density weights do not sum to 1");

  // m∘m* = δ²·id on every unit.
  for (int p = 0; p < space.dim(); ++p) {
    AlgebraElement e = AlgebraElement::Zero(space.dim());
    e[p] = 1.0;
    AlgebraElement r = space.multiply_tensor(space.comultiply(e)) - delta_sq * e;
    if (!within_tol(max_abs(r), delta_sq))
      fail(Errc::NotDeltaForm, "m m* != delta^2 id on unit " + std::to_string(p));
  }
  return delta_sq;
}

}  // namespace qgraph
