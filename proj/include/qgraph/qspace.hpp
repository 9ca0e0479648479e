#pragma once

#include <vector>

#include "qgraph/common.hpp"

namespace qgraph {

/// Block structure of B ≅ ⊕_a M_{n(a)}(C).
struct BlockStructure {
  std::vector<int> sizes;

  int num_blocks() const { return static_cast<int>(sizes.size()); }
  int dim() const {
    int d = 0;
    for (int n : sizes) d += n * n;
    return d;
  }
  /// Σ_a n(a): row dimension of the block-diagonal embedding into M_N.
  int matrix_dim() const {
    int d = 0;
    for (int n : sizes) d += n;
    return d;
  }
  bool operator==(const BlockStructure&) const = default;
};

/// A finite quantum set (B, ψ): block structure, the diagonal density
/// weights of ψ, and δ². The constructor enforces invertibility of ρ,
/// state normalization and the δ-form condition Tr(ρ_a^{-1}) = δ².
class QuantumSpace {
 public:
  QuantumSpace(BlockStructure blocks, std::vector<std::vector<double>> rho);

  /// The unique tracial δ-form: ρ_a = (n(a)/dim B)·I, δ² = dim B.
  static QuantumSpace tracial(BlockStructure blocks);

  const BlockStructure& blocks() const { return blocks_; }
  int dim() const { return dim_; }
  int num_blocks() const { return blocks_.num_blocks(); }
  int block_size(int a) const { return blocks_.sizes[a]; }
  double delta_sq() const { return delta_sq_; }
  double rho(int a, int i) const { return rho_[a][i]; }

  // Unit bookkeeping: p = offset(a) + i*n(a) + j.
  int unit_index(int a, int i, int j) const { return offsets_[a] + i * blocks_.sizes[a] + j; }
  int unit_block(int p) const { return unit_block_[p]; }
  int unit_row(int p) const { return unit_row_[p]; }
  int unit_col(int p) const { return unit_col_[p]; }
  int block_offset(int a) const { return offsets_[a]; }

  /// GNS weight ⟨e_p|e_p⟩ = ρ_{a, col(p)}.
  double weight(int p) const { return weights_[p]; }

  AlgebraElement unit(int a, int i, int j) const;
  AlgebraElement identity() const;
  AlgebraElement block_identity(int a) const;
  /// Identity of the ideal spanned by the given blocks.
  AlgebraElement ideal_identity(const std::vector<int>& blocks) const;

  AlgebraElement multiply(const AlgebraElement& x, const AlgebraElement& y) const;
  AlgebraElement star(const AlgebraElement& x) const;
  Complex psi(const AlgebraElement& x) const;

  /// ⟨x|y⟩ := ψ(x*y).
  Complex gns_inner(const AlgebraElement& x, const AlgebraElement& y) const;

  /// f_ij^(a) = ψ(e_ii)^{-1/2} e_ij ψ(e_jj)^{-1/2}; ordered like the units.
  AlgebraElement adapted_unit(int a, int i, int j) const;
  std::vector<AlgebraElement> adapted_units() const;

  Mat left_mult_matrix(const AlgebraElement& x) const;
  Mat right_mult_matrix(const AlgebraElement& x) const;

  /// m(x ⊗ y) = xy extended linearly over the coordinates.
  AlgebraElement multiply_tensor(const TensorElement& t) const;
  /// m*, the GNS adjoint of multiply_tensor: m*(e_ij) = Σ_k ρ_k^{-1} e_ik ⊗ e_kj.
  TensorElement comultiply(const AlgebraElement& x) const;

  TensorElement tensor_left(const AlgebraElement& x, const TensorElement& t) const;
  TensorElement tensor_right(const TensorElement& t, const AlgebraElement& y) const;
  TensorElement tensor_star(const TensorElement& t) const;

  /// (ψ⊗ψ)(s* t) on B ⊗ B.
  Complex gns_inner2(const TensorElement& s, const TensorElement& t) const;
  /// B-valued inner product ⟨x⊗y | z⊗w⟩ = ψ(x*z) y*w extended over coordinates.
  AlgebraElement bvalued_inner2(const TensorElement& s, const TensorElement& t) const;

  /// GNS adjoint of a linear map on B given as a dim×dim matrix.
  Mat adjoint_map(const Mat& L) const;

  /// Norm of x as an operator (max spectral norm over blocks).
  double op_norm(const AlgebraElement& x) const;

  bool is_hermitian(const AlgebraElement& x) const;

 private:
  BlockStructure blocks_;
  std::vector<std::vector<double>> rho_;
  double delta_sq_ = 0;
  int dim_ = 0;
  std::vector<int> offsets_;
  std::vector<double> weights_;
  std::vector<int> unit_block_, unit_row_, unit_col_;
};

/// Re-verifies the invariants and the operator identity m∘m* = δ²·id on
/// every unit; returns δ². Throws NotAState / NotDeltaForm /
/// NonInvertibleDensity.
double validate_delta_form(const QuantumSpace& space);

}  // namespace qgraph
