#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qgraph/qadj.hpp"

namespace qgraph {

/// Coordinates over the orthonormal basis of E_G.
using EdgeVector = Eigen::VectorXcd;

/// Element of E^⊗m in the orthonormal basis of that level.
/// Level 0 is B with its GNS-orthonormal unit basis.
struct TensorPowerVector {
  int level = 0;
  Vec coeffs;
};

struct StructuredFamily {
  enum class Kind { Pair, Sink };
  Kind kind = Kind::Pair;
  int a = -1;  // Pair: left block (the corner the family recovers)
  int b = -1;  // Pair: right block, b != a
  int c = -1;  // Sink: the sink block

  static StructuredFamily pair(int a, int b) { return {Kind::Pair, a, b, -1}; }
  static StructuredFamily sink(int c) { return {Kind::Sink, -1, -1, c}; }
  int corner() const { return kind == Kind::Pair ? a : c; }
  std::string describe() const;
};

struct TensorLevel {
  int dim = 0;
  // Spanning labels at level m are (i, beta): e_i ⊗ basis_beta^(m-1),
  // flattened i-major. Level 1 uses the E basis itself.
  Mat combo;      // spanning × dim; orthonormal columns w.r.t. span_gram
  Mat span_gram;  // spanning × spanning
  Mat to_basis;   // dim × spanning: combo^† span_gram
  std::vector<Mat> left_unit;   // per B unit: dim × dim
  std::vector<Mat> right_unit;  // per B unit: dim × dim
  // B-valued inner products ⟨e_i | x e_j⟩ as matrices on this level, used by
  // the Gram recursion one level up and by leg contraction; i*r1+j indexed.
  std::vector<Mat> cl;
};

struct CorrespondenceParams {
  int level_cap = 6;
  int span_cap = 20000;
};

struct MinimalityResult {
  bool minimal = false;
  std::optional<Ideal> witness;  // invariant ideal when not minimal
};

struct NonReturningResult {
  bool non_returning = false;
  bool vacuous = false;           // level < 2
  bool sufficient_only = false;   // left action not injective
  int witness_n = -1;             // refuting data when false
  int witness_eta = -1;
};

struct FamilyRecord {
  int block = -1;
  StructuredFamily family;
  std::set<int> phi_image_blocks;
  int period_start = 0;
  int period = 0;
};

struct ConditionSCertificate {
  bool certified = false;
  std::vector<FamilyRecord> families;
  std::string detail;
};

struct PeriodicProbe {
  enum class Result { No, Yes, Inconclusive };
  Result result = Result::No;
  std::optional<TensorPowerVector> witness;  // central with invertible ⟨ω|ω⟩
};

struct AperiodicityReport {
  enum class Kind { AperiodicCertified, NoPeriodUpToN, PeriodicAt };
  Kind kind = Kind::NoPeriodUpToN;
  int scanned_up_to = 0;
  int period = -1;
  std::optional<TensorPowerVector> witness;
  std::vector<int> dims;                // dim E^⊗n for the scanned levels
  std::vector<int> inconclusive_levels;
  std::string certified_via;            // "sink" / "source" for the structural case
};

/// The quantum edge correspondence E_G ⊂ B⊗B, built by reducing the spanning
/// family f_p · ε_G · f_q to an orthonormal basis under the ambient ψ⊗ψ inner
/// product, plus the tensor-power ladder over it.
class EdgeCorrespondence {
 public:
  static EdgeCorrespondence build(const QuantumGraph& g, CorrespondenceParams params = {});

  const QuantumGraph& graph() const { return graph_; }
  const QuantumSpace& space() const { return graph_.space; }
  int dim() const { return dim_; }
  bool faithful() const { return faithful_; }
  bool full() const { return full_; }
  const std::set<int>& sources() const { return sources_; }
  const std::set<int>& sinks() const { return sinks_; }

  const TensorElement& basis_coords(int k) const { return basis_[k]; }
  EdgeVector epsilon_coords() const { return eps_coords_; }
  /// ⟨e_k|e_l⟩ of the basis, as elements of B.
  const AlgebraElement& basis_inner(int k, int l) const { return einner_[k * dim_ + l]; }

  /// B-valued inner product, conjugate-linear in the first argument.
  AlgebraElement inner_product(const EdgeVector& xi, const EdgeVector& eta) const;
  /// The defining formula δ^{-2} Σ conj(c_pq) d_p'q' f_q* A(f_p* f_p') f_q'
  /// evaluated over spanning-coefficient vectors (used for cross-checks).
  AlgebraElement generator_formula_inner(const Vec& c, const Vec& d) const;
  /// Coefficients of a basis vector over the spanning family f_p ε f_q.
  Vec generator_combo(int k) const { return gen_combo_.col(k); }

  EdgeVector to_edge_coords(const TensorElement& t) const;  // throws NotInSpan
  EdgeVector left_act(const AlgebraElement& x, const EdgeVector& xi) const;
  EdgeVector right_act(const EdgeVector& xi, const AlgebraElement& y) const;
  Mat left_action_matrix(const AlgebraElement& x) const;
  Mat right_action_matrix(const AlgebraElement& y) const;
  /// θ_{ξ,η} as a matrix on the E basis.
  Mat theta_matrix(const EdgeVector& xi, const EdgeVector& eta) const;
  /// Max residual of φ(f_ij) = Σ_k θ_{f_ik ε, f_jk ε} over all adapted units.
  double phi_compacts_residual() const;

  /// Block support of ⟨E|E⟩.
  Ideal inner_product_ideal() const;
  /// φ^{-1}(K(E)) ∩ (ker φ)^⊥ = complement of the quantum sources.
  Ideal katsura_ideal() const;
  /// Columns span {x ∈ B : x·ξ = 0 for all ξ}.
  Mat left_action_kernel() const;

  MinimalityResult is_minimal() const;  // throws NotFull
  bool is_hereditary(const Ideal& ideal) const;
  bool is_saturated(const Ideal& ideal) const;
  std::vector<Ideal> scan_saturated_hereditary() const;

  // Tensor powers (lazy; throws BudgetExceeded past the caps).
  const TensorLevel& tensor_power(int n) const;
  int tensor_dim(int n) const { return tensor_power(n).dim; }

  TensorPowerVector algebra_vector(const AlgebraElement& x) const;  // level 0
  AlgebraElement algebra_element(const TensorPowerVector& v) const;
  TensorPowerVector edge_vector(const EdgeVector& xi) const;  // level 1
  TensorPowerVector left_act(const AlgebraElement& x, const TensorPowerVector& v) const;
  TensorPowerVector right_act(const TensorPowerVector& v, const AlgebraElement& y) const;
  /// h ⊗ t for h at level k, t at level s.
  TensorPowerVector prepend(const TensorPowerVector& h, const TensorPowerVector& t) const;
  /// Contraction of the first k legs: ⟨l | r_1..k⟩ · r_k+1..m.
  TensorPowerVector partial_inner(const TensorPowerVector& l, const TensorPowerVector& r) const;
  AlgebraElement full_inner(const TensorPowerVector& l, const TensorPowerVector& r) const;
  double norm(const TensorPowerVector& v) const { return v.coeffs.norm(); }

  NonReturningResult is_non_returning(const TensorPowerVector& xi) const;

  TensorPowerVector family_vector(const StructuredFamily& fam, int m) const;
  /// Normalized Φ_m(x) = ⟨ξ|x·ξ⟩ / ‖⟨ξ|ξ⟩‖ as a matrix on B; throws ZeroVector.
  Mat family_phi(const StructuredFamily& fam, int m) const;
  ConditionSCertificate condition_s_certificate(int m_max) const;

  PeriodicProbe periodic_at(int n, std::uint64_t seed) const;
  AperiodicityReport aperiodicity_report(int n_max, std::uint64_t seed) const;
  /// A vector ξ0 with ⟨ξ0|ξ0⟩ invertible, if one is found (ε first, then
  /// seeded random samples). Existence makes n ↦ dim E^⊗n non-decreasing.
  std::optional<EdgeVector> invertible_inner_vector(std::uint64_t seed) const;

 private:
  EdgeCorrespondence() = default;

  Vec ambient_flat(const TensorElement& t) const;  // √w_p √w_q weighted
  void build_level(int n) const;
  Vec span_coords(const TensorPowerVector& v) const;
  TensorPowerVector contract_leg(int i, const TensorPowerVector& v) const;
  bool invertible_in_b(const AlgebraElement& x) const;
  std::vector<Vec> central_tensor_space(int n) const;

  QuantumGraph graph_;
  CorrespondenceParams params_;
  int dim_ = 0;
  bool faithful_ = false, full_ = false;
  std::set<int> sources_, sinks_;
  Ideal range_ideal_;
  double delta_sq_ = 0;

  std::vector<TensorElement> basis_;
  Mat basis_flat_;  // ambient weighted coords, columns orthonormal
  Mat gen_combo_;   // spanning (p,q) × dim
  EdgeVector eps_coords_;
  std::vector<AlgebraElement> einner_;  // dim×dim, row-major
  std::vector<AlgebraElement> pair_inner_;  // A(f_p* f_p'), dimB² row-major

  mutable std::vector<TensorLevel> levels_;
};

}  // namespace qgraph
