#pragma once

#include <set>
#include <vector>

#include "qgraph/qspace.hpp"

namespace qgraph {

/// A linear map A on B, as a dim×dim matrix over the standard matrix units.
struct QuantumAdjacency {
  Mat matrix;

  AlgebraElement apply(const AlgebraElement& x) const { return matrix * x; }
};

/// An ideal of B, identified with a subset of block indices (0-based).
struct Ideal {
  std::set<int> blocks;

  bool contains(int a) const { return blocks.count(a) != 0; }
  bool operator==(const Ideal&) const = default;
};

struct QuantumGraph {
  QuantumSpace space;
  QuantumAdjacency adj;

  int dim() const { return space.dim(); }
  AlgebraElement apply(const AlgebraElement& x) const { return adj.matrix * x; }
};

struct SchurCheck {
  bool pass = false;
  double residual = 0;
};

struct CpCheck {
  bool cp = false;
  double min_eigenvalue = 0;
  double hermiticity_residual = 0;
};

struct GraphValidation {
  double delta_sq = 0;
  SchurCheck schur;
  CpCheck cp;
  bool degenerate_zero = false;  // A == 0 is accepted but flagged
};

/// m(A⊗A)m* = δ²A evaluated on every matrix unit of B.
SchurCheck check_schur_idempotent(const QuantumGraph& g);

/// Choi matrix Σ_p e_p ⊗ A(e_p), embedded block-diagonally in M_N ⊗ M_N.
Mat choi_matrix(const QuantumGraph& g);
CpCheck check_cp(const QuantumGraph& g);

/// Kraus rank d(A) of a CP map on a single full matrix algebra: the rank of
/// its Choi matrix. Throws MultiBlock / NotCP.
int kraus_rank(const QuantumGraph& g);

/// ε_G = δ^{-2} (id ⊗ A) m*(1).
TensorElement epsilon_vector(const QuantumGraph& g);

/// Blocks a with A(x·1_a) = 0 for all x (central summands inside ker A).
std::set<int> quantum_sources(const QuantumGraph& g);
/// Blocks a with 1_a·A(x) = 0 for all x (orthogonal to the range of A).
std::set<int> quantum_sinks(const QuantumGraph& g);

/// B·A(B)·B as a set of blocks: the complement of the quantum sinks.
Ideal range_ideal(const QuantumGraph& g);

/// Runs the δ-form, Schur-idempotence and complete-positivity checks.
/// Throws ValidationError when a check fails.
GraphValidation validate_graph(const QuantumGraph& g);

// Constructors for the built-in families. Each output passes validate_graph.
QuantumGraph complete_graph(const QuantumSpace& space);
QuantumGraph trivial_graph(const QuantumSpace& space);
/// A(x) = T x T* for block-diagonal T with Tr(ρ_a^{-1} T_a* T_a) = δ² on
/// every block. Throws TraceConstraintViolated.
QuantumGraph rank_one_graph(const QuantumSpace& space, const std::vector<Mat>& t_blocks);
/// Classical graph on C^d with the uniform state; entries must be 0/1.
QuantumGraph classical_graph(const Eigen::MatrixXd& zero_one);
/// B = M_n ⊕ M_n ⊕ M_n tracial, A(x1⊕x2⊕x3) = (x1+x2+x3) ⊕ (x1+x2) ⊕ 0.
QuantumGraph main_example(int n);

}  // namespace qgraph
