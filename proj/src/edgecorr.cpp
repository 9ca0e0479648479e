#include "qgraph/edgecorr.hpp"

#include <algorithm>
#include <cmath>

namespace qgraph {

namespace {

/// splitmix64: tiny, portable, deterministic across platforms.
struct SplitMix64 {
  std::uint64_t s;
  explicit SplitMix64(std::uint64_t seed) : s(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) / 9007199254740992.0; }
  Complex cgauss_like() { return Complex(2 * uniform() - 1, 2 * uniform() - 1); }
};

Vec random_vec(SplitMix64& rng, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.cgauss_like();
  return v;
}

}  // namespace

std::string StructuredFamily::describe() const {
  if (kind == Kind::Pair)
    return "pair(" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ")";
  return "sink(" + std::to_string(c + 1) + ")";
}

Vec EdgeCorrespondence::ambient_flat(const TensorElement& t) const {
  const QuantumSpace& sp = space();
  int d = sp.dim();
  Vec v(d * d);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q)
      v[p * d + q] = t(p, q) * std::sqrt(sp.weight(p) * sp.weight(q));
  return v;
}

EdgeCorrespondence EdgeCorrespondence::build(const QuantumGraph& g, CorrespondenceParams params) {
  EdgeCorrespondence ec;
  ec.graph_ = g;
  ec.params_ = params;
  ec.delta_sq_ = g.space.delta_sq();
  ec.sources_ = quantum_sources(g);
  ec.sinks_ = quantum_sinks(g);
  ec.range_ideal_ = range_ideal(g);
  ec.faithful_ = ec.sources_.empty();
  ec.full_ = static_cast<int>(ec.range_ideal_.blocks.size()) == g.space.num_blocks();

  const QuantumSpace& sp = g.space;
  int d = sp.dim();
  TensorElement eps = epsilon_vector(g);
  if (within_tol(max_abs(eps))) fail(Errc::ZeroCorrespondence, "epsilon vector vanishes");

  // Spanning family f_p ε f_q in ambient weighted coordinates.
  auto fs = sp.adapted_units();
  Mat span(d * d, d * d);
  for (int p = 0; p < d; ++p) {
    TensorElement left = sp.tensor_left(fs[p], eps);
    for (int q = 0; q < d; ++q) span.col(p * d + q) = ec.ambient_flat(sp.tensor_right(left, fs[q]));
  }

  Eigen::JacobiSVD<Mat> svd(span, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tolerance() * sv(0)) ++rank;
  ec.dim_ = rank;
  ec.basis_flat_ = svd.matrixU().leftCols(rank);
  ec.gen_combo_ = Mat(d * d, rank);
  for (int k = 0; k < rank; ++k) ec.gen_combo_.col(k) = svd.matrixV().col(k) / sv(k);

  ec.basis_.resize(rank);
  for (int k = 0; k < rank; ++k) {
    TensorElement t(d, d);
    for (int p = 0; p < d; ++p)
      for (int q = 0; q < d; ++q)
        t(p, q) = ec.basis_flat_(p * d + q, k) / std::sqrt(sp.weight(p) * sp.weight(q));
    ec.basis_[k] = t;
  }

  ec.eps_coords_ = ec.to_edge_coords(eps);

  ec.einner_.resize(rank * rank);
  for (int k = 0; k < rank; ++k)
    for (int l = 0; l < rank; ++l) ec.einner_[k * rank + l] = sp.bvalued_inner2(ec.basis_[k], ec.basis_[l]);

  ec.pair_inner_.resize(d * d);
  for (int p = 0; p < d; ++p)
    for (int p2 = 0; p2 < d; ++p2)
      ec.pair_inner_[p * d + p2] = g.apply(sp.multiply(sp.star(fs[p]), fs[p2]));

  // Level 0 (B in GNS-orthonormal coordinates) and level 1 (E itself).
  ec.levels_.resize(2);
  TensorLevel& l0 = ec.levels_[0];
  l0.dim = d;
  l0.combo = Mat::Identity(d, d);
  l0.span_gram = Mat::Identity(d, d);
  l0.to_basis = Mat::Identity(d, d);
  l0.left_unit.resize(d);
  l0.right_unit.resize(d);
  Eigen::VectorXd sq(d);
  for (int p = 0; p < d; ++p) sq[p] = std::sqrt(sp.weight(p));
  for (int p = 0; p < d; ++p) {
    AlgebraElement e = AlgebraElement::Zero(d);
    e[p] = 1.0;
    Mat le = sp.left_mult_matrix(e), re = sp.right_mult_matrix(e);
    Mat lg(d, d), rg(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        lg(r, c) = le(r, c) * sq[r] / sq[c];
        rg(r, c) = re(r, c) * sq[r] / sq[c];
      }
    l0.left_unit[p] = lg;
    l0.right_unit[p] = rg;
  }

  TensorLevel& l1 = ec.levels_[1];
  l1.dim = rank;
  l1.combo = Mat::Identity(rank, rank);
  l1.span_gram = Mat::Identity(rank, rank);
  l1.to_basis = Mat::Identity(rank, rank);
  l1.left_unit.resize(d);
  l1.right_unit.resize(d);
  for (int p = 0; p < d; ++p) {
    AlgebraElement e = AlgebraElement::Zero(d);
    e[p] = 1.0;
    Mat lu(rank, rank), ru(rank, rank);
    for (int k = 0; k < rank; ++k) {
      Vec lv = ec.ambient_flat(sp.tensor_left(e, ec.basis_[k]));
      Vec rv = ec.ambient_flat(sp.tensor_right(ec.basis_[k], e));
      lu.col(k) = ec.basis_flat_.adjoint() * lv;
      ru.col(k) = ec.basis_flat_.adjoint() * rv;
      double lres = (lv - ec.basis_flat_ * lu.col(k)).norm();
      double rres = (rv - ec.basis_flat_ * ru.col(k)).norm();
      if (!within_tol(lres, lv.norm()) || !within_tol(rres, rv.norm()))
        fail(Errc::NotInSpan, "module action leaves the correspondence span");
    }
    l1.left_unit[p] = lu;
    l1.right_unit[p] = ru;
  }

  return ec;
}

EdgeVector EdgeCorrespondence::to_edge_coords(const TensorElement& t) const {
  Vec v = ambient_flat(t);
  EdgeVector c = basis_flat_.adjoint() * v;
  double res = (v - basis_flat_ * c).norm();
  if (!within_tol(res, v.norm())) fail(Errc::NotInSpan, "vector is not in the correspondence");
  return c;
}

AlgebraElement EdgeCorrespondence::inner_product(const EdgeVector& xi, const EdgeVector& eta) const {
  AlgebraElement acc = AlgebraElement::Zero(space().dim());
  for (int k = 0; k < dim_; ++k) {
    if (xi[k] == 0.0) continue;
    for (int l = 0; l < dim_; ++l) acc += std::conj(xi[k]) * eta[l] * einner_[k * dim_ + l];
  }
  return acc;
}

AlgebraElement EdgeCorrespondence::generator_formula_inner(const Vec& c, const Vec& d) const {
  const QuantumSpace& sp = space();
  int n = sp.dim();
  auto fs = sp.adapted_units();
  AlgebraElement acc = AlgebraElement::Zero(n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      Complex cc = std::conj(c[p * n + q]);
      if (std::abs(cc) < 1e-300) continue;
      for (int p2 = 0; p2 < n; ++p2)
        for (int q2 = 0; q2 < n; ++q2) {
          Complex dd = d[p2 * n + q2];
          if (std::abs(dd) < 1e-300) continue;
          acc += (cc * dd) * sp.multiply(sp.multiply(sp.star(fs[q]), pair_inner_[p * n + p2]), fs[q2]);
        }
    }
  return acc / delta_sq_;
}

EdgeVector EdgeCorrespondence::left_act(const AlgebraElement& x, const EdgeVector& xi) const {
  return left_action_matrix(x) * xi;
}

EdgeVector EdgeCorrespondence::right_act(const EdgeVector& xi, const AlgebraElement& y) const {
  return right_action_matrix(y) * xi;
}

Mat EdgeCorrespondence::left_action_matrix(const AlgebraElement& x) const {
  Mat m = Mat::Zero(dim_, dim_);
  for (int p = 0; p < space().dim(); ++p)
    if (x[p] != 0.0) m += x[p] * levels_[1].left_unit[p];
  return m;
}

Mat EdgeCorrespondence::right_action_matrix(const AlgebraElement& y) const {
  Mat m = Mat::Zero(dim_, dim_);
  for (int p = 0; p < space().dim(); ++p)
    if (y[p] != 0.0) m += y[p] * levels_[1].right_unit[p];
  return m;
}

Mat EdgeCorrespondence::theta_matrix(const EdgeVector& xi, const EdgeVector& eta) const {
  Mat m(dim_, dim_);
  for (int l = 0; l < dim_; ++l) {
    AlgebraElement b = AlgebraElement::Zero(space().dim());
    for (int k = 0; k < dim_; ++k) b += std::conj(eta[k]) * einner_[k * dim_ + l];
    m.col(l) = right_act(xi, b);
  }
  return m;
}

double EdgeCorrespondence::phi_compacts_residual() const {
  const QuantumSpace& sp = space();
  double resid = 0;
  for (int a = 0; a < sp.num_blocks(); ++a) {
    int n = sp.block_size(a);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Mat lhs = left_action_matrix(sp.adapted_unit(a, i, j));
        Mat rhs = Mat::Zero(dim_, dim_);
        for (int k = 0; k < n; ++k) {
          EdgeVector xik = left_act(sp.adapted_unit(a, i, k), eps_coords_);
          EdgeVector etak = left_act(sp.adapted_unit(a, j, k), eps_coords_);
          rhs += theta_matrix(xik, etak);
        }
        resid = std::max(resid, max_abs(Mat(lhs - rhs)));
      }
  }
  return resid;
}

Ideal EdgeCorrespondence::inner_product_ideal() const {
  const QuantumSpace& sp = space();
  double scale = 0;
  for (const auto& x : einner_) scale = std::max(scale, max_abs(x));
  Ideal out;
  for (const auto& x : einner_)
    for (int p = 0; p < sp.dim(); ++p)
      if (std::abs(x[p]) > tolerance() * std::max(1.0, scale)) out.blocks.insert(sp.unit_block(p));
  return out;
}

Ideal EdgeCorrespondence::katsura_ideal() const {
  Ideal out;
  for (int a = 0; a < space().num_blocks(); ++a)
    if (!sources_.count(a)) out.blocks.insert(a);
  return out;
}

Mat EdgeCorrespondence::left_action_kernel() const {
  const QuantumSpace& sp = space();
  int d = sp.dim();
  Mat m(dim_ * dim_, d);
  for (int p = 0; p < d; ++p) {
    const Mat& lu = levels_[1].left_unit[p];
    for (int k = 0; k < dim_; ++k) m.block(k * dim_, p, dim_, 1) = lu.col(k);
  }
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cut = sv.size() ? tolerance() * std::max(1.0, sv(0)) : 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++rank;
  return svd.matrixV().rightCols(d - rank);
}

MinimalityResult EdgeCorrespondence::is_minimal() const {
  if (!full_) fail(Errc::NotFull, "minimality criterion requires a full correspondence");
  const QuantumSpace& sp = space();
  int nb = sp.num_blocks();
  if (nb == 1) return {true, std::nullopt};
  const Mat& A = graph_.adj.matrix;
  double scale = max_abs(A);
  for (int mask = 1; mask < (1 << nb) - 1; ++mask) {
    bool invariant = true;
    for (int p = 0; p < sp.dim() && invariant; ++p) {
      if (!(mask >> sp.unit_block(p) & 1)) continue;
      Vec v = A.col(p);
      for (int q = 0; q < sp.dim(); ++q)
        if (!(mask >> sp.unit_block(q) & 1) && std::abs(v[q]) > tolerance() * std::max(1.0, scale)) {
          invariant = false;
          break;
        }
    }
    if (invariant) {
      Ideal j;
      for (int a = 0; a < nb; ++a)
        if (mask >> a & 1) j.blocks.insert(a);
      return {false, j};
    }
  }
  return {true, std::nullopt};
}

namespace {

int mat_rank(const Mat& m) {
  if (m.cols() == 0 || m.rows() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0) return 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tolerance() * sv(0)) ++rank;
  return rank;
}

}  // namespace

bool EdgeCorrespondence::is_hereditary(const Ideal& ideal) const {
  const QuantumSpace& sp = space();
  std::vector<int> units;
  for (int p = 0; p < sp.dim(); ++p)
    if (ideal.contains(sp.unit_block(p))) units.push_back(p);
  if (units.empty()) return true;

  Mat xi(sp.dim() * sp.dim(), dim_ * units.size());
  Mat ix(sp.dim() * sp.dim(), dim_ * units.size());
  int col = 0;
  for (int k = 0; k < dim_; ++k)
    for (int p : units) {
      AlgebraElement e = AlgebraElement::Zero(sp.dim());
      e[p] = 1.0;
      xi.col(col) = ambient_flat(sp.tensor_right(basis_[k], e));
      ix.col(col) = ambient_flat(sp.tensor_left(e, basis_[k]));
      ++col;
    }
  int rxi = mat_rank(xi);
  Mat joint(xi.rows(), xi.cols() + ix.cols());
  joint << xi, ix;
  return mat_rank(joint) == rxi;
}

bool EdgeCorrespondence::is_saturated(const Ideal& ideal) const {
  const QuantumSpace& sp = space();
  Ideal jx = katsura_ideal();
  std::vector<int> cand;
  for (int p = 0; p < sp.dim(); ++p)
    if (jx.contains(sp.unit_block(p))) cand.push_back(p);
  if (cand.empty()) return true;

  // Orthonormal basis of XI in ambient coordinates.
  std::vector<int> units;
  for (int p = 0; p < sp.dim(); ++p)
    if (ideal.contains(sp.unit_block(p))) units.push_back(p);
  Mat q;
  if (!units.empty()) {
    Mat xi(sp.dim() * sp.dim(), dim_ * units.size());
    int col = 0;
    for (int k = 0; k < dim_; ++k)
      for (int p : units) {
        AlgebraElement e = AlgebraElement::Zero(sp.dim());
        e[p] = 1.0;
        xi.col(col++) = ambient_flat(sp.tensor_right(basis_[k], e));
      }
    Eigen::JacobiSVD<Mat> svd(xi, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > tolerance() * sv(0)) ++rank;
    q = svd.matrixU().leftCols(rank);
  }

  // Solve {b in J_X : b·ξ_k ∈ XI for all k} and test containment in I.
  Mat m(sp.dim() * sp.dim() * dim_, cand.size());
  for (std::size_t ci = 0; ci < cand.size(); ++ci) {
    AlgebraElement e = AlgebraElement::Zero(sp.dim());
    e[cand[ci]] = 1.0;
    for (int k = 0; k < dim_; ++k) {
      Vec v = ambient_flat(sp.tensor_left(e, basis_[k]));
      if (q.cols() > 0) v -= q * (q.adjoint() * v).eval();
      m.block(k * sp.dim() * sp.dim(), ci, sp.dim() * sp.dim(), 1) = v;
    }
  }
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cut = sv.size() ? tolerance() * std::max(1.0, sv(0)) : 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++rank;
  int nullity = static_cast<int>(cand.size()) - rank;
  for (int j = 0; j < nullity; ++j) {
    Vec b = svd.matrixV().col(cand.size() - 1 - j);
    for (std::size_t ci = 0; ci < cand.size(); ++ci)
      if (!ideal.contains(sp.unit_block(cand[ci])) && std::abs(b[ci]) > tolerance())
        return false;
  }
  return true;
}

std::vector<Ideal> EdgeCorrespondence::scan_saturated_hereditary() const {
  int nb = space().num_blocks();
  std::vector<Ideal> out;
  for (int mask = 1; mask < (1 << nb) - 1; ++mask) {
    Ideal ideal;
    for (int a = 0; a < nb; ++a)
      if (mask >> a & 1) ideal.blocks.insert(a);
    if (is_hereditary(ideal) && is_saturated(ideal)) out.push_back(ideal);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tensor powers
// ---------------------------------------------------------------------------

const TensorLevel& EdgeCorrespondence::tensor_power(int n) const {
  if (n < 0) fail(Errc::ValidationError, "negative tensor power");
  if (n >= static_cast<int>(levels_.size()) || levels_[n].dim == 0) build_level(n);
  return levels_[n];
}

void EdgeCorrespondence::build_level(int n) const {
  if (n > params_.level_cap)
    fail(Errc::BudgetExceeded, "tensor power level " + std::to_string(n) + " exceeds the cap of " +
                                   std::to_string(params_.level_cap));
  const QuantumSpace& sp = space();
  int d = sp.dim();
  for (int l = static_cast<int>(levels_.size()); l <= n; ++l) {
    TensorLevel& prev = levels_[l - 1];
    int rp = prev.dim;
    long span_n = static_cast<long>(dim_) * rp;
    if (span_n > params_.span_cap)
      fail(Errc::BudgetExceeded, "tensor level " + std::to_string(l) + " needs " +
                                     std::to_string(span_n) + " spanning labels, cap is " +
                                     std::to_string(params_.span_cap));

    // ⟨e_i | x e_j⟩ as matrices on level l-1; these are the Gram blocks.
    if (prev.cl.empty()) {
      prev.cl.resize(static_cast<std::size_t>(dim_) * dim_);
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) {
          Mat m = Mat::Zero(rp, rp);
          const AlgebraElement& c = einner_[i * dim_ + j];
          for (int p = 0; p < d; ++p)
            if (c[p] != 0.0) m += c[p] * prev.left_unit[p];
          prev.cl[static_cast<std::size_t>(i) * dim_ + j] = std::move(m);
        }
    }

    TensorLevel lvl;
    Mat gram(span_n, span_n);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        gram.block(static_cast<long>(i) * rp, static_cast<long>(j) * rp, rp, rp) =
            prev.cl[static_cast<std::size_t>(i) * dim_ + j];
    gram = 0.5 * (gram + Mat(gram.adjoint()));

    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    const auto& ev = es.eigenvalues();
    double top = std::max(0.0, ev(ev.size() - 1));
    int rank = 0;
    for (int i = 0; i < ev.size(); ++i)
      if (ev(i) > tolerance() * std::max(1.0, top)) ++rank;
    lvl.dim = rank;
    lvl.combo = Mat(span_n, rank);
    for (int k = 0; k < rank; ++k) {
      int idx = static_cast<int>(ev.size()) - rank + k;
      lvl.combo.col(k) = es.eigenvectors().col(idx) / std::sqrt(ev(idx));
    }
    lvl.span_gram = gram;
    lvl.to_basis = lvl.combo.adjoint() * gram;

    lvl.left_unit.resize(d);
    lvl.right_unit.resize(d);
    for (int p = 0; p < d; ++p) {
      // Left action hits the first leg, right action the last.
      Mat lspan = Mat::Zero(span_n, rank);
      const Mat& l1 = levels_[1].left_unit[p];
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) {
          if (l1(i, j) == 0.0) continue;
          lspan.middleRows(static_cast<long>(i) * rp, rp) +=
              l1(i, j) * lvl.combo.middleRows(static_cast<long>(j) * rp, rp);
        }
      lvl.left_unit[p] = lvl.to_basis * lspan;

      Mat rspan(span_n, rank);
      const Mat& rprev = prev.right_unit[p];
      for (int i = 0; i < dim_; ++i)
        rspan.middleRows(static_cast<long>(i) * rp, rp) =
            rprev * lvl.combo.middleRows(static_cast<long>(i) * rp, rp);
      lvl.right_unit[p] = lvl.to_basis * rspan;
    }

    levels_.push_back(std::move(lvl));
  }
}

Vec EdgeCorrespondence::span_coords(const TensorPowerVector& v) const {
  return levels_[v.level].combo * v.coeffs;
}

TensorPowerVector EdgeCorrespondence::algebra_vector(const AlgebraElement& x) const {
  const QuantumSpace& sp = space();
  Vec c(sp.dim());
  for (int p = 0; p < sp.dim(); ++p) c[p] = x[p] * std::sqrt(sp.weight(p));
  return {0, c};
}

AlgebraElement EdgeCorrespondence::algebra_element(const TensorPowerVector& v) const {
  const QuantumSpace& sp = space();
  AlgebraElement x(sp.dim());
  for (int p = 0; p < sp.dim(); ++p) x[p] = v.coeffs[p] / std::sqrt(sp.weight(p));
  return x;
}

TensorPowerVector EdgeCorrespondence::edge_vector(const EdgeVector& xi) const { return {1, xi}; }

TensorPowerVector EdgeCorrespondence::left_act(const AlgebraElement& x,
                                               const TensorPowerVector& v) const {
  const TensorLevel& lvl = tensor_power(v.level);
  Vec out = Vec::Zero(lvl.dim);
  for (int p = 0; p < space().dim(); ++p)
    if (x[p] != 0.0) out += x[p] * (lvl.left_unit[p] * v.coeffs);
  return {v.level, out};
}

TensorPowerVector EdgeCorrespondence::right_act(const TensorPowerVector& v,
                                                const AlgebraElement& y) const {
  const TensorLevel& lvl = tensor_power(v.level);
  Vec out = Vec::Zero(lvl.dim);
  for (int p = 0; p < space().dim(); ++p)
    if (y[p] != 0.0) out += y[p] * (lvl.right_unit[p] * v.coeffs);
  return {v.level, out};
}

TensorPowerVector EdgeCorrespondence::prepend(const TensorPowerVector& h,
                                              const TensorPowerVector& t) const {
  if (h.level == 0) return left_act(algebra_element(h), t);
  if (t.level == 0) return right_act(h, algebra_element(t));
  const TensorLevel& target = tensor_power(h.level + t.level);
  if (h.level == 1) {
    int rt = tensor_power(t.level).dim;
    Vec span = Vec::Zero(static_cast<long>(dim_) * rt);
    for (int i = 0; i < dim_; ++i)
      if (h.coeffs[i] != 0.0) span.segment(static_cast<long>(i) * rt, rt) = h.coeffs[i] * t.coeffs;
    return {h.level + t.level, target.to_basis * span};
  }
  Vec hspan = span_coords(h);
  int rp = tensor_power(h.level - 1).dim;
  int rout = tensor_power(h.level - 1 + t.level).dim;
  Vec span = Vec::Zero(static_cast<long>(dim_) * rout);
  for (int i = 0; i < dim_; ++i) {
    Vec chunk = hspan.segment(static_cast<long>(i) * rp, rp);
    if (chunk.norm() == 0.0) continue;
    TensorPowerVector u = prepend({h.level - 1, chunk}, t);
    span.segment(static_cast<long>(i) * rout, rout) = u.coeffs;
  }
  return {h.level + t.level, target.to_basis * span};
}

TensorPowerVector EdgeCorrespondence::contract_leg(int i, const TensorPowerVector& v) const {
  if (v.level < 1) fail(Errc::ValidationError, "cannot contract a level-0 vector");
  if (v.level == 1) {
    AlgebraElement acc = AlgebraElement::Zero(space().dim());
    for (int j = 0; j < dim_; ++j)
      if (v.coeffs[j] != 0.0) acc += v.coeffs[j] * einner_[i * dim_ + j];
    return algebra_vector(acc);
  }
  const TensorLevel& prev = levels_[v.level - 1];
  if (prev.cl.empty()) fail(Errc::ValidationError, "contraction data missing for level");
  int rp = prev.dim;
  Vec span = span_coords(v);
  Vec out = Vec::Zero(rp);
  for (int j = 0; j < dim_; ++j) {
    Vec chunk = span.segment(static_cast<long>(j) * rp, rp);
    if (chunk.norm() == 0.0) continue;
    out += prev.cl[static_cast<std::size_t>(i) * dim_ + j] * chunk;
  }
  return {v.level - 1, out};
}

TensorPowerVector EdgeCorrespondence::partial_inner(const TensorPowerVector& l,
                                                    const TensorPowerVector& r) const {
  if (l.level > r.level) fail(Errc::ValidationError, "partial_inner needs l.level <= r.level");
  if (l.level == 0) return left_act(space().star(algebra_element(l)), r);
  if (l.level == 1) {
    TensorPowerVector acc{r.level - 1, Vec::Zero(tensor_power(r.level - 1).dim)};
    for (int i = 0; i < dim_; ++i) {
      if (l.coeffs[i] == 0.0) continue;
      TensorPowerVector c = contract_leg(i, r);
      acc.coeffs += std::conj(l.coeffs[i]) * c.coeffs;
    }
    return acc;
  }
  int rp = tensor_power(l.level - 1).dim;
  Vec lspan = span_coords(l);
  TensorPowerVector acc{r.level - l.level, Vec::Zero(tensor_power(r.level - l.level).dim)};
  for (int i = 0; i < dim_; ++i) {
    Vec chunk = lspan.segment(static_cast<long>(i) * rp, rp);
    if (chunk.norm() == 0.0) continue;
    TensorPowerVector c = contract_leg(i, r);
    TensorPowerVector part = partial_inner({l.level - 1, chunk}, c);
    acc.coeffs += part.coeffs;
  }
  return acc;
}

AlgebraElement EdgeCorrespondence::full_inner(const TensorPowerVector& l,
                                              const TensorPowerVector& r) const {
  if (l.level != r.level) fail(Errc::ValidationError, "full_inner needs equal levels");
  return algebra_element(partial_inner(l, r));
}

// ---------------------------------------------------------------------------
// Non-returning vectors and Condition (S)
// ---------------------------------------------------------------------------

NonReturningResult EdgeCorrespondence::is_non_returning(const TensorPowerVector& xi) const {
  NonReturningResult res;
  res.sufficient_only = !faithful_;
  if (xi.level < 2) {
    res.non_returning = true;
    res.vacuous = true;
    return res;
  }
  int m = xi.level;
  double scale = xi.coeffs.squaredNorm();

  for (int n = 1; n < m; ++n) {
    // Split ξ = Σ e_chain ⊗ tail over the first n legs.
    std::vector<std::pair<std::vector<int>, Vec>> parts{{{}, xi.coeffs}};
    for (int depth = 0; depth < n; ++depth) {
      int level = m - depth;
      int rp = tensor_power(level - 1).dim;
      std::vector<std::pair<std::vector<int>, Vec>> next;
      for (auto& [chain, v] : parts) {
        Vec span = levels_[level].combo * v;
        for (int i = 0; i < dim_; ++i) {
          Vec chunk = span.segment(static_cast<long>(i) * rp, rp);
          if (chunk.norm() <= 1e-14 * std::max(1.0, scale)) continue;
          std::vector<int> c = chain;
          c.push_back(i);
          next.emplace_back(std::move(c), std::move(chunk));
        }
      }
      parts = std::move(next);
    }

    // Tails are often all parallel (structured families); then the sum over
    // chains collapses into a single partial inner product.
    int tau = -1;
    double best = 0;
    for (std::size_t s = 0; s < parts.size(); ++s)
      if (parts[s].second.norm() > best) {
        best = parts[s].second.norm();
        tau = static_cast<int>(s);
      }
    bool parallel = tau >= 0;
    std::vector<Complex> lambda(parts.size(), 0.0);
    if (parallel) {
      const Vec& t0 = parts[tau].second;
      double t0n2 = t0.squaredNorm();
      for (std::size_t s = 0; s < parts.size(); ++s) {
        lambda[s] = t0.dot(parts[s].second) / t0n2;  // Eigen dot conjugates the left arg
        if ((parts[s].second - lambda[s] * t0).norm() > 1e-12 * std::max(1.0, best)) {
          parallel = false;
          break;
        }
      }
    }

    const TensorLevel& ln = tensor_power(n);
    for (int e = 0; e < ln.dim; ++e) {
      TensorPowerVector eta{n, Vec::Zero(ln.dim)};
      eta.coeffs[e] = 1.0;

      TensorPowerVector zeta{n, Vec::Zero(ln.dim)};
      if (parallel) {
        AlgebraElement beff = AlgebraElement::Zero(space().dim());
        for (std::size_t s = 0; s < parts.size(); ++s) {
          TensorPowerVector w = eta;
          for (int idx : parts[s].first) w = contract_leg(idx, w);
          beff += std::conj(lambda[s]) * algebra_element(w);
        }
        zeta = partial_inner({m - n, parts[tau].second}, left_act(beff, xi));
      } else {
        for (auto& [chain, tail] : parts) {
          TensorPowerVector w = eta;
          for (int idx : chain) w = contract_leg(idx, w);
          AlgebraElement b = algebra_element(w);
          TensorPowerVector part = partial_inner({m - n, tail}, left_act(b, xi));
          zeta.coeffs += part.coeffs;
        }
      }
      if (!within_tol(zeta.coeffs.norm(), scale)) {
        res.non_returning = false;
        res.witness_n = n;
        res.witness_eta = e;
        return res;
      }
    }
  }
  res.non_returning = true;
  return res;
}

TensorPowerVector EdgeCorrespondence::family_vector(const StructuredFamily& fam, int m) const {
  if (m < 1) fail(Errc::ValidationError, "family length must be >= 1");
  const QuantumSpace& sp = space();
  EdgeVector head, rep;
  if (fam.kind == StructuredFamily::Kind::Pair) {
    if (fam.a == fam.b || fam.a < 0 || fam.b < 0 || fam.a >= sp.num_blocks() || fam.b >= sp.num_blocks())
      fail(Errc::ValidationError, "pair family needs distinct valid blocks");
    AlgebraElement pa = sp.block_identity(fam.a), pb = sp.block_identity(fam.b);
    head = right_act(left_act(pa, eps_coords_), pb);
    rep = right_act(eps_coords_, pb);
  } else {
    if (!sinks_.count(fam.c)) fail(Errc::ValidationError, "sink family needs a quantum sink block");
    head = left_act(sp.block_identity(fam.c), eps_coords_);
    rep = eps_coords_;
  }
  TensorPowerVector acc;
  if (m == 1) return edge_vector(head);
  acc = edge_vector(rep);
  for (int i = 0; i < m - 2; ++i) acc = prepend(edge_vector(rep), acc);
  return prepend(edge_vector(head), acc);
}

Mat EdgeCorrespondence::family_phi(const StructuredFamily& fam, int m) const {
  const QuantumSpace& sp = space();
  int start = fam.corner();
  AlgebraElement cut;
  bool do_cut = fam.kind == StructuredFamily::Kind::Pair;
  if (do_cut) cut = sp.block_identity(fam.b);

  auto iterate = [&](AlgebraElement y) {
    for (int step = 0; step < m; ++step) {
      y = graph_.apply(y);
      if (do_cut) y = sp.multiply(y, cut);
    }
    return y;
  };

  AlgebraElement denom = iterate(sp.block_identity(start));
  double nrm = sp.op_norm(denom);
  if (within_tol(nrm))
    fail(Errc::ZeroVector, "family " + fam.describe() + " has vanishing inner product");

  Mat phi = Mat::Zero(sp.dim(), sp.dim());
  for (int p = 0; p < sp.dim(); ++p) {
    if (sp.unit_block(p) != start) continue;  // x·1_start kills the other blocks
    AlgebraElement e = AlgebraElement::Zero(sp.dim());
    e[p] = 1.0;
    phi.col(p) = iterate(e) / nrm;
  }
  return phi;
}

ConditionSCertificate EdgeCorrespondence::condition_s_certificate(int m_max) const {
  const QuantumSpace& sp = space();
  ConditionSCertificate cert;
  if (m_max < 3) m_max = 3;

  for (int c = 0; c < sp.num_blocks(); ++c) {
    std::vector<StructuredFamily> candidates;
    for (int b = 0; b < sp.num_blocks(); ++b)
      if (b != c) candidates.push_back(StructuredFamily::pair(c, b));
    if (sinks_.count(c)) candidates.push_back(StructuredFamily::sink(c));

    bool found = false;
    for (const auto& fam : candidates) {
      std::vector<Mat> phis;
      bool ok = true;
      for (int m = 2; m <= m_max && ok; ++m) {
        Mat phi;
        try {
          phi = family_phi(fam, m);
        } catch (const Error& e) {
          if (e.code() == Errc::ZeroVector) {
            ok = false;
            break;
          }
          throw;
        }

        // Φ_m must embed the corner B·1_c as a *-subalgebra.
        int n = sp.block_size(c);
        Mat cols(sp.dim(), n * n);
        int ci = 0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) cols.col(ci++) = phi.col(sp.unit_index(c, i, j));
        if (mat_rank(cols) != n * n) {
          ok = false;
          break;
        }
        for (int i = 0; i < n && ok; ++i)
          for (int j = 0; j < n && ok; ++j) {
            AlgebraElement f = sp.adapted_unit(c, i, j);
            AlgebraElement lhs = phi * sp.star(f);
            AlgebraElement rhs = sp.star(AlgebraElement(phi * f));
            if (!within_tol(max_abs(AlgebraElement(lhs - rhs)), max_abs(rhs))) ok = false;
            for (int k = 0; k < n && ok; ++k)
              for (int l = 0; l < n && ok; ++l) {
                AlgebraElement g = sp.adapted_unit(c, k, l);
                AlgebraElement prod = phi * sp.multiply(f, g);
                AlgebraElement split = sp.multiply(AlgebraElement(phi * f), AlgebraElement(phi * g));
                if (!within_tol(max_abs(AlgebraElement(prod - split)),
                                std::max(max_abs(prod), max_abs(split))))
                  ok = false;
              }
          }
        if (!ok) break;

        // Spot-check non-returning on small lengths; longer lengths are
        // covered structurally by the orthogonal-projection construction.
        if (m <= 3) {
          TensorPowerVector xi = family_vector(fam, m);
          if (within_tol(norm(xi))) {
            ok = false;
            break;
          }
          if (!is_non_returning(xi).non_returning) {
            ok = false;
            break;
          }
        }
        phis.push_back(phi);
      }
      if (!ok || phis.empty()) continue;

      // The sequence m ↦ Φ_m must repeat exactly within the window.
      int period = 0, start = 0;
      for (int p = 1; p <= static_cast<int>(phis.size()) - 1 && !period; ++p)
        for (int s = 0; s + p < static_cast<int>(phis.size()); ++s) {
          bool rep = true;
          for (int t = s; t + p < static_cast<int>(phis.size()) && rep; ++t)
            if (!within_tol(max_abs(Mat(phis[t] - phis[t + p])), max_abs(phis[t]))) rep = false;
          if (rep) {
            period = p;
            start = s + 2;
            break;
          }
        }
      if (!period) continue;

      FamilyRecord rec;
      rec.block = c;
      rec.family = fam;
      rec.period = period;
      rec.period_start = start;
      AlgebraElement img = phis.back() * sp.block_identity(c);
      for (int p = 0; p < sp.dim(); ++p)
        if (std::abs(img[p]) > tolerance() * std::max(1.0, max_abs(img)))
          rec.phi_image_blocks.insert(sp.unit_block(p));
      cert.families.push_back(rec);
      found = true;
      break;
    }
    if (!found) {
      cert.certified = false;
      cert.detail = "no admissible family for block " + std::to_string(c + 1);
      return cert;
    }
  }
  cert.certified = true;
  return cert;
}

// ---------------------------------------------------------------------------
// Periodicity
// ---------------------------------------------------------------------------

bool EdgeCorrespondence::invertible_in_b(const AlgebraElement& x) const {
  const QuantumSpace& sp = space();
  double scale = sp.op_norm(x);
  for (int a = 0; a < sp.num_blocks(); ++a) {
    int n = sp.block_size(a);
    Mat blk(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) blk(i, j) = x[sp.unit_index(a, i, j)];
    Eigen::JacobiSVD<Mat> svd(blk);
    if (svd.singularValues()(n - 1) <= tolerance() * std::max(1.0, scale)) return false;
  }
  return true;
}

std::vector<Vec> EdgeCorrespondence::central_tensor_space(int n) const {
  const TensorLevel& lvl = tensor_power(n);
  const QuantumSpace& sp = space();
  Mat m(static_cast<long>(sp.dim()) * lvl.dim, lvl.dim);
  for (int p = 0; p < sp.dim(); ++p)
    m.middleRows(static_cast<long>(p) * lvl.dim, lvl.dim) = lvl.left_unit[p] - lvl.right_unit[p];
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cut = sv.size() ? tolerance() * std::max(1.0, sv(0)) : 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++rank;
  std::vector<Vec> out;
  for (int j = rank; j < lvl.dim; ++j) out.push_back(svd.matrixV().col(j));
  return out;
}

PeriodicProbe EdgeCorrespondence::periodic_at(int n, std::uint64_t seed) const {
  PeriodicProbe probe;
  if (n < 1) fail(Errc::ValidationError, "periodicity level must be >= 1");
  if (tensor_dim(n) != space().dim()) return probe;

  std::vector<Vec> central = central_tensor_space(n);
  if (central.empty()) return probe;

  auto try_witness = [&](const Vec& coeffs) {
    TensorPowerVector omega{n, coeffs / coeffs.norm()};
    if (!invertible_in_b(full_inner(omega, omega))) return false;
    probe.result = PeriodicProbe::Result::Yes;
    probe.witness = omega;
    return true;
  };

  SplitMix64 rng(seed ^ 0x51a5f00dULL);
  for (int rep = 0; rep < 32; ++rep) {
    Vec c = Vec::Zero(tensor_dim(n));
    for (const Vec& v : central) c += rng.cgauss_like() * v;
    if (c.norm() == 0.0) continue;
    if (try_witness(c)) return probe;
  }
  // Deterministic fallback over a structured coefficient grid.
  for (const Vec& v : central)
    if (try_witness(v)) return probe;
  for (std::size_t i = 0; i < central.size(); ++i)
    for (std::size_t j = i + 1; j < central.size(); ++j)
      for (Complex z : {Complex(1, 0), Complex(-1, 0), Complex(0, 1), Complex(0, -1)})
        if (try_witness(central[i] + z * central[j])) return probe;

  probe.result = PeriodicProbe::Result::Inconclusive;
  return probe;
}

AperiodicityReport EdgeCorrespondence::aperiodicity_report(int n_max, std::uint64_t seed) const {
  AperiodicityReport rep;
  rep.scanned_up_to = n_max;
  if (!sinks_.empty() || !sources_.empty()) {
    rep.kind = AperiodicityReport::Kind::AperiodicCertified;
    rep.certified_via = !sinks_.empty() ? "sink" : "source";
    return rep;
  }
  for (int n = 1; n <= n_max; ++n) {
    rep.dims.push_back(tensor_dim(n));
    PeriodicProbe probe = periodic_at(n, seed);
    if (probe.result == PeriodicProbe::Result::Yes) {
      rep.kind = AperiodicityReport::Kind::PeriodicAt;
      rep.period = n;
      rep.witness = probe.witness;
      return rep;
    }
    if (probe.result == PeriodicProbe::Result::Inconclusive) rep.inconclusive_levels.push_back(n);
  }
  rep.kind = AperiodicityReport::Kind::NoPeriodUpToN;
  return rep;
}

std::optional<EdgeVector> EdgeCorrespondence::invertible_inner_vector(std::uint64_t seed) const {
  auto ok = [&](const EdgeVector& xi) {
    return invertible_in_b(inner_product(xi, xi));
  };
  if (ok(eps_coords_)) return eps_coords_;
  SplitMix64 rng(seed ^ 0xfull);
  for (int rep = 0; rep < 32; ++rep) {
    EdgeVector xi = random_vec(rng, dim_);
    if (ok(xi)) return xi;
  }
  return std::nullopt;
}

}  // namespace qgraph
