#include <doctest.h>

#include <random>

#include "qgraph/qadj.hpp"

using namespace qgraph;

namespace {

// Non-tracial δ-form on M_2 ⊕ C: inverse weights sum to 6 in both blocks.
QuantumSpace mixed_space() {
  double s = std::sqrt(5.0);
  return QuantumSpace(BlockStructure{{2, 1}}, {{(5 + s) / 12, (5 - s) / 12}, {1.0 / 6}});
}

}  // namespace

TEST_CASE("schur idempotence of the basic families") {
  QuantumSpace m2 = QuantumSpace::tracial(BlockStructure{{2}});
  CHECK(check_schur_idempotent(trivial_graph(m2)).pass);
  CHECK(check_schur_idempotent(complete_graph(m2)).pass);

  QuantumSpace mixed = mixed_space();
  CHECK(check_schur_idempotent(trivial_graph(mixed)).pass);
  CHECK(check_schur_idempotent(complete_graph(mixed)).pass);

  // A 2-entry breaks entrywise idempotence on the uniform C^2.
  QuantumSpace c2 = QuantumSpace::tracial(BlockStructure{{1, 1}});
  Mat bad(2, 2);
  bad << 2, 0, 0, 1;
  CHECK_FALSE(check_schur_idempotent({c2, {bad}}).pass);
}

TEST_CASE("classical matrices are Schur idempotent iff zero-one") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dsize(1, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    int d = dsize(rng);
    QuantumSpace sp = QuantumSpace::tracial(BlockStructure{std::vector<int>(d, 1)});
    Mat m = Mat::Zero(d, d);
    bool zero_one = true;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double r = u(rng);
        if (r < 0.4)
          m(i, j) = 0.0;
        else if (r < 0.8)
          m(i, j) = 1.0;
        else {
          m(i, j) = 0.25 + u(rng);
          if (m(i, j) == 1.0) m(i, j) = 1.5;
          zero_one = false;
        }
      }
    CHECK(check_schur_idempotent({sp, {m}}).pass == zero_one);
  }
}

TEST_CASE("complete positivity via the Choi matrix") {
  QuantumSpace m2 = QuantumSpace::tracial(BlockStructure{{2}});

  QuantumGraph id = trivial_graph(m2);
  CpCheck c = check_cp(id);
  CHECK(c.cp);
  // Choi of the identity map is the rank-one maximally entangled projection.
  Eigen::JacobiSVD<Mat> svd(choi_matrix(id));
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-9 * svd.singularValues()(0)) ++rank;
  CHECK(rank == 1);

  CHECK(check_cp(complete_graph(m2)).cp);

  // Transpose on M_2 is not CP; its Choi matrix has eigenvalue -1.
  Mat T = Mat::Zero(4, 4);
  T(m2.unit_index(0, 0, 0), m2.unit_index(0, 0, 0)) = 1;
  T(m2.unit_index(0, 1, 1), m2.unit_index(0, 1, 1)) = 1;
  T(m2.unit_index(0, 0, 1), m2.unit_index(0, 1, 0)) = 1;
  T(m2.unit_index(0, 1, 0), m2.unit_index(0, 0, 1)) = 1;
  CpCheck tc = check_cp({m2, {T}});
  CHECK_FALSE(tc.cp);
  CHECK(tc.min_eigenvalue == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("kraus rank") {
  for (int n : {2, 3}) {
    QuantumSpace mn = QuantumSpace::tracial(BlockStructure{{n}});
    CHECK(kraus_rank(complete_graph(mn)) == n * n);
    CHECK(kraus_rank(trivial_graph(mn)) == 1);
  }

  QuantumSpace m2 = QuantumSpace::tracial(BlockStructure{{2}});
  Mat swap(2, 2);
  swap << 0, 1, 1, 0;
  QuantumGraph r1 = rank_one_graph(m2, {swap});
  CHECK(check_schur_idempotent(r1).pass);
  CHECK(kraus_rank(r1) == 1);

  QuantumSpace c2 = QuantumSpace::tracial(BlockStructure{{1, 1}});
  CHECK_THROWS_AS(kraus_rank(complete_graph(c2)), Error);
}

TEST_CASE("rank one trace constraint") {
  QuantumSpace m2 = QuantumSpace::tracial(BlockStructure{{2}});
  Mat swap(2, 2);
  swap << 0, 1, 1, 0;
  // Tr(2 I · I) = 4 = δ², so the swap matrix is admissible.
  CHECK_NOTHROW(rank_one_graph(m2, {swap}));
  try {
    rank_one_graph(m2, {Mat(0.5 * swap)});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TraceConstraintViolated);
  }
}

TEST_CASE("epsilon vector") {
  QuantumSpace mixed = mixed_space();
  QuantumGraph triv = trivial_graph(mixed);
  TensorElement eps = epsilon_vector(triv);
  TensorElement expect = mixed.comultiply(mixed.identity()) / mixed.delta_sq();
  CHECK(max_abs(TensorElement(eps - expect)) < 1e-12);

  // Complete graph: ε_K = 1 ⊗ 1.
  QuantumGraph comp = complete_graph(mixed);
  AlgebraElement one = mixed.identity();
  CHECK(max_abs(TensorElement(epsilon_vector(comp) - TensorElement(one * one.transpose()))) < 1e-10);

  // Main example with n = 1: (e1+e2+e3) ⊗ e1 + (e1+e2) ⊗ e2.
  QuantumGraph me = main_example(1);
  TensorElement e = TensorElement::Zero(3, 3);
  e(0, 0) = e(1, 0) = e(2, 0) = 1.0;
  e(0, 1) = e(1, 1) = 1.0;
  CHECK(max_abs(TensorElement(epsilon_vector(me) - e)) < 1e-12);

  // Paper's closed form for general n.
  for (int n : {2, 3}) {
    QuantumGraph g = main_example(n);
    const QuantumSpace& sp = g.space;
    TensorElement expect2 = TensorElement::Zero(sp.dim(), sp.dim());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        for (int a = 0; a < 3; ++a)
          expect2(sp.unit_index(a, i, j), sp.unit_index(0, j, i)) += 1.0 / n;
        for (int a = 0; a < 2; ++a)
          expect2(sp.unit_index(a, i, j), sp.unit_index(1, j, i)) += 1.0 / n;
      }
    CHECK(max_abs(TensorElement(epsilon_vector(g) - expect2)) < 1e-12);
  }
}

TEST_CASE("sources sinks and the range ideal") {
  QuantumGraph me = main_example(1);
  CHECK(quantum_sources(me).empty());
  CHECK(quantum_sinks(me) == std::set<int>{2});
  CHECK(range_ideal(me).blocks == std::set<int>{0, 1});

  QuantumGraph me2 = main_example(2);
  CHECK(quantum_sources(me2).empty());
  CHECK(quantum_sinks(me2) == std::set<int>{2});

  QuantumSpace mixed = mixed_space();
  QuantumGraph comp = complete_graph(mixed);
  CHECK(quantum_sources(comp).empty());
  CHECK(quantum_sinks(comp).empty());
  CHECK(range_ideal(comp).blocks == std::set<int>{0, 1});

  // Zero column = source, zero row = sink, by the support scan.
  Eigen::MatrixXd m(3, 3);
  m << 0, 1, 1, 0, 0, 1, 0, 0, 0;
  QuantumGraph cg = classical_graph(m);
  CHECK(quantum_sources(cg) == std::set<int>{0});
  CHECK(quantum_sinks(cg) == std::set<int>{2});

  // Degenerate zero map: empty range ideal, flagged by validation.
  QuantumSpace c2 = QuantumSpace::tracial(BlockStructure{{1, 1}});
  QuantumGraph zero{c2, {Mat::Zero(2, 2)}};
  CHECK(range_ideal(zero).blocks.empty());
  CHECK(validate_graph(zero).degenerate_zero);
}

TEST_CASE("sources of G are the sinks of the adjoint graph") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    int d = 2 + static_cast<int>(3 * u(rng));
    QuantumSpace sp = QuantumSpace::tracial(BlockStructure{std::vector<int>(d, 1)});
    Mat m = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = u(rng) < 0.5 ? 0.0 : 1.0;
    QuantumGraph g{sp, {m}};
    QuantumGraph gstar{sp, {sp.adjoint_map(m)}};
    CHECK(quantum_sources(g) == quantum_sinks(gstar));
    CHECK(quantum_sinks(g) == quantum_sources(gstar));
  }
}

TEST_CASE("constructed families validate") {
  CHECK_NOTHROW(validate_graph(main_example(1)));
  CHECK_NOTHROW(validate_graph(main_example(2)));
  CHECK_NOTHROW(validate_graph(complete_graph(QuantumSpace::tracial(BlockStructure{{2, 2}}))));
  CHECK_NOTHROW(validate_graph(trivial_graph(QuantumSpace::tracial(BlockStructure{{1, 1, 1}}))));

  Eigen::MatrixXd one(1, 1);
  one << 1;
  QuantumGraph cg = classical_graph(one);
  CHECK(max_abs(Mat(cg.adj.matrix - trivial_graph(cg.space).adj.matrix)) < 1e-15);

  CHECK_THROWS_AS(classical_graph([] {
                    Eigen::MatrixXd m(2, 2);
                    m << 1, 2, 0, 1;
                    return m;
                  }()),
                  Error);
}
