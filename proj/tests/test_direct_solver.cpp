#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "nsmf/assembly.hpp"
#include "nsmf/direct_solver.hpp"
#include "nsmf/newton.hpp"
#include "test_support.hpp"

using namespace nsmf;
using nsmf::testing::dense_solve;
using nsmf::testing::max_rel_diff;

namespace {

constexpr OrderingMethod kAll[] = {OrderingMethod::Natural, OrderingMethod::RCM, OrderingMethod::MinDegree,
                                   OrderingMethod::NestedDissection};

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

SparseCSR from_rows(std::int32_t n, std::vector<double> dense) { return SparseCSR::from_dense(n, dense); }

LinearSystem fem_system(bool three_d, int nx, int ny, int nz, std::mt19937_64& rng) {
  const Mesh mesh = three_d ? build_channel_mesh_3d(nx, ny, nz, {}) : build_channel_mesh_2d(nx, ny, {});
  const DofMap dofs = build_dof_map(mesh, three_d ? Formulation::Penalty3D : Formulation::Mixed2D);
  FlowParams params;
  if (three_d) {
    params.formulation = Formulation::Penalty3D;
    params.reynolds = 50.0;
  }
  auto x = initial_state(mesh, dofs);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (auto& v : x) v += u(rng);
  return apply_dirichlet(assemble_global(mesh, dofs, partition_elements(mesh, 1), x, params), mesh, dofs);
}

// max |(L U)_ij - A(row_order[i], col_order[j])| relative to max |A|.
double reconstruction_error(const SparseCSR& a, const NumericFactor& f) {
  const auto d = f.to_dense();
  const auto n = static_cast<std::size_t>(a.n);
  const auto dense = a.to_dense();
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += d.L[i * n + k] * d.U[k * n + j];
      const double ref = dense[static_cast<std::size_t>(d.row_order[i]) * n + static_cast<std::size_t>(d.col_order[j])];
      err = std::max(err, std::abs(s - ref));
      scale = std::max(scale, std::abs(ref));
    }
  }
  return err / scale;
}

}  // namespace

TEST(Analyze, TridiagonalFactorCount) {
  const SparseCSR a = from_rows(5, {2, -1, 0, 0, 0,
                                    -1, 2, -1, 0, 0,
                                    0, -1, 2, -1, 0,
                                    0, 0, -1, 2, -1,
                                    0, 0, 0, -1, 2});
  for (auto m : kAll) EXPECT_EQ(analyze(symmetrize_pattern(a), m).nnz_factors, 13) << to_string(m);
}

TEST(Analyze, ChainWithoutAmalgamationGivesSmallFronts) {
  std::vector<std::pair<std::int32_t, std::int32_t>> e;
  for (std::int32_t i = 0; i + 1 < 6; ++i) e.emplace_back(i, i + 1);
  const SparsityPattern g = SparsityPattern::from_edges(6, e);
  AnalyzeOptions opts;
  opts.amalgamate = false;
  const SymbolicFactorization s = analyze(g, OrderingMethod::Natural, opts);
  for (const auto& f : s.fronts) EXPECT_EQ(f.order(), 2);
  EXPECT_EQ(s.peak_front, 2);
  EXPECT_EQ(s.nnz_factors, 16);
}

TEST(Analyze, FrontsCoverEveryVariableOnceInPostorder) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 10; ++t) {
    const SparsityPattern g = nsmf::testing::random_pattern(rng, 20 + 10 * t, 3.0);
    for (auto m : kAll) {
      for (bool amalgamate : {false, true}) {
        AnalyzeOptions opts;
        opts.amalgamate = amalgamate;
        const SymbolicFactorization s = analyze(g, m, opts);
        EXPECT_TRUE(s.perm.is_valid());
        std::vector<int> seen(static_cast<std::size_t>(g.n), 0);
        for (std::size_t f = 0; f < s.fronts.size(); ++f) {
          for (auto v : s.fronts[f].pivots) {
            ++seen[static_cast<std::size_t>(v)];
            EXPECT_EQ(s.front_of[static_cast<std::size_t>(v)], static_cast<std::int32_t>(f));
          }
          for (auto c : s.fronts[f].children) EXPECT_LT(c, static_cast<std::int32_t>(f));
          if (s.fronts[f].parent >= 0) EXPECT_GT(s.fronts[f].parent, static_cast<std::int32_t>(f));
        }
        for (int c : seen) EXPECT_EQ(c, 1);
        EXPECT_EQ(s.nnz_factors, nsmf::testing::boolean_fill(g, s.perm.perm));
        EXPECT_GE(s.front_entries, s.nnz_factors - g.n);
      }
    }
  }
}

TEST(Analyze, AmalgamationNeverReducesFrontEntries) {
  std::mt19937_64 rng(32);
  const SparsityPattern g = nsmf::testing::random_pattern(rng, 150, 3.0);
  AnalyzeOptions off;
  off.amalgamate = false;
  const auto a = analyze(g, OrderingMethod::MinDegree, off);
  const auto b = analyze(g, OrderingMethod::MinDegree);
  EXPECT_LE(b.fronts.size(), a.fronts.size());
  EXPECT_GE(b.front_entries, a.front_entries);
  EXPECT_EQ(a.nnz_factors, b.nnz_factors);
}

TEST(Factorize, LUReproducesPermutedMatrix) {
  std::mt19937_64 rng(33);
  for (int t = 0; t < 8; ++t) {
    const SparseCSR a = nsmf::testing::random_matrix(rng, 10 + 5 * t, 3.0);
    for (auto m : kAll) {
      const NumericFactor f = factorize(analyze(symmetrize_pattern(a), m), a);
      EXPECT_LT(reconstruction_error(a, f), 1e-13) << to_string(m);
    }
  }
}

TEST(Solve, MatchesDenseOracleOnRandomSystems) {
  std::mt19937_64 rng(34);
  for (int t = 0; t < 25; ++t) {
    std::uniform_int_distribution<std::int32_t> size(1, 200);
    const std::int32_t n = size(rng);
    const SparseCSR a = nsmf::testing::random_matrix(rng, n, 4.0);
    const auto b = random_vector(rng, static_cast<std::size_t>(n));
    const auto ref = dense_solve(a.to_dense(), b);
    for (auto m : kAll) {
      SolveReport rep;
      const auto x = solve_direct(a, b, m, &rep);
      EXPECT_LT(max_rel_diff(x, ref), 1e-10) << to_string(m) << " n=" << n;
      EXPECT_LE(rep.backward_error, 1e-12);
    }
  }
}

TEST(Solve, MatchesDenseOracleOnFemSystems) {
  std::mt19937_64 rng(35);
  for (bool three_d : {false, true}) {
    const LinearSystem s = three_d ? fem_system(true, 3, 2, 2, rng) : fem_system(false, 4, 3, 0, rng);
    const auto ref = dense_solve(s.matrix.to_dense(), s.rhs);
    for (auto m : kAll) {
      SolveReport rep;
      const auto x = solve_direct(s.matrix, s.rhs, m, &rep);
      EXPECT_LT(max_rel_diff(x, ref), 1e-9) << to_string(m);
      EXPECT_LE(rep.backward_error, 1e-12);
    }
  }
}

TEST(Solve, SaddlePointNeedsDelayedPivots) {
  // Zero leading pivot in its own front: threshold pivoting must push it up.
  const SparseCSR a = from_rows(3, {0, 1, 0,
                                    1, 1, 1,
                                    0, 1, 1});
  AnalyzeOptions opts;
  opts.amalgamate = false;
  const auto sym = analyze(symmetrize_pattern(a), OrderingMethod::Natural, opts);
  ASSERT_GE(sym.fronts.size(), 2U);
  const NumericFactor f = factorize(sym, a);
  EXPECT_GT(f.delayed_pivots(), 0);
  EXPECT_TRUE(f.perturbations().empty());
  const std::vector<double> b{1.0, 2.0, 3.0};
  const auto x = solve(f, b);
  const auto ref = dense_solve(a.to_dense(), b);
  EXPECT_LT(max_rel_diff(x, ref), 1e-14);
  EXPECT_LT(reconstruction_error(a, f), 1e-15);
}

TEST(Solve, SingularMatrixIsPerturbedAndLogged) {
  const SparseCSR a = from_rows(2, {1, 1,
                                    1, 1});
  const NumericFactor f = factorize(analyze(symmetrize_pattern(a), OrderingMethod::Natural), a);
  ASSERT_EQ(f.perturbations().size(), 1U);
  EXPECT_EQ(f.perturbations()[0].original, 0.0);
  EXPECT_NE(f.perturbations()[0].replaced, 0.0);
}

TEST(Solve, ZeroRhsGivesZeroSolution) {
  std::mt19937_64 rng(36);
  const SparseCSR a = nsmf::testing::random_matrix(rng, 40, 3.0);
  SolveReport rep;
  const auto x = solve_direct(a, std::vector<double>(40, 0.0), OrderingMethod::NestedDissection, &rep);
  for (double v : x) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(rep.backward_error, 0.0);
}

TEST(Solve, IdentityIsExact) {
  const SparseCSR a = SparseCSR::identity(7);
  const std::vector<double> b{1, 2, 3, 4, 5, 6, 7};
  EXPECT_EQ(solve_direct(a, b, OrderingMethod::MinDegree), b);
}

TEST(Solve, FactorReusedForManyRhs) {
  std::mt19937_64 rng(37);
  const SparseCSR a = nsmf::testing::random_matrix(rng, 60, 4.0);
  const NumericFactor f = factorize(analyze(symmetrize_pattern(a), OrderingMethod::MinDegree), a);
  for (int k = 0; k < 5; ++k) {
    const auto b = random_vector(rng, 60);
    EXPECT_LT(max_rel_diff(solve(f, b), dense_solve(a.to_dense(), b)), 1e-12);
  }
}

TEST(Solve, RejectsBadRhs) {
  const SparseCSR a = SparseCSR::identity(3);
  const NumericFactor f = factorize(analyze(symmetrize_pattern(a), OrderingMethod::Natural), a);
  EXPECT_THROW(solve(f, std::vector<double>{1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(solve(f, std::vector<double>{1.0, std::numeric_limits<double>::quiet_NaN(), 0.0}), std::invalid_argument);
  EXPECT_THROW(solve(f, std::vector<double>{1.0, std::numeric_limits<double>::infinity(), 0.0}), std::invalid_argument);
}

TEST(Factorize, EmptyColumnIsStructurallySingular) {
  const SparseCSR a = from_rows(3, {1, 0, 0,
                                    0, 0, 0,
                                    0, 0, 1});
  const auto sym = analyze(symmetrize_pattern(a), OrderingMethod::Natural);
  try {
    factorize(sym, a);
    FAIL() << "expected StructurallySingular";
  } catch (const StructurallySingular& e) {
    EXPECT_EQ(e.column(), 1);
  }
}

TEST(Factorize, EmptyRowIsStructurallySingular) {
  const SparseCSR a = from_rows(3, {1, 0, 0,
                                    0, 0, 0,
                                    0, 1, 1});
  EXPECT_THROW(factorize(analyze(symmetrize_pattern(a), OrderingMethod::Natural), a), StructurallySingular);
}

TEST(Factorize, EntryOutsideAnalysisRejected) {
  const SparseCSR a = SparseCSR::identity(4);
  const SparseCSR b = from_rows(4, {1, 0, 0, 1,
                                    0, 1, 0, 0,
                                    0, 0, 1, 0,
                                    0, 0, 0, 1});
  const auto sym = analyze(symmetrize_pattern(a), OrderingMethod::Natural);
  EXPECT_THROW(factorize(sym, b), std::invalid_argument);
  EXPECT_THROW(factorize(sym, SparseCSR::identity(5)), std::invalid_argument);
}

TEST(Factorize, SameAnalysisServesNewValues) {
  std::mt19937_64 rng(38);
  const LinearSystem s1 = fem_system(false, 3, 3, 0, rng);
  const LinearSystem s2 = fem_system(false, 3, 3, 0, rng);
  ASSERT_TRUE(s1.matrix.same_pattern(s2.matrix));
  const auto sym = analyze(symmetrize_pattern(s1.matrix), OrderingMethod::NestedDissection);
  for (const LinearSystem* s : {&s1, &s2}) {
    const auto x = solve(factorize(sym, s->matrix), s->rhs);
    EXPECT_LT(max_rel_diff(x, dense_solve(s->matrix.to_dense(), s->rhs)), 1e-9);
  }
}

TEST(Memory, ReportMatchesAnalysisEstimate) {
  std::mt19937_64 rng(39);
  const SparseCSR a = nsmf::testing::random_matrix(rng, 80, 3.0);
  const auto sym = analyze(symmetrize_pattern(a), OrderingMethod::MinDegree);
  const MemoryStats est = estimate_memory(sym);
  EXPECT_EQ(est.nnz_factors, sym.nnz_factors);
  EXPECT_EQ(est.peak_front, sym.peak_front);
  EXPECT_GE(est.estimated_bytes, 8 * est.nnz_factors);
  EXPECT_EQ(memory_report(sym, factorize(sym, a)), est);
}

TEST(BackwardError, ZeroForExactSolution) {
  const SparseCSR a = SparseCSR::identity(3);
  const std::vector<double> x{1.0, -2.0, 3.0};
  EXPECT_EQ(backward_error(a, x, x), 0.0);
  const std::vector<double> y{1.0, -2.0, 3.5};
  EXPECT_NEAR(backward_error(a, y, x), 0.5 / (3.5 + 3.0), 1e-15);
}
