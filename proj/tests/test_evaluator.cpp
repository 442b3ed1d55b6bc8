#include <gtest/gtest.h>

#include <cmath>

#include "clwe/ablation.hpp"
#include "clwe/bli.hpp"
#include "clwe/eigsim.hpp"
#include "clwe/report.hpp"
#include "clwe/synth.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace clwe;
using clwe::testing::random_space;
using clwe::testing::TempDir;

namespace {

EmbeddingSpace plane(const std::vector<std::string>& tokens, const std::vector<double>& angles_deg) {
  Matrix m(static_cast<Eigen::Index>(angles_deg.size()), 2);
  for (std::size_t i = 0; i < angles_deg.size(); ++i) {
    const double t = angles_deg[i] * M_PI / 180.0;
    m(static_cast<Eigen::Index>(i), 0) = std::cos(t);
    m(static_cast<Eigen::Index>(i), 1) = std::sin(t);
  }
  return EmbeddingSpace(Vocabulary::from_ranked(tokens), m);
}

DictionaryPairs identity_pairs(const EmbeddingSpace& x, const EmbeddingSpace& y, std::size_t n) {
  DictionaryPairs d(x.vocab, y.vocab);
  for (WordId i = 0; i < n; ++i) d.add(i, i);
  return d;
}

oracle::Rows adjacency_rows(const Eigen::MatrixXd& m) {
  oracle::Rows r(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  return r;
}

}  // namespace

// BLI ----------------------------------------------------------------------

TEST(Bli, IdentityGivesPerfectPrecision) {
  const auto x = random_space(100, 8, 1);
  const auto rep = bli_precision(x, x, identity_pairs(x, x, 100));
  EXPECT_EQ(rep.p_at_1, 1.0);
  EXPECT_EQ(rep.p_at_10, 1.0);
  EXPECT_EQ(rep.evaluated, 100u);
}

TEST(Bli, HubCorrectionFixesThirdWord) {
  // x2 is nearer to y0 than to its translation y2 by cosine, but y0 is a hub
  // (x0 sits on it), so CSLS with k = 1 picks y2.
  const auto x = plane({"a", "b", "c"}, {0, 90, 18});
  const auto y = plane({"x", "y", "z"}, {0, 90, 40});
  const auto gold = identity_pairs(x, y, 3);
  BliOptions nn{Retrieval::nn, 1}, csls{Retrieval::csls, 1};
  EXPECT_NEAR(bli_precision(x, y, gold, nn).p_at_1, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(bli_precision(x, y, gold, csls).p_at_1, 1.0);

  // The same verdict from the oracle's score table.
  oracle::Rows xr{{1, 0}, {0, 1}, {std::cos(M_PI / 10), std::sin(M_PI / 10)}};
  oracle::Rows yr{{1, 0}, {0, 1}, {std::cos(40 * M_PI / 180), std::sin(40 * M_PI / 180)}};
  const auto table = oracle::csls_scores(xr, yr, 1, {0, 1, 2});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(oracle::rank(table[i])[0], i);
}

TEST(Bli, AnyGoldTranslationCounts) {
  const auto x = plane({"a", "b"}, {0, 90});
  const auto y = plane({"p", "q", "r"}, {180, 1, 90});
  DictionaryPairs gold(x.vocab, y.vocab);
  gold.add(0, 0);  // not retrievable at 1
  gold.add(0, 1);  // retrievable
  gold.add(1, 2);
  const auto rep = bli_precision(x, y, gold, {Retrieval::nn, 1});
  EXPECT_EQ(rep.p_at_1, 1.0);
  EXPECT_EQ(rep.evaluated, 2u);
}

TEST(Bli, NearestNeighbourMatchesBruteForce) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const std::size_t ns = 5 + rng.below(196), nt = 5 + rng.below(196), d = 2 + rng.below(15);
    const auto x = random_space(ns, d, seed * 7), y = random_space(nt, d, seed * 7 + 1, "v");
    DictionaryPairs gold(x.vocab, y.vocab);
    for (WordId i = 0; i < ns; ++i) gold.add(i, static_cast<WordId>(rng.below(nt)));
    std::size_t hits = 0;
    for (const auto& [s, t] : gold.pairs()) {
      std::size_t best = 0;
      double best_cos = -INFINITY;
      for (std::size_t j = 0; j < nt; ++j) {
        const double c = x.row(s).dot(y.row(static_cast<WordId>(j))) / (x.row(s).norm() * y.row(static_cast<WordId>(j)).norm());
        if (c > best_cos) {
          best_cos = c;
          best = j;
        }
      }
      hits += best == t;
    }
    const auto rep = bli_precision(x, y, gold, {Retrieval::nn, 10});
    EXPECT_EQ(rep.p_at_1, static_cast<double>(hits) / static_cast<double>(ns)) << "seed " << seed;
  }
}

TEST(Bli, PrecisionMonotoneAndCoverageAccounted) {
  TempDir dir;
  const auto x = random_space(200, 6, 3), y = random_space(200, 6, 4);
  std::string text;
  for (int i = 0; i < 150; ++i) text += "w" + std::to_string(i) + " w" + std::to_string((i * 7) % 200) + "\n";
  text += "missing1 w0\nmissing2 w1\nw5 missing3\n";
  clwe::testing::write_file(dir.file("gold.txt"), text);
  for (auto r : {Retrieval::nn, Retrieval::csls}) {
    const auto rep = bli_precision(x, y, dir.file("gold.txt"), {r, 10});
    EXPECT_LE(rep.p_at_1, rep.p_at_5);
    EXPECT_LE(rep.p_at_5, rep.p_at_10);
    EXPECT_GE(rep.p_at_1, 0.0);
    EXPECT_LE(rep.p_at_10, 1.0);
    EXPECT_EQ(rep.evaluated + rep.skipped_oov, 152u);
    EXPECT_EQ(rep.skipped_oov, 2u);
  }
}

TEST(Bli, FrameMismatchAndEmptyGold) {
  const auto x = with_frame(random_space(10, 3, 1), "a"), y = with_frame(random_space(10, 3, 2), "b");
  EXPECT_THROW(bli_precision(x, y, identity_pairs(x, y, 10)), DataError);
  EXPECT_THROW(bli_precision(x, with_frame(y, "a"), DictionaryPairs(x.vocab, y.vocab)), DataError);
}

// Eigenvalue similarity ------------------------------------------------------

TEST(Eigsim, PathVersusStarGolden) {
  const auto p4 = oracle::laplacian(4, {{0, 1}, {1, 2}, {2, 3}});
  const auto star = oracle::laplacian(4, {{0, 1}, {0, 2}, {0, 3}});
  const auto sp = oracle::jacobi_eigenvalues(p4), ss = oracle::jacobi_eigenvalues(star);
  // Closed forms: path 2 - 2cos(k pi / 4); star 0, 1, 1, 4.
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(sp[k], 2 - 2 * std::cos(k * M_PI / 4), 1e-12);
  EXPECT_NEAR(ss[0], 0, 1e-12);
  EXPECT_NEAR(ss[1], 1, 1e-12);
  EXPECT_NEAR(ss[2], 1, 1e-12);
  EXPECT_NEAR(ss[3], 4, 1e-12);

  Eigen::MatrixXd a_p = Eigen::MatrixXd::Zero(4, 4), a_s = Eigen::MatrixXd::Zero(4, 4);
  for (auto [u, v] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}}) a_p(u, v) = a_p(v, u) = 1;
  for (int v = 1; v < 4; ++v) a_s(0, v) = a_s(v, 0) = 1;
  const auto lib_p = symmetric_spectrum(laplacian(a_p)), lib_s = symmetric_spectrum(laplacian(a_s));
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(lib_p[k], sp[k], 1e-10);
    EXPECT_NEAR(lib_s[k], ss[k], 1e-10);
  }
  const auto c = compare_spectra(lib_p, lib_s, 0.9);
  EXPECT_EQ(c.k_x, 1u);
  EXPECT_EQ(c.k_y, 2u);
  EXPECT_EQ(c.k_effective, 1u);
  const double golden = (sp[3] - ss[3]) * (sp[3] - ss[3]);
  EXPECT_NEAR(golden, 0.3431457505, 1e-9);
  EXPECT_NEAR(c.delta, golden, 1e-4);
}

TEST(Eigsim, EnergyCutoffClampsToOne) {
  EXPECT_EQ(energy_cutoff({0, 0, 10}, 0.9), 1u);
  EXPECT_EQ(energy_cutoff({0, 1, 1, 4}, 0.9), 2u);
  EXPECT_EQ(energy_cutoff({0, 0}, 0.9), 0u);
}

TEST(Eigsim, InvariantsOnRandomSpaces) {
  EigsimOptions opt;
  opt.n_words = 150;
  opt.knn_k = 5;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto x = random_space(200, 12, seed), y = random_space(200, 12, seed + 50);
    EXPECT_EQ(eigenvalue_similarity(x, x, opt).delta, 0.0);
    Rng rng(seed);
    const auto q = apply_map(normalize_chain(x), OrthogonalMap(random_orthogonal(12, rng)));
    EXPECT_LT(eigenvalue_similarity(x, q, opt).delta, 1e-9);
    const auto xy = eigenvalue_similarity(x, y, opt), yx = eigenvalue_similarity(y, x, opt);
    EXPECT_NEAR(xy.delta, yx.delta, 1e-9);
    EXPECT_GE(xy.delta, 0.0);
    EXPECT_LE(xy.k_effective, opt.n_words);
    EXPECT_TRUE(std::is_sorted(xy.spectrum_x.begin(), xy.spectrum_x.end()));
    EXPECT_NEAR(xy.spectrum_x.front(), 0.0, 1e-8);
    for (double v : xy.spectrum_x) EXPECT_GE(v, -1e-8);
  }
}

TEST(Eigsim, SpectrumSumEqualsTraceAndMatchesJacobi) {
  const auto x = normalize_chain(random_space(60, 6, 9));
  const auto adj = knn_graph(x.matrix, 4);
  EXPECT_TRUE(adj.isApprox(adj.transpose()));
  for (Eigen::Index i = 0; i < adj.rows(); ++i) {
    EXPECT_EQ(adj(i, i), 0.0);
    EXPECT_GE(adj.row(i).sum(), 4.0);
  }
  const auto l = laplacian(adj);
  const auto spec = symmetric_spectrum(l);
  double sum = 0;
  for (double v : spec) sum += v;
  EXPECT_NEAR(sum, l.trace(), 1e-6);
  oracle::Rows lr = adjacency_rows(l);
  const auto jac = oracle::jacobi_eigenvalues(lr);
  for (std::size_t i = 0; i < spec.size(); ++i) EXPECT_NEAR(spec[i], jac[i], 1e-8);
}

TEST(Eigsim, DisconnectedGraphAllowed) {
  // Two far-apart clusters with k = 1 give at least two zero eigenvalues.
  Matrix m(4, 2);
  m << 1, 0.01, 1, -0.01, -0.01, 1, 0.01, 1;
  const auto spec = symmetric_spectrum(laplacian(knn_graph(m, 1)));
  EXPECT_NEAR(spec[0], 0.0, 1e-10);
  EXPECT_NEAR(spec[1], 0.0, 1e-10);
}

TEST(Eigsim, RejectsOversizedRequests) {
  const auto x = random_space(20, 4, 1);
  EigsimOptions opt;
  opt.n_words = 21;
  EXPECT_THROW(eigenvalue_similarity(x, x, opt), ConfigError);
  opt.n_words = 10;
  opt.knn_k = 10;
  EXPECT_THROW(eigenvalue_similarity(x, x, opt), ConfigError);
}

TEST(Eigsim, NormalizedLaplacianSpectrumInRange) {
  const auto x = normalize_chain(random_space(50, 5, 2));
  const auto spec = symmetric_spectrum(laplacian(knn_graph(x.matrix, 3), LaplacianKind::normalized));
  for (double v : spec) {
    EXPECT_GE(v, -1e-10);
    EXPECT_LE(v, 2.0 + 1e-10);
  }
}

// Ablation and reports -------------------------------------------------------

class Ablation : public ::testing::Test {
 protected:
  // Random monolingual pair, a perfectly aligned "before" pair with half the
  // words swapped, and an identical "after" pair.
  AblationSpaces spaces(std::size_t n = 2000) const {
    auto x = random_space(n, 20, 1), y = random_space(n, 20, 2);
    auto x_final = x;
    auto y_final = x;
    auto y_tilde = x;
    for (Eigen::Index i = 0; i + 1 < x.matrix.rows(); i += 4) y_tilde.matrix.row(i).swap(y_tilde.matrix.row(i + 1));
    return {x, y, x, y_tilde, x_final, y_final, std::nullopt, std::nullopt};
  }
  TokenPairs gold() const {
    TokenPairs g;
    for (int i = 0; i < 2000; ++i) g.emplace_back("w" + std::to_string(i), "w" + std::to_string(i));
    g.emplace_back("absent", "w0");
    return g;
  }
};

TEST_F(Ablation, SchemesInOrder) {
  const auto rows = ablation_schemes(spaces(), gold(), {}, "r1");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].scheme, "Unaligned");
  EXPECT_EQ(rows[1].scheme, "Related-Aligned");
  EXPECT_EQ(rows[2].scheme, "Full");
  EXPECT_EQ(rows[0].bli.retrieval, Retrieval::nn);
  EXPECT_LT(rows[0].bli.p_at_1, 0.01);  // disjoint random bases: chance level
  EXPECT_NEAR(rows[1].bli.p_at_1, 0.5, 1e-12);
  EXPECT_EQ(rows[2].bli.p_at_1, 1.0);
  for (const auto& r : rows) {
    EXPECT_EQ(r.run, "r1");
    EXPECT_EQ(r.bli.skipped_oov, 1u);
    EXPECT_FALSE(r.delta.has_value());
  }
}

TEST_F(Ablation, FullMatchesDirectEvaluation) {
  const auto s = spaces();
  const auto rows = ablation_schemes(s, gold());
  const auto g = resolve_dictionary(gold(), s.x_final.vocab, s.y_final.vocab);
  const auto direct = bli_precision(s.x_final, s.y_final, g.pairs, {}, g.coverage.skipped_source_words);
  EXPECT_EQ(rows[2].bli.p_at_1, direct.p_at_1);
  EXPECT_EQ(rows[2].bli.p_at_10, direct.p_at_10);
}

TEST_F(Ablation, DirectRowAndDeltas) {
  auto s = spaces(300);
  s.x_direct = s.x_mono;
  s.y_direct = s.y_mono;
  AblationOptions opt;
  opt.eigsim = EigsimOptions{};
  opt.eigsim->n_words = 5000;  // clamped to the vocabulary
  opt.eigsim->knn_k = 5;
  const auto rows = ablation_schemes(s, gold(), opt);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[3].scheme, "Direct");
  ASSERT_TRUE(rows[2].delta.has_value());
  EXPECT_EQ(*rows[2].delta, 0.0);
  EXPECT_GT(*rows[0].delta, 0.0);
}

TEST(AblationLoad, MissingCheckpointNamesStage) {
  TempDir dir;
  try {
    load_ablation_spaces(dir.path().string());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("stage1"), std::string::npos) << e.what();
  }
}

TEST(Reports, CsvLayouts) {
  BliReport b;
  b.p_at_1 = 0.5;
  b.p_at_5 = 0.75;
  b.p_at_10 = 1.0;
  b.evaluated = 4;
  b.skipped_oov = 1;
  EXPECT_EQ(bli_csv(b), "p_at_1,p_at_5,p_at_10,evaluated,skipped_oov,retrieval,csls_k\n0.500000,0.750000,1.000000,4,1,csls,10\n");
  EigsimReport e;
  e.delta = 0.25;
  e.n_words = 4;
  e.knn_k = 1;
  e.k_x = 1;
  e.k_y = 2;
  e.k_effective = 1;
  e.spectrum_x = {0, 1};
  e.spectrum_y = {0, 2};
  EXPECT_EQ(eigsim_csv(e), "delta,n_words,knn_k,k_x,k_y,k_effective\n0.25,4,1,1,2,1\n");
  EXPECT_EQ(spectra_csv(e), "rank,lambda_x,lambda_y\n1,1,2\n2,0,0\n");
  const std::vector<SchemeReport> rows{{"r", "Full", b, 0.5}, {"r", "Unaligned", b, std::nullopt}};
  EXPECT_EQ(ablation_csv(rows),
            "run,scheme,p_at_1,p_at_5,p_at_10,evaluated,skipped_oov,retrieval,delta\n"
            "r,Full,0.500000,0.750000,1.000000,4,1,csls,0.5\n"
            "r,Unaligned,0.500000,0.750000,1.000000,4,1,csls,\n");
  const auto table = ablation_table(rows);
  EXPECT_NE(table.find("Full"), std::string::npos);
  EXPECT_NE(table.find("50.0"), std::string::npos);
  const auto svg = ablation_svg(rows);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(spectra_svg(e).find("polyline"), std::string::npos);
}
