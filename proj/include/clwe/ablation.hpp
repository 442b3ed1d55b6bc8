#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clwe/bli.hpp"
#include "clwe/eigsim.hpp"
#include "clwe/io.hpp"
#include "clwe/pipeline.hpp"

namespace clwe {

// Spaces compared by the ablation schemes, as persisted by run_pivot.
struct AblationSpaces {
  EmbeddingSpace x_mono, y_mono;    // raw monolingual pair, each in its own frame
  EmbeddingSpace x_tilde, y_tilde;  // before the final map
  EmbeddingSpace x_final, y_final;  // after it
  std::optional<EmbeddingSpace> x_direct, y_direct;  // direct offline baseline
};

// Loads the checkpoints of a pivot workdir. Without a monolingual target the
// Unaligned scheme falls back to the jointly trained target space.
inline AblationSpaces load_ablation_spaces(const std::string& workdir) {
  namespace fs = std::filesystem;
  const fs::path dir(workdir);
  auto need = [&](const char* name, Stage stage) { return load_embeddings(detail::require_checkpoint(dir, name, stage)); };
  auto x_mono = need(checkpoint::x_mono, Stage::stage1);
  auto x_tilde = need(checkpoint::x_tilde, Stage::stage1);
  auto y_tilde = need(checkpoint::y_tilde, Stage::stage2);
  auto x_final = need(checkpoint::x_final, Stage::stage3);
  auto y_final = need(checkpoint::y_final, Stage::stage3);
  const bool have_direct = fs::is_regular_file(dir / checkpoint::y_mono) && fs::is_regular_file(dir / checkpoint::x_direct);
  auto y_mono = have_direct ? load_embeddings((dir / checkpoint::y_mono).string()) : y_tilde;
  AblationSpaces s{std::move(x_mono), std::move(y_mono), std::move(x_tilde), std::move(y_tilde),
                   std::move(x_final), std::move(y_final), std::nullopt, std::nullopt};
  if (have_direct) {
    s.x_direct = load_embeddings((dir / checkpoint::x_direct).string());
    s.y_direct = s.y_mono;
  }
  return s;
}

struct SchemeReport {
  std::string run;  // label of the pivot run, for sweeps
  std::string scheme;
  BliReport bli;
  std::optional<double> delta;
};

struct AblationOptions {
  BliOptions bli;
  std::optional<EigsimOptions> eigsim;  // Δ per scheme when set
};

// Unaligned: raw x against raw y by plain cosine, coordinates taken at face
// value. Related-Aligned: X̃ against Ỹ. Full: after the final map. Direct:
// the one-step offline baseline, when present.
inline std::vector<SchemeReport> ablation_schemes(const AblationSpaces& s, const TokenPairs& gold,
                                                  const AblationOptions& opt = {}, const std::string& run = {}) {
  auto score = [&](const char* name, const EmbeddingSpace& a, const EmbeddingSpace& b, BliOptions bo) {
    // Frames are cleared on purpose: each scheme compares its pair as is.
    const auto src = with_frame(a, ""), tgt = with_frame(b, "");
    auto g = resolve_dictionary(gold, src.vocab, tgt.vocab);
    SchemeReport r{run, name, bli_precision(src, tgt, g.pairs, bo, g.coverage.skipped_source_words), std::nullopt};
    if (opt.eigsim) {
      EigsimOptions eo = *opt.eigsim;
      eo.n_words = std::min({eo.n_words, a.size(), b.size()});
      r.delta = eigenvalue_similarity(a, b, eo).delta;
    }
    return r;
  };
  BliOptions cosine = opt.bli;
  cosine.retrieval = Retrieval::nn;
  std::vector<SchemeReport> out;
  out.push_back(score("Unaligned", s.x_mono, s.y_mono, cosine));
  out.push_back(score("Related-Aligned", s.x_tilde, s.y_tilde, opt.bli));
  out.push_back(score("Full", s.x_final, s.y_final, opt.bli));
  if (s.x_direct && s.y_direct) out.push_back(score("Direct", *s.x_direct, *s.y_direct, opt.bli));
  return out;
}

inline TokenPairs read_token_pairs(const std::string& path) {
  auto in = detail::open_in(path);
  TokenPairs out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = detail::split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 2) throw DataError(at_line(path, lineno) + "expected 'src tgt'");
    out.emplace_back(std::string(f[0]), std::string(f[1]));
  }
  return out;
}

}  // namespace clwe
