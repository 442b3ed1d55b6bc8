#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "clwe/config.hpp"
#include "clwe/io.hpp"
#include "clwe/mapper.hpp"
#include "clwe/trainer.hpp"

namespace clwe {

// Coordinate frames of the pivot pipeline. A Framed<F> space is stamped with
// F's name, so stage signatures reject spaces from the wrong frame at
// compile time.
namespace frame {
struct Source {
  static constexpr const char* name = "source";
};
struct Target {
  static constexpr const char* name = "target";
};
struct ZMono {
  static constexpr const char* name = "z-mono";
};
struct ZJoint {
  static constexpr const char* name = "z-joint";
};
struct Final {
  static constexpr const char* name = "final";
};
}  // namespace frame

template <class F>
class Framed {
 public:
  using frame_type = F;
  explicit Framed(EmbeddingSpace s) : space_(with_frame(std::move(s), F::name)) {}
  const EmbeddingSpace& space() const { return space_; }
  const EmbeddingSpace* operator->() const { return &space_; }

 private:
  EmbeddingSpace space_;
};

enum class Stage { stage1 = 1, stage2 = 2, stage3 = 3 };

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::stage1: return "stage1";
    case Stage::stage2: return "stage2";
    default: return "stage3";
  }
}

struct PivotConfig {
  std::string source_embeddings;   // x, pretrained
  std::string related_embeddings;  // z, pretrained
  std::string parallel_related;    // z side of the z-y corpus
  std::string parallel_target;     // y side
  std::string target_embeddings;   // optional monolingual y: direct baseline and the Unaligned scheme
  TrainConfig train;
  MapConfig stage1, stage3;
  bool warm_start = true;  // initialize the joint z vectors from the monolingual z space
  bool z_anchored_seed = false;
  std::string workdir;
  Stage run_from = Stage::stage1, run_to = Stage::stage3;

  PivotConfig() { stage3.seed_mode = SeedMode::best; }

  void set_seed(std::uint64_t s) { train.seed = stage1.seed = stage3.seed = s; }

  bool needs(Stage s) const { return run_from <= s && s <= run_to; }

  void validate() const {
    if (run_from > run_to) throw ConfigError("pivot.run_from must not come after pivot.run_to");
    if (workdir.empty()) throw ConfigError("pivot: no workdir given");
    train.validate();
    stage1.validate();
    stage3.validate();
    auto need_file = [](const std::string& key, const std::string& path) {
      if (path.empty()) throw ConfigError(key + " is required");
      if (!std::filesystem::is_regular_file(path)) throw ConfigError(key + ": file not found: " + path);
    };
    auto need_dim = [&](const std::string& key, const std::string& path) {
      need_file(key, path);
      const auto d = read_embedding_header(path).second;
      if (d != train.dim)
        throw ConfigError(key + " has dimension " + std::to_string(d) + " but train.dim is " +
                          std::to_string(train.dim) + "; the joint stage must match the pretrained dimension");
    };
    if (needs(Stage::stage1)) {
      need_dim("pivot.source", source_embeddings);
      need_dim("pivot.related", related_embeddings);
    }
    if (needs(Stage::stage2)) {
      need_file("pivot.parallel_related", parallel_related);
      need_file("pivot.parallel_target", parallel_target);
      if (warm_start) need_dim("pivot.related", related_embeddings);
    }
    if (needs(Stage::stage3) && !target_embeddings.empty()) need_dim("pivot.target", target_embeddings);
  }
};

inline Schema pivot_fields(PivotConfig& c) {
  using detail::choice;
  using detail::scalar;
  using detail::text;
  const std::vector<std::pair<std::string, Stage>> stages{
      {"stage1", Stage::stage1}, {"stage2", Stage::stage2}, {"stage3", Stage::stage3}};
  Schema s{
      text("pivot.source", "source-language embeddings (word2vec text)", c.source_embeddings),
      text("pivot.related", "related-language embeddings", c.related_embeddings),
      text("pivot.parallel_related", "related side of the parallel corpus", c.parallel_related),
      text("pivot.parallel_target", "target side of the parallel corpus", c.parallel_target),
      text("pivot.target", "optional monolingual target embeddings for the direct baseline", c.target_embeddings),
      scalar("pivot.warm_start", "start joint related vectors from the related embeddings", c.warm_start),
      scalar("pivot.z_anchored_seed", "seed the final map through the related language (extension)",
             c.z_anchored_seed),
      choice("pivot.run_from", "first stage to run", c.run_from, stages),
      choice("pivot.run_to", "last stage to run", c.run_to, stages),
  };
  for (auto& f : train_fields(c.train)) s.push_back(std::move(f));
  for (auto& f : map_fields(c.stage1, "stage1.")) s.push_back(std::move(f));
  for (auto& f : map_fields(c.stage3, "stage3.")) s.push_back(std::move(f));
  return s;
}

// Hash of everything that determines results: stage control and the workdir
// are excluded so a resumed run shares the hash of the fresh one.
inline std::string config_hash(const PivotConfig& cfg) {
  PivotConfig c = cfg;
  std::string text;
  for (const auto& f : pivot_fields(c))
    if (f.key != "pivot.run_from" && f.key != "pivot.run_to") text += f.key + "=" + f.get() + "\n";
  text += "seed=" + std::to_string(c.train.seed) + "\nworkers=" + std::to_string(c.train.workers) + "\n";
  return hex64(fnv1a64(text));
}

// Stage outputs.

struct Stage1Result {
  Framed<frame::Source> x;  // chain-normalized source
  Framed<frame::ZMono> z;   // chain-normalized related
  Framed<frame::ZMono> x_tilde;
  SelfLearnResult learn;
};

inline Stage1Result stage1_align_source_to_related(const EmbeddingSpace& x, const EmbeddingSpace& z,
                                                   const MapConfig& cfg) {
  Framed<frame::Source> xn(normalize_chain(x));
  Framed<frame::ZMono> zn(normalize_chain(z));
  auto learn = self_learn(xn.space(), zn.space(), cfg);
  Framed<frame::ZMono> x_tilde(apply_map(xn.space(), learn.map));
  return {std::move(xn), std::move(zn), std::move(x_tilde), std::move(learn)};
}

struct Stage2Result {
  Framed<frame::ZJoint> z_joint, y_tilde;
  TrainStats stats;
};

// Joint skip-gram on the related-target corpus. With `warm_z`, related words
// start from their monolingual vectors, so the joint frame stays close to
// the monolingual related frame.
inline Stage2Result stage2_joint_related_target(const ParallelCorpus& pc, const TrainConfig& cfg,
                                                const EmbeddingSpace* warm_z = nullptr) {
  JointInit init;
  init.a = warm_z;
  auto trained = train_joint(pc, cfg, init);
  return {Framed<frame::ZJoint>(normalize_chain(std::move(trained.a))),
          Framed<frame::ZJoint>(normalize_chain(std::move(trained.b))), std::move(trained.stats)};
}

struct Stage3Result {
  Framed<frame::Final> x_final, y_final;
  SelfLearnResult learn;
};

inline Stage3Result stage3_final_map(const Framed<frame::ZMono>& x_tilde, const Framed<frame::ZJoint>& y_tilde,
                                     const MapConfig& cfg, std::optional<DictionaryPairs> seed = std::nullopt) {
  if (x_tilde->dim() != y_tilde->dim())
    throw ConfigError("stage3: aligned source has dimension " + std::to_string(x_tilde->dim()) +
                      " but aligned target has " + std::to_string(y_tilde->dim()));
  auto learn = seed ? self_learn(x_tilde.space(), y_tilde.space(), cfg, std::move(*seed))
                    : self_learn(x_tilde.space(), y_tilde.space(), cfg);
  Framed<frame::Final> xf(apply_map(x_tilde.space(), learn.map));
  Framed<frame::Final> yf(y_tilde.space());
  return {std::move(xf), std::move(yf), std::move(learn)};
}

// Extension seed for stage 3: each stage-1 pair (x, z) is carried to the
// joint frame by token identity of z, and z is translated to the target by
// retrieval in the joint space.
inline DictionaryPairs z_anchored_seed(const Framed<frame::ZMono>& x_tilde, const DictionaryPairs& stage1_pairs,
                                       const Framed<frame::ZJoint>& z_joint, const Framed<frame::ZJoint>& y_tilde,
                                       const MapConfig& cfg) {
  std::vector<WordId> queries;
  std::vector<WordId> sources;
  for (auto [s, t] : stage1_pairs.pairs())
    if (auto j = z_joint->vocab->find(stage1_pairs.target_vocab()->token(t))) {
      sources.push_back(s);
      queries.push_back(*j);
    }
  DictionaryPairs seed(x_tilde->vocab, y_tilde->vocab);
  if (queries.empty()) throw DataError("z-anchored seed: no stage-1 pair reaches the joint vocabulary");
  const auto k = std::min<std::size_t>(cfg.csls_k, y_tilde->size());
  const auto hits = cfg.retrieval == Retrieval::csls
                        ? csls_knn(z_joint->matrix, y_tilde->matrix, k, queries, 1)
                        : cosine_knn(z_joint->matrix, y_tilde->matrix, queries, 1);
  for (std::size_t i = 0; i < queries.size(); ++i) seed.add(sources[i], hits[i].front());
  return seed;
}

struct DirectResult {
  Framed<frame::Source> x;
  Framed<frame::Target> y;
  Framed<frame::Final> x_mapped, y_final;
  SelfLearnResult learn;
};

// Baseline: one unsupervised offline map straight from x to monolingual y.
inline DirectResult direct_offline(const EmbeddingSpace& x, const EmbeddingSpace& y, const MapConfig& cfg) {
  Framed<frame::Source> xn(normalize_chain(x));
  Framed<frame::Target> yn(normalize_chain(y));
  auto learn = self_learn(xn.space(), yn.space(), cfg);
  Framed<frame::Final> xm(apply_map(xn.space(), learn.map));
  Framed<frame::Final> yf(yn.space());
  return {std::move(xn), std::move(yn), std::move(xm), std::move(yf), std::move(learn)};
}

// Checkpoint layout inside the workdir.
namespace checkpoint {
inline constexpr const char* x_mono = "x_mono.vec";
inline constexpr const char* z_mono = "z_mono.vec";
inline constexpr const char* x_tilde = "x_tilde.vec";
inline constexpr const char* stage1_map = "stage1.map";
inline constexpr const char* stage1_dict = "stage1.dict";
inline constexpr const char* stage1_trace = "stage1.trace.csv";
inline constexpr const char* z_joint = "z_joint.vec";
inline constexpr const char* y_tilde = "y_tilde.vec";
inline constexpr const char* stage2_loss = "stage2.loss.csv";
inline constexpr const char* x_final = "x_final.vec";
inline constexpr const char* y_final = "y_final.vec";
inline constexpr const char* stage3_map = "stage3.map";
inline constexpr const char* stage3_dict = "stage3.dict";
inline constexpr const char* stage3_trace = "stage3.trace.csv";
inline constexpr const char* y_mono = "y_mono.vec";
inline constexpr const char* x_direct = "x_direct.vec";
inline constexpr const char* direct_map = "direct.map";
inline constexpr const char* direct_trace = "direct.trace.csv";
inline constexpr const char* lock = ".lock";

inline std::string sidecar(const std::string& stage) { return stage + ".prov"; }
}  // namespace checkpoint

// Line-oriented provenance: "key value" per line.
struct Provenance {
  std::vector<std::pair<std::string, std::string>> entries;

  void add(std::string key, std::string value) { entries.emplace_back(std::move(key), std::move(value)); }
  void add(std::string key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    add(std::move(key), std::string(buf));
  }
  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }

  void save(const std::string& path) const {
    auto out = detail::open_out(path);
    for (const auto& [k, v] : entries) out << k << ' ' << v << '\n';
    if (!out) throw DataError(path + ": write failed");
  }

  static Provenance load(const std::string& path) {
    auto in = detail::open_in(path);
    Provenance p;
    std::string line;
    while (std::getline(in, line)) {
      const auto sp = line.find(' ');
      if (sp == std::string::npos)
        p.add(line, std::string());
      else
        p.add(line.substr(0, sp), line.substr(sp + 1));
    }
    return p;
  }
};

struct PivotResult {
  std::optional<Framed<frame::ZMono>> x_tilde, z_mono;
  std::optional<Framed<frame::ZJoint>> z_joint, y_tilde;
  std::optional<Framed<frame::Final>> x_final, y_final;
  std::optional<OrthogonalMap> stage1_map, final_map;
  std::string config_hash;
  std::vector<std::pair<std::string, Provenance>> provenance;  // per stage, in order
  std::vector<std::string> warnings;                          // non-convergence notices
};

// Single-flight guard: exclusive creation of the lock file.
class WorkdirLock {
 public:
  explicit WorkdirLock(const std::filesystem::path& dir) : path_(dir / checkpoint::lock) {
    std::filesystem::create_directories(dir);
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f)
      throw DataError(path_.string() + ": workdir is locked by another run (remove the file if that run is gone)");
    std::fclose(f);
  }
  WorkdirLock(const WorkdirLock&) = delete;
  WorkdirLock& operator=(const WorkdirLock&) = delete;
  ~WorkdirLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }

 private:
  std::filesystem::path path_;
};

namespace detail {

// Writes through a temporary name so an interrupted stage never leaves a
// truncated checkpoint behind.
template <class Write>
void commit(const std::filesystem::path& path, Write&& write) {
  const auto tmp = path.string() + ".tmp";
  write(tmp);
  std::filesystem::rename(tmp, path);
}

inline void save_space(const EmbeddingSpace& s, const std::filesystem::path& p) {
  commit(p, [&](const std::string& t) { save_embeddings(s, t); });
}

inline std::string require_checkpoint(const std::filesystem::path& dir, const char* name, Stage stage) {
  const auto p = dir / name;
  if (!std::filesystem::is_regular_file(p))
    throw DataError(std::string(to_string(stage)) + " checkpoint missing: " + p.string());
  return p.string();
}

inline void write_loss_csv(const TrainStats& stats, const std::string& path) {
  auto out = open_out(path);
  out << "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < stats.epoch_loss.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", e + 1, stats.epoch_loss[e]);
    out << buf;
  }
  if (!out) throw DataError(path + ": write failed");
}

inline void summarize(Provenance& p, const SelfLearnResult& r) {
  p.add("iterations", std::to_string(r.iterations));
  p.add("converged", r.converged ? "true" : "false");
  p.add("best_objective", r.best_objective);
  p.add("dict_size", std::to_string(r.dictionary.size()));
}

inline std::string not_converged(const char* stage, const MapConfig& cfg) {
  return std::string(stage) + ": self-learning hit max_iters " + std::to_string(cfg.max_iters) +
         " without converging; the best state was kept";
}

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

// Runs stages run_from..run_to. Each stage writes its checkpoints and
// sidecar, and later stages always continue from the reloaded checkpoints,
// so a resumed run reproduces a fresh one exactly.
inline PivotResult run_pivot(const PivotConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  namespace fs = std::filesystem;
  const fs::path dir(cfg.workdir);
  WorkdirLock lock(dir);
  PivotResult res;
  res.config_hash = config_hash(cfg);
  auto say = [&](const std::string& msg) {
    if (log) *log << "[pivot] " << msg << '\n' << std::flush;
  };
  auto sidecar = [&](Stage st, const detail::Clock& clock) {
    Provenance p;
    p.add("config_hash", res.config_hash);
    p.add("stage", to_string(st));
    p.add("seed", std::to_string(cfg.train.seed));
    p.add("seconds", clock.seconds());
    return p;
  };
  auto load_prov = [&](Stage st) {
    const auto p = dir / checkpoint::sidecar(to_string(st));
    if (fs::is_regular_file(p)) res.provenance.emplace_back(to_string(st), Provenance::load(p.string()));
  };

  if (cfg.needs(Stage::stage1)) {
    say("stage1: aligning source to related language");
    detail::Clock clock;
    auto s1 = stage1_align_source_to_related(load_embeddings(cfg.source_embeddings),
                                             load_embeddings(cfg.related_embeddings), cfg.stage1);
    detail::save_space(s1.x.space(), dir / checkpoint::x_mono);
    detail::save_space(s1.z.space(), dir / checkpoint::z_mono);
    detail::save_space(s1.x_tilde.space(), dir / checkpoint::x_tilde);
    detail::commit(dir / checkpoint::stage1_map, [&](const std::string& t) { save_map(s1.learn.map, t); });
    detail::commit(dir / checkpoint::stage1_dict, [&](const std::string& t) { save_dictionary(s1.learn.dictionary, t); });
    detail::commit(dir / checkpoint::stage1_trace, [&](const std::string& t) { write_trace_csv(s1.learn.trace, t); });
    if (!s1.learn.converged) res.warnings.push_back(detail::not_converged("stage1", cfg.stage1));
    auto p = sidecar(Stage::stage1, clock);
    detail::summarize(p, s1.learn);
    p.save((dir / checkpoint::sidecar("stage1")).string());
    res.provenance.emplace_back("stage1", std::move(p));
    say("stage1: " + std::to_string(s1.learn.iterations) + " iterations, objective " +
        std::to_string(s1.learn.best_objective) + ", " + std::to_string(clock.seconds()) + " s");
  } else if (cfg.run_from > Stage::stage1) {
    load_prov(Stage::stage1);
  }
  {
    res.x_tilde.emplace(load_embeddings(detail::require_checkpoint(dir, checkpoint::x_tilde, Stage::stage1)));
    res.z_mono.emplace(load_embeddings(detail::require_checkpoint(dir, checkpoint::z_mono, Stage::stage1)));
    res.stage1_map.emplace(load_map(detail::require_checkpoint(dir, checkpoint::stage1_map, Stage::stage1),
                                    frame::Source::name, frame::ZMono::name));
  }

  if (cfg.needs(Stage::stage2)) {
    say("stage2: joint training on the related-target corpus");
    detail::Clock clock;
    const auto pc = load_parallel_corpus(cfg.parallel_related, cfg.parallel_target, cfg.train.min_count);
    std::optional<EmbeddingSpace> warm;
    if (cfg.warm_start) warm = load_embeddings(cfg.related_embeddings);
    auto s2 = stage2_joint_related_target(pc, cfg.train, warm ? &*warm : nullptr);
    detail::save_space(s2.z_joint.space(), dir / checkpoint::z_joint);
    detail::save_space(s2.y_tilde.space(), dir / checkpoint::y_tilde);
    detail::commit(dir / checkpoint::stage2_loss, [&](const std::string& t) { detail::write_loss_csv(s2.stats, t); });
    auto p = sidecar(Stage::stage2, clock);
    p.add("pairs", std::to_string(pc.pairs.size()));
    p.add("first_epoch_loss", s2.stats.epoch_loss.front());
    p.add("last_epoch_loss", s2.stats.epoch_loss.back());
    p.save((dir / checkpoint::sidecar("stage2")).string());
    res.provenance.emplace_back("stage2", std::move(p));
    say("stage2: loss " + std::to_string(s2.stats.epoch_loss.front()) + " -> " +
        std::to_string(s2.stats.epoch_loss.back()) + ", " + std::to_string(clock.seconds()) + " s");
  } else if (cfg.run_from > Stage::stage2) {
    load_prov(Stage::stage2);
  }
  if (cfg.run_to >= Stage::stage2) {
    res.z_joint.emplace(load_embeddings(detail::require_checkpoint(dir, checkpoint::z_joint, Stage::stage2)));
    res.y_tilde.emplace(load_embeddings(detail::require_checkpoint(dir, checkpoint::y_tilde, Stage::stage2)));
  }

  if (cfg.needs(Stage::stage3)) {
    say("stage3: final unsupervised map");
    detail::Clock clock;
    std::optional<DictionaryPairs> seed;
    if (cfg.z_anchored_seed) {
      auto s1_pairs = load_dictionary(detail::require_checkpoint(dir, checkpoint::stage1_dict, Stage::stage1),
                                      (*res.x_tilde)->vocab, (*res.z_mono)->vocab, OovPolicy::error);
      seed = z_anchored_seed(*res.x_tilde, s1_pairs.pairs, *res.z_joint, *res.y_tilde, cfg.stage3);
    }
    auto s3 = stage3_final_map(*res.x_tilde, *res.y_tilde, cfg.stage3, std::move(seed));
    detail::save_space(s3.x_final.space(), dir / checkpoint::x_final);
    detail::save_space(s3.y_final.space(), dir / checkpoint::y_final);
    detail::commit(dir / checkpoint::stage3_map, [&](const std::string& t) { save_map(s3.learn.map, t); });
    detail::commit(dir / checkpoint::stage3_dict, [&](const std::string& t) { save_dictionary(s3.learn.dictionary, t); });
    detail::commit(dir / checkpoint::stage3_trace, [&](const std::string& t) { write_trace_csv(s3.learn.trace, t); });
    if (!s3.learn.converged) res.warnings.push_back(detail::not_converged("stage3", cfg.stage3));
    std::optional<SelfLearnResult> direct_learn;
    if (!cfg.target_embeddings.empty()) {
      say("stage3: direct offline baseline");
      auto direct = direct_offline(load_embeddings(cfg.source_embeddings), load_embeddings(cfg.target_embeddings),
                                   cfg.stage1);
      detail::save_space(direct.y.space(), dir / checkpoint::y_mono);
      detail::save_space(direct.x_mapped.space(), dir / checkpoint::x_direct);
      detail::commit(dir / checkpoint::direct_map, [&](const std::string& t) { save_map(direct.learn.map, t); });
      detail::commit(dir / checkpoint::direct_trace,
                     [&](const std::string& t) { write_trace_csv(direct.learn.trace, t); });
      if (!direct.learn.converged) res.warnings.push_back(detail::not_converged("direct baseline", cfg.stage1));
      direct_learn = std::move(direct.learn);
    }
    auto p = sidecar(Stage::stage3, clock);
    detail::summarize(p, s3.learn);
    if (direct_learn) {
      p.add("direct_iterations", std::to_string(direct_learn->iterations));
      p.add("direct_best_objective", direct_learn->best_objective);
    }
    p.save((dir / checkpoint::sidecar("stage3")).string());
    res.provenance.emplace_back("stage3", std::move(p));
    say("stage3: " + std::to_string(s3.learn.iterations) + " iterations, objective " +
        std::to_string(s3.learn.best_objective) + ", " + std::to_string(clock.seconds()) + " s");
  }
  if (cfg.run_to >= Stage::stage3) {
    res.x_final.emplace(load_embeddings(detail::require_checkpoint(dir, checkpoint::x_final, Stage::stage3)));
    res.y_final.emplace(load_embeddings(detail::require_checkpoint(dir, checkpoint::y_final, Stage::stage3)));
    res.final_map.emplace(load_map(detail::require_checkpoint(dir, checkpoint::stage3_map, Stage::stage3),
                                   frame::ZMono::name, frame::ZJoint::name));
  }
  for (const auto& w : res.warnings) say("warning: " + w);
  return res;
}

}  // namespace clwe
