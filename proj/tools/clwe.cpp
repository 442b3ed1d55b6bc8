// clwe: command-line front end for the cross-lingual embedding toolkit.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "clwe/clwe.hpp"

namespace fs = std::filesystem;
using namespace clwe;

namespace {

enum Exit { ok = 0, usage = 1, data = 2, warning = 3 };

struct Globals {
  std::string config;
  std::string workdir;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool quiet = false;
};

void info(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << "clwe: " << msg << '\n';
}

// Registers one --<key> flag per schema field and, after parsing, merges
// config file values with the flags that were actually given.
class Bound {
 public:
  Bound(CLI::App* sub, Schema schema) : sub_(sub), schema_(std::move(schema)) {
    for (const auto& f : schema_) {
      auto* opt = sub_->add_option("--" + f.key, given_[f.key], f.help)->type_name("VALUE");
      const auto def = f.get();
      if (def.empty())
        opt->description(f.help + " (default: none)");
      else
        opt->default_str(def);
      options_[f.key] = opt;
    }
  }

  void add_alias(const std::string& key, const std::string& alias) {
    auto* opt = sub_->add_option(alias, given_[key], "same as --" + key);
    aliases_.emplace_back(key, opt);
  }

  void apply(const Globals& g) {
    Settings s = g.config.empty() ? Settings() : Settings::load(g.config);
    for (const auto& [key, opt] : options_)
      if (opt->count() > 0) s.set(key, given_[key]);
    for (const auto& [key, opt] : aliases_)
      if (opt->count() > 0) s.set(key, given_[key]);
    clwe::apply(schema_, s);
    // Keys without a section belong to the globals; anything else there is a typo.
    for (const auto& [key, value] : s.values())
      if (key.find('.') == std::string::npos && key != "seed" && key != "workers")
        throw ConfigError("unknown setting '" + key + "'");
  }

 private:
  CLI::App* sub_;
  Schema schema_;
  std::map<std::string, std::string> given_;
  std::map<std::string, CLI::Option*> options_;
  std::vector<std::pair<std::string, CLI::Option*>> aliases_;
};

// seed and workers may also come from the config file; flags win.
void resolve_globals(Globals& g, const CLI::App& app) {
  if (g.config.empty()) return;
  const auto s = Settings::load(g.config);
  const auto& v = s.values();
  if (auto it = v.find("seed"); it != v.end() && app.get_option("--seed")->count() == 0) {
    std::size_t seed = 0;
    detail::parse_value("seed", it->second, seed);
    g.seed = seed;
  }
  if (auto it = v.find("workers"); it != v.end() && app.get_option("--workers")->count() == 0)
    detail::parse_value("workers", it->second, g.workers);
}

void write_loss(const TrainStats& stats, const std::string& path) {
  if (!path.empty()) detail::write_loss_csv(stats, path);
}

void log_loss(const Globals& g, const TrainStats& stats) {
  for (std::size_t e = 0; e < stats.epoch_loss.size(); ++e)
    info(g, "epoch " + std::to_string(e + 1) + " loss " + std::to_string(stats.epoch_loss[e]));
}

int finish(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "clwe: warning: " << w << '\n';
  return warnings.empty() ? ok : warning;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual word embeddings through a related pivot language"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "key=value settings file; flags override its values");
  app.add_option("--seed", g.seed, "seed for every random choice")->capture_default_str();
  app.add_option("--workers", g.workers, "training threads; 1 is deterministic")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--workdir", g.workdir, "checkpoint directory for pivot and ablate")->envname("CLWE_WORKDIR");
  app.add_flag("--quiet", g.quiet, "suppress progress logs");

  // train-mono
  TrainConfig mono_cfg;
  std::string mono_corpus, mono_out, mono_loss;
  auto* mono = app.add_subcommand("train-mono", "skip-gram with negative sampling on one corpus");
  mono->add_option("--corpus", mono_corpus, "one sentence per line")->required();
  mono->add_option("--out", mono_out, "output embeddings (word2vec text)")->required();
  mono->add_option("--loss-out", mono_loss, "per-epoch loss CSV (default: none)");
  Bound mono_bound(mono, train_fields(mono_cfg));

  // train-joint
  TrainConfig joint_cfg;
  std::string joint_a, joint_b, joint_out_a, joint_out_b, joint_init_a, joint_loss;
  auto* joint = app.add_subcommand("train-joint", "bilingual skip-gram on a sentence-aligned corpus");
  joint->add_option("--corpus-a", joint_a, "side A, one sentence per line")->required();
  joint->add_option("--corpus-b", joint_b, "side B, line-aligned with side A")->required();
  joint->add_option("--out-a", joint_out_a, "side A embeddings")->required();
  joint->add_option("--out-b", joint_out_b, "side B embeddings")->required();
  joint->add_option("--init-a", joint_init_a, "warm-start side A from these embeddings (default: none)");
  joint->add_option("--loss-out", joint_loss, "per-epoch loss CSV (default: none)");
  Bound joint_bound(joint, train_fields(joint_cfg));

  // map
  MapConfig map_cfg;
  std::string map_src, map_tgt, map_out, map_tgt_out, map_matrix_out, map_dict_out, map_trace_out, map_seed_dict;
  auto* map = app.add_subcommand("map", "unsupervised orthogonal map from one space into another");
  map->add_option("--src", map_src, "source embeddings")->required();
  map->add_option("--tgt", map_tgt, "target embeddings")->required();
  map->add_option("--out", map_out, "normalized source mapped into target coordinates")->required();
  map->add_option("--tgt-out", map_tgt_out, "normalized target (default: none)");
  map->add_option("--map-out", map_matrix_out, "the d x d map (default: none)");
  map->add_option("--dict-out", map_dict_out, "induced dictionary (default: none)");
  map->add_option("--trace-out", map_trace_out, "objective trace CSV (default: none)");
  map->add_option("--seed-dict", map_seed_dict, "start from this dictionary instead (default: none)");
  Bound map_bound(map, map_fields(map_cfg, "map."));

  // pivot
  PivotConfig pivot_cfg;
  auto* pivot = app.add_subcommand("pivot", "three-stage pivot pipeline with checkpoints in --workdir");
  Bound pivot_bound(pivot, pivot_fields(pivot_cfg));
  pivot_bound.add_alias("pivot.run_from", "--run-from");
  pivot_bound.add_alias("pivot.run_to", "--run-to");

  // eval-bli
  BliOptions bli_opt;
  std::string bli_src, bli_tgt, bli_gold, bli_out, bli_table_out;
  auto* bli = app.add_subcommand("eval-bli", "precision at 1/5/10 against a gold dictionary");
  bli->add_option("--src", bli_src, "aligned source embeddings")->required();
  bli->add_option("--tgt", bli_tgt, "aligned target embeddings")->required();
  bli->add_option("--gold", bli_gold, "gold dictionary, one 'src tgt' pair per line")->required();
  bli->add_option("--out", bli_out, "CSV report")->required();
  bli->add_option("--table-out", bli_table_out, "plain-text table (default: none)");
  Bound bli_bound(bli, bli_fields(bli_opt));

  // eval-eigsim
  EigsimOptions eig_opt;
  std::string eig_src, eig_tgt, eig_out, eig_spectra, eig_table_out, eig_svg;
  auto* eig = app.add_subcommand("eval-eigsim", "eigenvalue similarity of nearest-neighbour graphs");
  eig->add_option("--src", eig_src, "first embeddings")->required();
  eig->add_option("--tgt", eig_tgt, "second embeddings")->required();
  eig->add_option("--out", eig_out, "CSV report")->required();
  eig->add_option("--spectra-out", eig_spectra, "both spectra as CSV (default: none)");
  eig->add_option("--table-out", eig_table_out, "plain-text table (default: none)");
  eig->add_option("--svg-out", eig_svg, "spectra plot (default: none)");
  Bound eig_bound(eig, eigsim_fields(eig_opt));

  // ablate
  BliOptions abl_bli;
  EigsimOptions abl_eig;
  std::string abl_gold, abl_out, abl_table_out, abl_svg;
  std::vector<std::string> abl_runs;
  bool abl_delta = false;
  auto* abl = app.add_subcommand("ablate", "Unaligned, Related-Aligned and Full schemes of pivot runs");
  abl->add_option("--gold", abl_gold, "source-target gold dictionary")->required();
  abl->add_option("--out", abl_out, "CSV report")->required();
  abl->add_option("--runs", abl_runs, "pivot workdirs to compare (default: --workdir)");
  abl->add_option("--table-out", abl_table_out, "plain-text table (default: none)");
  abl->add_option("--svg-out", abl_svg, "P@1 bar chart (default: none)");
  abl->add_flag("--with-delta", abl_delta, "also report eigenvalue similarity per scheme");
  Bound abl_bound(abl, [&] {
    auto s = bli_fields(abl_bli);
    for (auto& f : eigsim_fields(abl_eig)) s.push_back(std::move(f));
    return s;
  }());

  // synth
  SynthSpec spec;
  std::string synth_dir;
  auto* synth = app.add_subcommand("synth", "synthetic x/z/y triple: corpora, gold dictionaries, embeddings");
  synth->add_option("--out-dir", synth_dir, "output directory")->required();
  synth->add_option("--spec", g.config, "alias of --config");
  Bound synth_bound(synth, synth_fields(spec));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : usage;
  }

  try {
    resolve_globals(g, app);

    if (*mono) {
      mono_bound.apply(g);
      mono_cfg.seed = g.seed;
      mono_cfg.workers = g.workers;
      const auto corpus = read_corpus(mono_corpus);
      info(g, "train-mono: " + std::to_string(corpus.size()) + " sentences");
      const auto r = train_monolingual(corpus, mono_cfg);
      log_loss(g, r.stats);
      save_embeddings(r.space, mono_out);
      write_loss(r.stats, mono_loss);
      return ok;
    }

    if (*joint) {
      joint_bound.apply(g);
      joint_cfg.seed = g.seed;
      joint_cfg.workers = g.workers;
      const auto pc = load_parallel_corpus(joint_a, joint_b, joint_cfg.min_count);
      info(g, "train-joint: " + std::to_string(pc.pairs.size()) + " sentence pairs");
      std::optional<EmbeddingSpace> init;
      if (!joint_init_a.empty()) init = load_embeddings(joint_init_a);
      JointInit ji;
      ji.a = init ? &*init : nullptr;
      const auto r = train_joint(pc, joint_cfg, ji);
      log_loss(g, r.stats);
      save_embeddings(r.a, joint_out_a);
      save_embeddings(r.b, joint_out_b);
      write_loss(r.stats, joint_loss);
      return ok;
    }

    if (*map) {
      map_bound.apply(g);
      map_cfg.seed = g.seed;
      const auto x = normalize_chain(load_embeddings(map_src));
      const auto y = normalize_chain(load_embeddings(map_tgt));
      const auto result = map_seed_dict.empty()
                              ? self_learn(x, y, map_cfg)
                              : self_learn(x, y, map_cfg,
                                           load_dictionary(map_seed_dict, x.vocab, y.vocab, OovPolicy::skip).pairs);
      info(g, "map: " + std::to_string(result.iterations) + " iterations, objective " +
                  std::to_string(result.best_objective));
      save_embeddings(apply_map(x, result.map), map_out);
      if (!map_tgt_out.empty()) save_embeddings(y, map_tgt_out);
      if (!map_matrix_out.empty()) save_map(result.map, map_matrix_out);
      if (!map_dict_out.empty()) save_dictionary(result.dictionary, map_dict_out);
      if (!map_trace_out.empty()) write_trace_csv(result.trace, map_trace_out);
      std::vector<std::string> warnings;
      if (!result.converged) warnings.push_back(detail::not_converged("map", map_cfg));
      return finish(warnings);
    }

    if (*pivot) {
      pivot_bound.apply(g);
      pivot_cfg.set_seed(g.seed);
      pivot_cfg.train.workers = g.workers;
      pivot_cfg.workdir = g.workdir;
      const auto res = run_pivot(pivot_cfg, g.quiet ? nullptr : &std::cerr);
      info(g, "pivot: config hash " + res.config_hash);
      for (const auto& [stage, prov] : res.provenance)
        if (const auto* sec = prov.find("seconds")) info(g, stage + " took " + *sec + " s");
      return res.warnings.empty() ? ok : warning;
    }

    if (*bli) {
      bli_bound.apply(g);
      const auto rep = bli_precision(load_embeddings(bli_src), load_embeddings(bli_tgt), bli_gold, bli_opt);
      std::cerr << bli_table(rep);
      detail::write_text(bli_csv(rep), bli_out);
      if (!bli_table_out.empty()) detail::write_text(bli_table(rep), bli_table_out);
      return ok;
    }

    if (*eig) {
      eig_bound.apply(g);
      const auto rep = eigenvalue_similarity(load_embeddings(eig_src), load_embeddings(eig_tgt), eig_opt);
      std::cerr << eigsim_table(rep);
      detail::write_text(eigsim_csv(rep), eig_out);
      if (!eig_spectra.empty()) detail::write_text(spectra_csv(rep), eig_spectra);
      if (!eig_table_out.empty()) detail::write_text(eigsim_table(rep), eig_table_out);
      if (!eig_svg.empty()) detail::write_text(spectra_svg(rep), eig_svg);
      return ok;
    }

    if (*abl) {
      abl_bound.apply(g);
      if (abl_runs.empty()) {
        if (g.workdir.empty()) throw ConfigError("ablate: give --runs or --workdir");
        abl_runs.push_back(g.workdir);
      }
      AblationOptions opt;
      opt.bli = abl_bli;
      if (abl_delta) opt.eigsim = abl_eig;
      const auto gold = read_token_pairs(abl_gold);
      std::vector<SchemeReport> rows;
      for (const auto& run : abl_runs) {
        const auto label = abl_runs.size() > 1 ? fs::path(run).filename().string() : std::string();
        for (auto& r : ablation_schemes(load_ablation_spaces(run), gold, opt, label)) rows.push_back(std::move(r));
      }
      std::cerr << ablation_table(rows);
      detail::write_text(ablation_csv(rows), abl_out);
      if (!abl_table_out.empty()) detail::write_text(ablation_table(rows), abl_table_out);
      if (!abl_svg.empty()) detail::write_text(ablation_svg(rows), abl_svg);
      return ok;
    }

    if (*synth) {
      synth_bound.apply(g);
      spec.seed = g.seed;
      spec.validate();
      const fs::path dir = fs::absolute(synth_dir);
      fs::create_directories(dir);
      info(g, "synth: generating corpora and training x");
      const auto t = synth_triple(spec, g.workers);
      const auto& c = t.corpora;
      write_corpus(c.mono_x, (dir / "mono.x").string());
      write_corpus(c.mono_z, (dir / "mono.z").string());
      write_corpus(c.parallel_z, (dir / "parallel.z").string());
      write_corpus(c.parallel_y, (dir / "parallel.y").string());
      write_gold(c.gold_xy, (dir / "gold_xy.txt").string());
      write_gold(c.gold_xz, (dir / "gold_xz.txt").string());
      write_gold(c.gold_zy, (dir / "gold_zy.txt").string());
      save_embeddings(t.x, (dir / "x.vec").string());
      save_embeddings(t.z, (dir / "z.vec").string());
      save_embeddings(t.y_mono, (dir / "y_mono.vec").string());
      auto train = spec.training();
      std::string cfg = "# synthetic triple\n";
      cfg += "pivot.source=" + (dir / "x.vec").string() + "\n";
      cfg += "pivot.related=" + (dir / "z.vec").string() + "\n";
      cfg += "pivot.parallel_related=" + (dir / "parallel.z").string() + "\n";
      cfg += "pivot.parallel_target=" + (dir / "parallel.y").string() + "\n";
      cfg += "pivot.target=" + (dir / "y_mono.vec").string() + "\n";
      for (const auto& f : train_fields(train)) cfg += f.key + "=" + f.get() + "\n";
      detail::write_text(cfg, (dir / "triple.cfg").string());
      info(g, "synth: wrote " + dir.string());
      return ok;
    }
  } catch (const ConfigError& e) {
    std::cerr << "clwe: config error: " << e.what() << '\n';
    return usage;
  } catch (const DataError& e) {
    std::cerr << "clwe: data error: " << e.what() << '\n';
    return data;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "clwe: data error: " << e.what() << '\n';
    return data;
  }
  return usage;
}
