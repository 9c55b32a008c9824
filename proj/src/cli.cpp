#include "zpj/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <sstream>

#include "zpj/annotator.hpp"
#include "zpj/error.hpp"
#include "zpj/synth.hpp"
#include "zpj/trainer.hpp"

namespace zpj {

namespace fs = std::filesystem;

namespace {

struct Options {
  int threads = 1;
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;

  // gen-corpus, train, ablation
  std::string out_dir, train_dir, valid_dir, test_dir, corpus_dir, pronouns;
  std::optional<int> epochs;
  bool extra_rows = false;

  // annotate
  std::string src, tgt, align, lm, out_labels;
  bool train_aligner = false, train_lm = false;
  int ibm_iterations = 10;

  // translate, label, describe
  std::string model, out;
  int beam = 4;
  double max_ratio = 2.0;
  double rescore_beta = 0.0;
  std::string emit_labels;

  // eval
  std::string hyp, ref, pred, gold, a, b;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw FormatError("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw FormatError("cannot write " + p.string());
  out << text;
}

// flags > --set > config file > defaults
KeyValues resolve(const Options& o) {
  KeyValues kv;
  if (!o.config.empty()) kv = KeyValues::load(o.config);
  for (auto& s : o.sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ContractError("--set expects key=value, got '" + s + "'");
    kv.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.seed) kv.set("seed", std::to_string(*o.seed));
  return kv;
}

void log_config(std::ostream& err, const std::string& command, const KeyValues& kv) {
  err << "[zpj] " << command << " config_hash=" << hex64(kv.hash()) << '\n';
  std::istringstream lines(kv.str());
  for (std::string line; std::getline(lines, line);) err << "[zpj]   " << line << '\n';
}

// Written next to every artifact: tool version and resolved config hash.
void write_sidecar(const fs::path& artifact, const std::string& command, const KeyValues& kv) {
  std::ostringstream os;
  os << "version=" << kVersion << "\ncommand=" << command << "\nconfig_hash=" << hex64(kv.hash())
     << '\n';
  write_text(artifact.string() + ".meta", os.str());
}

std::vector<Sentence> flat(const std::vector<std::vector<Sentence>>& docs) {
  std::vector<Sentence> out;
  for (auto& d : docs) out.insert(out.end(), d.begin(), d.end());
  return out;
}

// Re-splits a flat list of lines along the document structure of `shape`.
std::vector<std::vector<Sentence>> like(const std::vector<std::vector<Sentence>>& shape,
                                        const std::vector<Sentence>& lines) {
  std::vector<std::vector<Sentence>> out;
  std::size_t i = 0;
  for (auto& d : shape) {
    out.emplace_back(lines.begin() + i, lines.begin() + i + d.size());
    i += d.size();
  }
  return out;
}

std::string kv_line(const std::string& k, double v) {
  return k + "=" + format_double(v) + "\n";
}

PronounVocab pronouns_for(const Options& o, const fs::path& split_dir) {
  if (!o.pronouns.empty()) return PronounVocab::load(o.pronouns);
  fs::path guess = split_dir.parent_path() / "pronouns.txt";
  if (fs::exists(guess)) return PronounVocab::load(guess);
  throw ContractError("no pronoun file: pass --pronouns or place pronouns.txt next to the split");
}

int cmd_gen_corpus(const Options& o, std::ostream& out, std::ostream& err) {
  KeyValues kv = resolve(o);
  GenConfig cfg = GenConfig::from(kv);
  cfg.validate();
  log_config(err, "gen-corpus", cfg.to_kv());
  write_corpus(o.out_dir, cfg);
  write_sidecar(fs::path(o.out_dir) / "corpus", "gen-corpus", cfg.to_kv());
  out << read_text(fs::path(o.out_dir) / "train" / "stats.txt");
  return 0;
}

int cmd_annotate(const Options& o, std::ostream& out, std::ostream& err) {
  KeyValues kv = resolve(o);
  kv.set("src", o.src);
  kv.set("tgt", o.tgt);
  kv.set("aligner", o.train_aligner ? "ibm1:" + std::to_string(o.ibm_iterations) : o.align);
  kv.set("lm", o.train_lm ? "trained-on-src" : o.lm);
  log_config(err, "annotate", kv);
  PronounVocab pv = PronounVocab::load(o.pronouns);
  auto docs = load_documents(o.src, o.tgt, std::nullopt, &pv,
                             o.train_aligner ? std::nullopt : std::optional<fs::path>(o.align));
  NGramLM lm;
  if (o.train_lm) {
    lm = NGramLM::train(flat(read_tokenized(o.src)));
  } else {
    // A saved model or plain tokenized text.
    std::ifstream probe(o.lm);
    std::string first;
    std::getline(probe, first);
    lm = first.rfind("#zpj-ngram-lm", 0) == 0 ? NGramLM::load(o.lm)
                                               : NGramLM::train(flat(read_tokenized(o.lm)));
  }
  AnnotationSummary sum;
  if (o.train_aligner) {
    std::vector<std::pair<Sentence, Sentence>> pairs;
    for (auto& d : docs)
      for (std::size_t i = 0; i < d.source.size(); ++i) pairs.emplace_back(d.source[i], d.target[i]);
    auto table = IBM1Table::train(pairs, o.ibm_iterations);
    sum = annotate_corpus(docs, table, lm, pv);
  } else {
    sum = annotate_corpus(docs, lm, pv);
  }
  std::vector<std::vector<Sentence>> labels;
  for (auto& d : docs) labels.push_back(d.labels);
  write_tokenized(o.out_labels, labels);
  write_sidecar(o.out_labels, "annotate", kv);
  out << "sentences=" << sum.sentences << "\ntouched=" << sum.touched << "\nzps=" << sum.zps
      << "\novert=" << sum.overt << "\nskipped=" << sum.skipped << "\nconflicts=" << sum.conflicts
      << '\n'
      << kv_line("zp_rate", sum.zp_rate());
  return 0;
}

TrainConfig train_config(const Options& o, KeyValues& kv) {
  kv = resolve(o);
  if (o.epochs) kv.set("epochs", std::to_string(*o.epochs));
  kv.set("threads", std::to_string(o.threads));
  TrainConfig cfg = TrainConfig::from(kv);
  cfg.validate();
  kv = cfg.to_kv();
  return cfg;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  KeyValues kv;
  TrainConfig cfg = train_config(o, kv);
  kv.set("train_dir", o.train_dir);
  kv.set("valid_dir", o.valid_dir);
  log_config(err, "train", kv);
  fs::create_directories(o.out_dir);
  fs::path dir(o.out_dir);
  write_text(dir / "config.txt", kv.str());
  write_text(dir / "run.log", "version=" + std::string(kVersion) + "\n" + kv.str());

  PronounVocab pv = pronouns_for(o, o.train_dir);
  auto data = prepare_data(load_split(o.train_dir, pv), load_split(o.valid_dir, pv), pv, cfg);
  std::ofstream log(dir / "epochs.tsv", std::ios::binary);
  log << format_epoch_header() << '\n';
  auto t0 = std::chrono::steady_clock::now();
  auto result = train(cfg, data, [&](const EpochRecord& r) {
    log << format_epoch(r) << '\n' << std::flush;
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    err << "[zpj] " << format_epoch(r) << "  (" << format_double(s) << "s)\n";
  });
  result.best.save(dir / "model.ckpt");
  write_sidecar(dir / "epochs.tsv", "train", kv);
  write_sidecar(dir / "model.ckpt", "train", kv);
  out << "best_epoch=" << result.best_epoch << '\n'
      << kv_line("best_valid_bleu", result.log[result.best_epoch - 1].valid_bleu)
      << "model=" << (dir / "model.ckpt").string() << '\n';
  return 0;
}

int decode(const Options& o, std::ostream& out, std::ostream& err, bool labels_only) {
  Bundle bundle = Bundle::load(o.model);
  KeyValues kv;
  kv.set("model", o.model);
  kv.set("model_hash", hex64(bundle.params.hash()));
  kv.set("src", o.src);
  kv.set("beam", std::to_string(o.beam));
  kv.set("max_ratio", format_double(o.max_ratio));
  kv.set("rescore_beta", format_double(o.rescore_beta));
  kv.set("threads", std::to_string(o.threads));
  log_config(err, labels_only ? "label" : "translate", kv);

  Model model = bundle.model();
  TranslateOptions topt;
  topt.beam = {o.beam, o.max_ratio};
  topt.rescore_beta = o.rescore_beta;
  topt.threads = o.threads;
  bool want_labels = labels_only || !o.emit_labels.empty();
  if (want_labels && !bundle.config.use_labeler)
    throw ContractError("model has no ZP labeler; labels are unavailable");
  topt.labels = want_labels;

  auto docs = read_tokenized(o.src);
  auto result = decode_documents(model, bundle.src, docs, topt);
  std::vector<Sentence> hyps, labels;
  for (auto& t : result) {
    hyps.push_back(bundle.tgt.decode(t.tokens));
    Sentence l;
    for (int id : t.labels) l.push_back(bundle.pronouns.label_token(id));
    labels.push_back(std::move(l));
  }
  std::string command = labels_only ? "label" : "translate";
  if (labels_only) {
    write_tokenized(o.out, like(docs, labels));
    write_sidecar(o.out, command, kv);
  } else {
    write_tokenized(o.out, like(docs, hyps));
    write_sidecar(o.out, command, kv);
    if (!o.emit_labels.empty()) {
      write_tokenized(o.emit_labels, like(docs, labels));
      write_sidecar(o.emit_labels, command, kv);
    }
  }
  out << "sentences=" << result.size() << '\n';
  return 0;
}

int cmd_eval_bleu(const Options& o, std::ostream& out) {
  auto hyps = flat(read_tokenized(o.hyp));
  auto refs = flat(read_tokenized(o.ref));
  if (hyps.size() != refs.size())
    throw ContractError("eval-bleu: " + std::to_string(hyps.size()) + " hypotheses vs " +
                        std::to_string(refs.size()) + " references");
  BleuStats st;
  for (std::size_t i = 0; i < hyps.size(); ++i) st += bleu_stats(hyps[i], refs[i]);
  out << kv_line("bleu", bleu_from_stats(st));
  for (int n = 0; n < 4; ++n)
    out << "p" << n + 1 << "=" << st.matches[n] << "/" << st.totals[n] << '\n';
  out << "hyp_len=" << st.hyp_len << "\nref_len=" << st.ref_len << '\n';
  return 0;
}

void print_prf(std::ostream& out, const std::string& prefix, const PRF& p) {
  out << prefix << "_predicted=" << p.predicted << '\n'
      << prefix << "_gold=" << p.gold << '\n'
      << prefix << "_matched=" << p.matched << '\n'
      << kv_line(prefix + "_precision", p.precision) << kv_line(prefix + "_recall", p.recall)
      << kv_line(prefix + "_f1", p.f1);
}

int cmd_eval_zp(const Options& o, std::ostream& out) {
  auto s = zp_prf(flat(read_tokenized(o.pred)), flat(read_tokenized(o.gold)));
  print_prf(out, "position", s.position);
  print_prf(out, "word", s.word);
  return 0;
}

int cmd_sig_test(const Options& o, std::ostream& out) {
  auto a = flat(read_tokenized(o.a));
  auto b = flat(read_tokenized(o.b));
  auto r = flat(read_tokenized(o.ref));
  if (a.size() != r.size() || b.size() != r.size())
    throw ContractError("sig-test: systems and reference differ in line count");
  std::vector<double> sa, sb;
  long wins = 0, losses = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    sa.push_back(sentence_bleu(a[i], r[i]));
    sb.push_back(sentence_bleu(b[i], r[i]));
    wins += sa.back() > sb.back();
    losses += sa.back() < sb.back();
  }
  out << kv_line("bleu_a", bleu(a, r)) << kv_line("bleu_b", bleu(b, r)) << "wins_a=" << wins
      << "\nwins_b=" << losses << "\nties=" << long(r.size()) - wins - losses << '\n'
      << kv_line("p_value", sign_test(sa, sb));
  return 0;
}

int cmd_ablation(const Options& o, std::ostream& out, std::ostream& err) {
  KeyValues kv;
  TrainConfig cfg = train_config(o, kv);
  fs::path corpus(o.corpus_dir);
  kv.set("corpus", o.corpus_dir);
  kv.set("rescore_beta", format_double(o.rescore_beta));
  kv.set("extra_rows", o.extra_rows ? "true" : "false");
  log_config(err, "ablation", kv);
  PronounVocab pv = pronouns_for(o, corpus / "train");
  auto data = prepare_data(load_split(corpus / "train", pv), load_split(corpus / "valid", pv), pv, cfg);
  AblationOptions aopt;
  aopt.rescore_beta = o.rescore_beta;
  aopt.beam = o.beam;
  if (o.extra_rows)
    for (auto& r : extra_ablation_rows()) aopt.rows.push_back(r);
  auto rows = ablation_matrix(cfg, data, corpus / "test", aopt,
                              [&](const std::string& m) { err << "[zpj] " << m << '\n'; });
  std::string table = format_ablation(rows);
  if (!o.out.empty()) {
    write_text(o.out, table);
    write_sidecar(o.out, "ablation", kv);
  }
  out << table;
  return 0;
}

int cmd_describe(const Options& o, std::ostream& out, std::ostream& err) {
  ModelConfig cfg;
  if (!o.model.empty()) {
    cfg = Bundle::load(o.model).config;
  } else {
    KeyValues kv = resolve(o);
    KeyValues model;
    for (auto& [k, v] : kv.items())
      model.set(k.rfind("model.", 0) == 0 ? k.substr(6) : k, v);
    cfg = ModelConfig::from(model);
  }
  log_config(err, "describe", cfg.to_kv());
  Model m(cfg, 1);
  std::size_t total = 0;
  out << "module\tgroup\tparams\n";
  for (auto& c : m.describe()) {
    out << c.module << '\t' << group_name(c.group) << '\t' << c.count << '\n';
    total += c.count;
  }
  out << "total\t-\t" << total << '\n';
  out << "theta\t-\t" << m.params().count(Group::theta) << '\n';
  out << "gamma\t-\t" << m.params().count(Group::gamma) << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint zero-pronoun prediction and translation", "zpj"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--threads", o.threads, "Worker threads for decoding")->check(CLI::PositiveNumber);

  auto with_config = [&](CLI::App* c) {
    c->add_option("--config", o.config, "key=value config file")->check(CLI::ExistingFile);
    c->add_option("--set", o.sets, "Override a config key (key=value)");
    c->add_option("--seed", o.seed, "Random seed");
  };

  auto* gen = app.add_subcommand("gen-corpus", "Generate the synthetic pro-drop corpus");
  with_config(gen);
  gen->add_option("--out-dir", o.out_dir)->required();

  auto* ann = app.add_subcommand("annotate", "Recover dropped pronouns from parallel text");
  ann->add_option("--src", o.src)->required()->check(CLI::ExistingFile);
  ann->add_option("--tgt", o.tgt)->required()->check(CLI::ExistingFile);
  auto* al = ann->add_option("--align", o.align, "Alignment file")->check(CLI::ExistingFile);
  auto* ta = ann->add_flag("--train-aligner", o.train_aligner, "Align with IBM model 1");
  ann->add_option("--ibm-iterations", o.ibm_iterations)->check(CLI::PositiveNumber);
  auto* lm = ann->add_option("--lm", o.lm, "Saved n-gram model or tokenized text")
                 ->check(CLI::ExistingFile);
  auto* tl = ann->add_flag("--train-lm", o.train_lm, "Train the n-gram model on --src");
  ann->add_option("--pronouns", o.pronouns)->required()->check(CLI::ExistingFile);
  ann->add_option("--out-labels", o.out_labels)->required();
  al->excludes(ta);
  lm->excludes(tl);

  auto* tr = app.add_subcommand("train", "Train a model");
  with_config(tr);
  tr->add_option("--train-dir", o.train_dir)->required()->check(CLI::ExistingDirectory);
  tr->add_option("--valid-dir", o.valid_dir)->required()->check(CLI::ExistingDirectory);
  tr->add_option("--out", o.out_dir, "Output directory")->required();
  tr->add_option("--pronouns", o.pronouns)->check(CLI::ExistingFile);
  tr->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);

  auto decode_opts = [&](CLI::App* c) {
    c->add_option("--model", o.model)->required()->check(CLI::ExistingFile);
    c->add_option("--src", o.src)->required()->check(CLI::ExistingFile);
    c->add_option("--out", o.out)->required();
    c->add_option("--beam", o.beam)->check(CLI::PositiveNumber);
    c->add_option("--max-ratio", o.max_ratio)->check(CLI::PositiveNumber);
    c->add_option("--rescore-beta", o.rescore_beta);
  };
  auto* tx = app.add_subcommand("translate", "Translate tokenized source documents");
  decode_opts(tx);
  tx->add_option("--emit-labels", o.emit_labels, "Also write predicted ZP labels");
  auto* lb = app.add_subcommand("label", "Predict ZP labels for source documents");
  decode_opts(lb);

  auto* eb = app.add_subcommand("eval-bleu", "Corpus BLEU");
  eb->add_option("--hyp", o.hyp)->required()->check(CLI::ExistingFile);
  eb->add_option("--ref", o.ref)->required()->check(CLI::ExistingFile);

  auto* ez = app.add_subcommand("eval-zp", "ZP prediction precision, recall and F1");
  ez->add_option("--pred", o.pred)->required()->check(CLI::ExistingFile);
  ez->add_option("--gold", o.gold)->required()->check(CLI::ExistingFile);

  auto* st = app.add_subcommand("sig-test", "Paired sign test on sentence BLEU");
  st->add_option("--a", o.a)->required()->check(CLI::ExistingFile);
  st->add_option("--b", o.b)->required()->check(CLI::ExistingFile);
  st->add_option("--ref", o.ref)->required()->check(CLI::ExistingFile);

  auto* ab = app.add_subcommand("ablation", "Train and compare the model rows");
  with_config(ab);
  ab->add_option("--corpus", o.corpus_dir, "Directory with train/ valid/ test/")
      ->required()
      ->check(CLI::ExistingDirectory);
  ab->add_option("--pronouns", o.pronouns)->check(CLI::ExistingFile);
  ab->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  ab->add_option("--beam", o.beam)->check(CLI::PositiveNumber);
  ab->add_option("--rescore-beta", o.rescore_beta)->default_val(1.0);
  ab->add_flag("--extra-rows", o.extra_rows, "Add the K=0 and decoder-context rows");
  ab->add_option("--out", o.out, "Write the table here as well");

  auto* ds = app.add_subcommand("describe", "Parameter counts per module and group");
  with_config(ds);
  ds->add_option("--model", o.model)->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "zpj: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  if (ann->parsed()) {
    if (o.align.empty() == !o.train_aligner) {
      err << "zpj: annotate needs exactly one of --align or --train-aligner\n";
      return 2;
    }
    if (o.lm.empty() == !o.train_lm) {
      err << "zpj: annotate needs exactly one of --lm or --train-lm\n";
      return 2;
    }
  }

  try {
    if (gen->parsed()) return cmd_gen_corpus(o, out, err);
    if (ann->parsed()) return cmd_annotate(o, out, err);
    if (tr->parsed()) return cmd_train(o, out, err);
    if (tx->parsed()) return decode(o, out, err, false);
    if (lb->parsed()) return decode(o, out, err, true);
    if (eb->parsed()) return cmd_eval_bleu(o, out);
    if (ez->parsed()) return cmd_eval_zp(o, out);
    if (st->parsed()) return cmd_sig_test(o, out);
    if (ab->parsed()) return cmd_ablation(o, out, err);
    if (ds->parsed()) return cmd_describe(o, out, err);
  } catch (const std::exception& e) {
    err << "zpj: error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace zpj
