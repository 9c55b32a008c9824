#include "zpj/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "zpj/error.hpp"
#include "zpj/optim.hpp"
#include "zpj/synth.hpp"

namespace zpj {

namespace {

const std::string kModelPrefix = "model.";

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

TrainConfig TrainConfig::from(const KeyValues& kv) {
  TrainConfig c;
  KeyValues model;
  for (auto& [k, v] : kv.items())
    if (k.rfind(kModelPrefix, 0) == 0) model.set(k.substr(kModelPrefix.size()), v);
  c.model = ModelConfig::from(model);
  c.epochs = kv.get_int("epochs", c.epochs);
  c.patience = kv.get_int("patience", c.patience);
  c.batch = kv.get_int("batch", c.batch);
  c.max_len = kv.get_int("max_len", c.max_len);
  c.vocab = kv.get_int("vocab", c.vocab);
  c.clip = kv.get_double("clip", c.clip);
  c.rho = kv.get_double("rho", c.rho);
  c.eps = kv.get_double("eps", c.eps);
  c.valid_beam = kv.get_int("valid_beam", c.valid_beam);
  c.seed = std::stoull(kv.get("seed", std::to_string(c.seed)));
  c.threads = kv.get_int("threads", c.threads);
  return c;
}

KeyValues TrainConfig::to_kv() const {
  KeyValues kv;
  KeyValues m = model.to_kv();
  for (auto& [k, v] : m.items()) kv.set(kModelPrefix + k, v);
  kv.set("epochs", std::to_string(epochs));
  kv.set("patience", std::to_string(patience));
  kv.set("batch", std::to_string(batch));
  kv.set("max_len", std::to_string(max_len));
  kv.set("vocab", std::to_string(vocab));
  kv.set("clip", format_double(clip));
  kv.set("rho", format_double(rho));
  kv.set("eps", format_double(eps));
  kv.set("valid_beam", std::to_string(valid_beam));
  kv.set("seed", std::to_string(seed));
  kv.set("threads", std::to_string(threads));
  return kv;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ContractError("train: epochs must be >= 1");
  if (patience < 1) throw ContractError("train: patience must be >= 1");
  if (batch < 1) throw ContractError("train: batch must be >= 1");
  if (max_len < 1) throw ContractError("train: max_len must be >= 1");
  if (vocab < 1) throw ContractError("train: vocab must be >= 1");
  if (!(clip > 0)) throw ContractError("train: clip must be positive");
  if (!(rho > 0 && rho < 1)) throw ContractError("train: rho must lie in (0, 1)");
  if (!(eps > 0)) throw ContractError("train: eps must be positive");
  if (valid_beam < 1) throw ContractError("train: valid_beam must be >= 1");
  if (threads < 1) throw ContractError("train: threads must be >= 1");
}

Model Bundle::model() const { return Model(config, params.clone()); }

void Bundle::save(const std::filesystem::path& path) const {
  auto m = meta;
  m["version"] = kVersion;
  KeyValues c = config.to_kv();
  for (auto& [k, v] : c.items()) m[kModelPrefix + k] = v;
  m["vocab.src"] = src.serialize();
  m["vocab.tgt"] = tgt.serialize();
  m["pronouns"] = pronouns.serialize();
  save_checkpoint(path, params, m);
}

Bundle Bundle::load(const std::filesystem::path& path) {
  Checkpoint ck = load_checkpoint(path);
  Bundle b;
  KeyValues model;
  for (auto& [k, v] : ck.meta)
    if (k.rfind(kModelPrefix, 0) == 0) model.set(k.substr(kModelPrefix.size()), v);
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = ck.meta.find(key);
    if (it == ck.meta.end()) throw FormatError(path.string() + ": checkpoint lacks '" + key + "'");
    return it->second;
  };
  b.config = ModelConfig::from(model);
  b.src = Vocab::parse(need("vocab.src"));
  b.tgt = Vocab::parse(need("vocab.tgt"));
  b.pronouns = PronounVocab::parse(need("pronouns"));
  b.params = std::move(ck.params);
  b.meta = std::move(ck.meta);
  if (b.src.size() != b.config.src_vocab || b.tgt.size() != b.config.tgt_vocab)
    throw FormatError(path.string() + ": vocabulary sizes disagree with the model config");
  Model check(b.config, b.params);  // throws on missing parameters
  return b;
}

std::vector<Document> load_split(const std::filesystem::path& dir, const PronounVocab& pronouns,
                                 bool with_labels) {
  std::optional<std::filesystem::path> labels;
  if (with_labels && std::filesystem::exists(dir / "labels.txt")) labels = dir / "labels.txt";
  return load_documents(dir / "src.txt", dir / "tgt.txt", labels, &pronouns);
}

std::vector<Example> examples_for(const std::vector<Document>& docs, const Vocab& src,
                                  const Vocab& tgt, const PronounVocab& pronouns, int context) {
  return make_examples(docs, src, tgt, &pronouns, context);
}

TrainData prepare_data(std::vector<Document> train, std::vector<Document> valid,
                       PronounVocab pronouns, const TrainConfig& config) {
  TrainData d;
  std::vector<Sentence> src_text, tgt_text;
  for (auto& doc : train) {
    src_text.insert(src_text.end(), doc.source.begin(), doc.source.end());
    tgt_text.insert(tgt_text.end(), doc.target.begin(), doc.target.end());
  }
  d.src = Vocab::build(src_text, config.vocab);
  d.tgt = Vocab::build(tgt_text, config.vocab);
  d.pronouns = std::move(pronouns);
  int k = config.model.context;
  d.train.examples = examples_for(train, d.src, d.tgt, d.pronouns, k);
  d.valid.examples = examples_for(valid, d.src, d.tgt, d.pronouns, k);
  d.train.docs = std::move(train);
  d.valid.docs = std::move(valid);
  return d;
}

std::string format_epoch_header() { return "epoch\tL\tR\tP\tvalid_bleu\tvalid_f1"; }

std::string format_epoch(const EpochRecord& r) {
  std::ostringstream os;
  os << r.epoch << '\t' << fixed(r.likelihood, 6) << '\t' << fixed(r.reconstruction, 6) << '\t'
     << fixed(r.labeling, 6) << '\t' << fixed(r.valid_bleu, 4) << '\t'
     << (r.valid_f1 ? fixed(*r.valid_f1, 4) : "n/a");
  return os.str();
}

std::vector<Translation> decode_documents(const Model& model, const Vocab& src,
                                          const std::vector<std::vector<Sentence>>& docs,
                                          const TranslateOptions& options) {
  const ModelConfig& cfg = model.config();
  std::size_t k = cfg.use_discourse ? std::size_t(cfg.context) : 0;
  std::vector<Ids> sources;
  std::vector<Context> contexts;
  for (auto& doc : docs) {
    std::vector<Ids> encoded;
    for (auto& s : doc) encoded.push_back(src.encode(s));
    for (std::size_t i = 0; i < encoded.size(); ++i) {
      sources.push_back(encoded[i]);
      contexts.emplace_back(encoded.begin() + (i > k ? i - k : 0), encoded.begin() + i);
    }
  }
  return translate_all(model, sources, contexts, options);
}

SplitScores evaluate(const Model& model, const Vocab& src, const Vocab& tgt,
                     const PronounVocab& pronouns, const std::vector<Document>& docs,
                     const TranslateOptions& options) {
  bool labels = model.config().use_labeler && options.labels;
  std::vector<std::vector<Sentence>> sources;
  std::vector<Sentence> refs, gold;
  for (auto& doc : docs) {
    sources.push_back(doc.source);
    refs.insert(refs.end(), doc.target.begin(), doc.target.end());
    if (doc.labels.size() != doc.source.size()) labels = false;
    gold.insert(gold.end(), doc.labels.begin(), doc.labels.end());
  }
  auto out = decode_documents(model, src, sources, options);
  SplitScores s;
  for (auto& t : out) {
    s.hypotheses.push_back(tgt.decode(t.tokens));
    if (!t.labels.empty()) {
      Sentence l;
      for (int id : t.labels) l.push_back(pronouns.label_token(id));
      s.labels.push_back(std::move(l));
    }
  }
  if (refs.size() == s.hypotheses.size()) s.bleu = bleu(s.hypotheses, refs);
  if (labels) s.zp = zp_prf(s.labels, gold);
  return s;
}

TrainResult train(const TrainConfig& config, const TrainData& data, const EpochCallback& on_epoch) {
  config.validate();
  ModelConfig mc = config.model;
  mc.src_vocab = data.src.size();
  mc.tgt_vocab = data.tgt.size();
  mc.labels = data.pronouns.label_count();
  mc.validate();
  if (data.train.examples.empty()) throw ContractError("train: no training examples");
  if (mc.use_labeler)
    for (auto& e : data.train.examples)
      if (e.zp.empty()) throw ContractError("train: labeler enabled but training data has no labels");

  Model model(mc, config.seed);
  Adadelta opt(config.rho, config.eps);
  TranslateOptions topt;
  topt.beam.beam = config.valid_beam;
  topt.labels = mc.use_labeler;
  topt.threads = config.threads;

  TrainResult result;
  double best_bleu = -1.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    auto batches = make_batches(data.train.examples, config.batch, config.max_len,
                                config.seed * 1000003ULL + std::uint64_t(epoch));
    double l = 0, r = 0, p = 0;
    long tgt_tokens = 0, src_tokens = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<const Example*> batch;
      for (auto i : batches[b].items) batch.push_back(&data.train.examples[i]);
      LossTerms terms = model.joint_loss(batch);
      double total = terms.total.item();
      if (!std::isfinite(total))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b + 1));
      backward(terms.total);
      clip_grad_norm(model.params(), config.clip);
      opt.step(model.params());
      l += terms.likelihood * double(terms.target_tokens);
      r += terms.reconstruction * double(terms.source_tokens);
      p += terms.labeling * double(terms.source_tokens);
      tgt_tokens += terms.target_tokens;
      src_tokens += terms.source_tokens;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.likelihood = l / double(std::max(1L, tgt_tokens));
    rec.reconstruction = r / double(std::max(1L, src_tokens));
    rec.labeling = p / double(std::max(1L, src_tokens));
    auto scores = evaluate(model, data.src, data.tgt, data.pronouns, data.valid.docs, topt);
    rec.valid_bleu = scores.bleu;
    if (scores.zp) rec.valid_f1 = scores.zp->word.f1;
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.valid_bleu > best_bleu) {
      best_bleu = rec.valid_bleu;
      result.best_epoch = epoch;
      result.best.params = model.params().clone();
    } else if (epoch - result.best_epoch >= config.patience) {
      break;
    }
  }
  result.best.config = mc;
  result.best.src = data.src;
  result.best.tgt = data.tgt;
  result.best.pronouns = data.pronouns;
  result.best.meta["train_config"] = config.to_kv().str();
  result.best.meta["config_hash"] = hex64(config.to_kv().hash());
  result.best.meta["best_epoch"] = std::to_string(result.best_epoch);
  return result;
}

std::vector<Sentence> discourse_mask(const std::filesystem::path& gold_dir,
                                     const std::vector<Sentence>& labels) {
  std::vector<GoldRecord> gold;
  for (auto& doc : read_gold(gold_dir / "gold.txt")) gold.insert(gold.end(), doc.begin(), doc.end());
  if (gold.size() != labels.size())
    throw ContractError("discourse_mask: " + std::to_string(labels.size()) +
                        " label lines but " + std::to_string(gold.size()) + " gold records");
  std::vector<Sentence> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Sentence masked(labels[i].size(), kNoZp);
    int dropped_before = 0;
    for (auto& p : gold[i].pronouns) {
      if (!p.dropped) continue;
      int slot = p.index - dropped_before++;
      if (p.offset > 0 && slot < int(masked.size())) masked[slot] = labels[i][slot];
    }
    out.push_back(std::move(masked));
  }
  return out;
}

std::vector<std::string> default_ablation_rows() {
  return {"baseline", "+reconstruction", "joint", "joint+discourse"};
}

std::vector<std::string> extra_ablation_rows() {
  return {"joint+discourse(K=0)", "joint+discourse(decoder)"};
}

std::vector<AblationRow> ablation_matrix(const TrainConfig& base, const TrainData& data,
                                         const std::filesystem::path& test_dir,
                                         const AblationOptions& options,
                                         const std::function<void(const std::string&)>& log) {
  struct Spec {
    std::string name;
    bool rec, lab, disc;
    int context;
    std::string target;
  };
  int k = base.model.context;
  const std::vector<Spec> known{{"baseline", false, false, false, k, "reconstructor"},
                                {"+reconstruction", true, false, false, k, "reconstructor"},
                                {"joint", true, true, false, k, "reconstructor"},
                                {"joint+discourse", true, true, true, k, "reconstructor"},
                                {"joint+discourse(K=0)", true, true, true, 0, "reconstructor"},
                                {"joint+discourse(decoder)", true, true, true, k, "decoder"}};
  std::vector<Spec> specs;
  for (auto& name : options.rows) {
    auto it = std::find_if(known.begin(), known.end(), [&](const Spec& s) { return s.name == name; });
    if (it == known.end()) throw ContractError("ablation: unknown row '" + name + "'");
    specs.push_back(*it);
  }
  auto test_docs = load_split(test_dir, data.pronouns);
  bool have_gold = std::filesystem::exists(test_dir / "gold.txt");
  std::vector<Sentence> gold_labels;
  for (auto& d : test_docs) gold_labels.insert(gold_labels.end(), d.labels.begin(), d.labels.end());

  std::vector<AblationRow> rows;
  for (auto& spec : specs) {
    TrainConfig cfg = base;
    cfg.model.use_reconstructor = spec.rec;
    cfg.model.use_labeler = spec.lab;
    cfg.model.use_discourse = spec.disc;
    cfg.model.context = spec.context;
    cfg.model.discourse_target = spec.target;
    TrainData row_data = data;
    if (spec.context != k) {
      row_data.train.examples = examples_for(data.train.docs, data.src, data.tgt, data.pronouns, spec.context);
      row_data.valid.examples = examples_for(data.valid.docs, data.src, data.tgt, data.pronouns, spec.context);
    }
    if (log) log("training " + spec.name);
    auto t0 = std::chrono::steady_clock::now();
    auto result = train(cfg, row_data, [&](const EpochRecord& r) {
      if (log) log(spec.name + "\t" + format_epoch(r));
    });
    Model model = result.best.model();

    AblationRow row;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.name = spec.name;
    row.config = result.best.config;
    row.best_epoch = result.best_epoch;
    row.params = model.params().count();
    TranslateOptions topt;
    topt.beam.beam = options.beam;
    topt.labels = spec.lab;
    topt.threads = base.threads;
    auto plain = evaluate(model, data.src, data.tgt, data.pronouns, test_docs, topt);
    row.bleu = plain.bleu;
    row.zp = plain.zp;
    if (spec.lab && have_gold && gold_labels.size() == plain.labels.size())
      row.zp_discourse = zp_prf(discourse_mask(test_dir, plain.labels),
                                discourse_mask(test_dir, gold_labels));
    if (spec.rec) {
      topt.rescore_beta = options.rescore_beta;
      topt.labels = false;
      row.bleu_rescored = evaluate(model, data.src, data.tgt, data.pronouns, test_docs, topt).bleu;
    }
    if (log) log(spec.name + " done: BLEU " + fixed(row.bleu, 2));
    row.bundle = std::move(result.best);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_ablation(const std::vector<AblationRow>& rows) {
  auto opt = [](const std::optional<double>& v, int digits) {
    return v ? fixed(*v, digits) : std::string("n/a");
  };
  std::ostringstream os;
  os << "model\tparams\tbest_epoch\tbleu\tbleu_rescored\tf1_position\tf1_word\tf1_word_discourse\n";
  for (auto& r : rows) {
    std::optional<double> pos, word, disc;
    if (r.zp) pos = r.zp->position.f1, word = r.zp->word.f1;
    if (r.zp_discourse) disc = r.zp_discourse->word.f1;
    os << r.name << '\t' << r.params << '\t' << r.best_epoch << '\t' << fixed(r.bleu, 2) << '\t'
       << opt(r.bleu_rescored, 2) << '\t' << opt(pos, 4) << '\t' << opt(word, 4) << '\t'
       << opt(disc, 4) << '\n';
  }
  return os.str();
}

}  // namespace zpj
