#include "flfe/protocol.hpp"

#include <algorithm>
#include <chrono>

#include "flfe/rng.hpp"

namespace flfe {

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::flfe: return "flfe";
    case RunMode::model_eval_baseline: return "model_eval_baseline";
    case RunMode::he_model_baseline: return "he_model_baseline";
  }
  return "?";
}

std::optional<RunMode> run_mode_from_string(std::string_view name) {
  if (name == "flfe") return RunMode::flfe;
  if (name == "model_eval_baseline") return RunMode::model_eval_baseline;
  if (name == "he_model_baseline") return RunMode::he_model_baseline;
  return std::nullopt;
}

double MlpJudge::confidence(const JudgeInput& input) const {
  auto it = models_.find(input.kind);
  if (it == models_.end())
    throw ConfigError("no judge model for transform " + std::string(to_string(input.kind)));
  double sum = 0;
  for (const auto& qsa : input.qsa_per_split) {
    if (qsa.size() != it->second.input_dim)
      throw ConfigError("judge model for " + std::string(to_string(input.kind)) +
                        " expects input dim " + std::to_string(it->second.input_dim) + ", got " +
                        std::to_string(qsa.size()));
    sum += mlp_forward(it->second, qsa)[0];
  }
  return sum / static_cast<double>(input.qsa_per_split.size());
}

double OracleJudge::confidence(const JudgeInput& input) const {
  LabelingConfig cfg;
  cfg.base_model = model_;
  cfg.improvement_threshold = threshold_;
  cfg.cv_folds = folds_;
  const auto [label, improvement] =
      label_candidate(input.parents, input.candidate, *input.labels, cfg, input.eval_seed);
  (void)improvement;
  return label == Usefulness::useful ? 1.0 : 0.0;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<int> class_split_ids(int n_classes) {
  if (n_classes == 2) return {1};
  std::vector<int> out(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) out[static_cast<std::size_t>(c)] = c;
  return out;
}

}  // namespace

ProtocolRun::ProtocolRun(std::vector<PartyView> parties, const Judge& judge, ProtocolConfig cfg,
                         bool capture_transcript)
    : judge_(judge),
      cfg_(std::move(cfg)),
      net_(capture_transcript),
      select_rng_(derive_seed(cfg_.seed, "select")) {
  if (parties.empty()) throw std::invalid_argument("protocol: no participants");
  for (auto& p : parties) parties_.push_back(Participant{std::move(p), {}, {}});
  net_.register_node(kServerNode);
  for (const auto& p : parties_) {
    if (p.view.name == kServerNode) throw std::invalid_argument("participant may not be named 'server'");
    net_.register_node(p.view.name);
  }
  if (cfg_.mode == RunMode::model_eval_baseline)
    eval_judge_ = std::make_unique<OracleJudge>(cfg_.eval_model, cfg_.improvement_threshold, cfg_.eval_folds);
}

ProtocolRun::Participant& ProtocolRun::participant(const std::string& name) {
  for (auto& p : parties_)
    if (p.view.name == name) return p;
  throw std::invalid_argument("unknown participant: " + name);
}

const ProtocolRun::Participant& ProtocolRun::participant(const std::string& name) const {
  for (const auto& p : parties_)
    if (p.view.name == name) return p;
  throw std::invalid_argument("unknown participant: " + name);
}

const Eigen::VectorXd& ProtocolRun::resolve(const std::string& owner, const std::string& feature) const {
  if (owner == kServerNode) {
    for (const auto& g : store_)
      if (g.name == feature) return g.values;
    throw std::invalid_argument("unknown stored feature: " + feature);
  }
  const Participant& p = participant(owner);
  for (const auto& f : p.view.features)
    if (f.name == feature) return f.values;
  for (const auto& f : p.locals)
    if (f.name == feature) return f.values;
  throw std::invalid_argument("unknown feature " + feature + " at " + owner);
}

std::vector<int> ProtocolRun::splits() const { return class_split_ids(parties_[0].view.n_classes); }

std::vector<CandidateRef> ProtocolRun::unjudged_candidates() const {
  // owner order: participants in registration order, then the server's
  // store; feature order within an owner is stable
  struct OwnerFeatures {
    std::string name;
    std::vector<std::string> features;
  };
  std::vector<OwnerFeatures> owners;
  for (const auto& p : parties_) {
    OwnerFeatures of{p.view.name, {}};
    for (const auto& f : p.view.features) of.features.push_back(f.name);
    for (const auto& f : p.locals) of.features.push_back(f.name);
    owners.push_back(std::move(of));
  }
  if (cfg_.generated_parents && !store_.empty()) {
    OwnerFeatures of{kServerNode, {}};
    for (const auto& g : store_) of.features.push_back(g.name);
    owners.push_back(std::move(of));
  }

  std::vector<TransformKind> kinds;
  for (TransformKind k : cfg_.kinds)
    if (arity(k) == 2) kinds.push_back(k);

  std::vector<CandidateRef> out;
  for (std::size_t i = 0; i < owners.size(); ++i)
    for (std::size_t j = i + 1; j < owners.size(); ++j)
      for (const auto& fa : owners[i].features)
        for (const auto& fb : owners[j].features)
          for (TransformKind kind : kinds) {
            CandidateRef cand{owners[i].name, fa, owners[j].name, fb, kind};
            if (!judged_.count(cand)) out.push_back(std::move(cand));
          }
  return out;
}

std::size_t ProtocolRun::remaining_candidates() const { return unjudged_candidates().size(); }

CandidateRef ProtocolRun::select_candidate() {
  const auto pool = unjudged_candidates();
  if (pool.empty()) throw std::runtime_error("candidate space exhausted");
  return pool[select_rng_.index(pool.size())];
}

Eigen::VectorXd ProtocolRun::sketch_stack_single(const Eigen::VectorXd& values,
                                                 const std::vector<int>& labels) const {
  const auto split_ids = class_split_ids(parties_[0].view.n_classes);
  Eigen::VectorXd out(static_cast<Eigen::Index>(split_ids.size()) * 2 * cfg_.sketch.bins);
  Eigen::Index pos = 0;
  for (int split : split_ids) {
    const Eigen::VectorXd flat = build_qsa(values, labels, split, cfg_.sketch).flatten();
    out.segment(pos, flat.size()) = flat;
    pos += flat.size();
  }
  return out;
}

void ProtocolRun::fill_plaintext(JudgeInput& input, const CandidateRef& cand, int loop) const {
  const Eigen::VectorXd& f1 = resolve(cand.owner_a, cand.feature_a);
  const std::vector<int>& labels = parties_[0].view.label;
  if (cand.owner_b.empty()) {
    input.parents = Eigen::MatrixXd(f1);
    input.candidate = apply_unary(cand.kind, f1, labels);
  } else {
    const Eigen::VectorXd& f2 = resolve(cand.owner_b, cand.feature_b);
    input.parents.resize(f1.size(), 2);
    input.parents.col(0) = f1;
    input.parents.col(1) = f2;
    input.candidate = apply_binary(cand.kind, f1, f2);
  }
  input.labels = &labels;
  input.eval_seed = derive_seed(cfg_.seed, "eval", static_cast<std::uint64_t>(loop));
}

void ProtocolRun::send_control(const std::string& from, const std::string& to, MessageKind kind,
                               int loop) {
  if (from == to) return;  // the coordinator does not message itself
  Message msg;
  msg.from = from;
  msg.to = to;
  msg.kind = kind;
  msg.loop = loop;
  msg.payload.assign(kControlMessageBytes, 0);
  net_.send(std::move(msg));
  net_.receive(from, to);
}

double ProtocolRun::judge_flfe(const CandidateRef& cand, int loop) {
  const std::string& dc1 = cand.owner_a;
  const std::string& dc2 = cand.owner_b;
  const Eigen::VectorXd& f1 = resolve(dc1, cand.feature_a);
  const Eigen::VectorXd& f2 = resolve(dc2, cand.feature_b);
  const std::vector<int>& labels = parties_[0].view.label;
  const auto split_ids = splits();
  const int m = cfg_.sketch.bins;

  // dc1 -> dc2: the stacked per-split sketch of f1
  const Eigen::VectorXd s1 = sketch_stack_single(f1, labels);
  Message sketch_msg{dc1, dc2, MessageKind::SketchPayload, 0, loop,
                     encode_reals(s1, cfg_.sketch.float_width)};
  net_.send(std::move(sketch_msg));
  const Eigen::VectorXd s1_received =
      decode_reals(net_.receive(dc1, dc2).payload, cfg_.sketch.float_width);

  // dc2 assembles the pair array per split and uploads it
  const Eigen::VectorXd s2 = sketch_stack_single(f2, labels);
  Eigen::VectorXd pair(static_cast<Eigen::Index>(split_ids.size()) * 4 * m);
  for (std::size_t s = 0; s < split_ids.size(); ++s) {
    const Eigen::Index half = 2 * m;
    pair.segment(static_cast<Eigen::Index>(s) * 4 * m, half) =
        s1_received.segment(static_cast<Eigen::Index>(s) * half, half);
    pair.segment(static_cast<Eigen::Index>(s) * 4 * m + half, half) =
        s2.segment(static_cast<Eigen::Index>(s) * half, half);
  }
  Eigen::VectorXd pair_received = pair;
  if (dc2 != kServerNode) {
    // when the second parent is a stored feature, the pair assembles at
    // the server and nothing further travels
    Message qsa_msg{dc2, kServerNode, MessageKind::QsaPayload, 0, loop,
                    encode_reals(pair, cfg_.sketch.float_width)};
    net_.send(std::move(qsa_msg));
    pair_received = decode_reals(net_.receive(dc2, kServerNode).payload, cfg_.sketch.float_width);
  }

  JudgeInput input;
  input.kind = cand.kind;
  for (std::size_t s = 0; s < split_ids.size(); ++s)
    input.qsa_per_split.push_back(pair_received.segment(static_cast<Eigen::Index>(s) * 4 * m, 4 * m));
  if (judge_.needs_plaintext()) fill_plaintext(input, cand, loop);
  const double confidence = judge_.confidence(input);

  send_control(kServerNode, dc1, MessageKind::Verdict, loop);
  send_control(kServerNode, dc2, MessageKind::Verdict, loop);
  return confidence;
}

double ProtocolRun::judge_eval(const CandidateRef& cand, int loop) {
  // every participant re-uploads its current plaintext feature matrix;
  // the returned generated features ride along, so the transmitted space
  // expands as the run accepts candidates
  for (auto& p : parties_) {
    std::vector<const Eigen::VectorXd*> cols;
    for (const auto& f : p.view.features) cols.push_back(&f.values);
    for (const auto& f : p.locals) cols.push_back(&f.values);
    for (const auto& name : p.returned) {
      for (const auto& g : store_)
        if (g.name == name) cols.push_back(&g.values);
    }
    if (cols.empty()) continue;
    Eigen::VectorXd bundle(static_cast<Eigen::Index>(cols.size()) * p.view.rows());
    Eigen::Index pos = 0;
    for (const auto* c : cols) {
      bundle.segment(pos, c->size()) = *c;
      pos += c->size();
    }
    Message msg{p.view.name, kServerNode, MessageKind::PlainFeature, 0, loop,
                encode_reals(bundle, cfg_.feature_width)};
    net_.send(std::move(msg));
    net_.receive(p.view.name, kServerNode);
  }

  JudgeInput input;
  input.kind = cand.kind;
  fill_plaintext(input, cand, loop);
  const double confidence = eval_judge_->confidence(input);

  send_control(kServerNode, cand.owner_a, MessageKind::Verdict, loop);
  send_control(kServerNode, cand.owner_b, MessageKind::Verdict, loop);
  return confidence;
}

double ProtocolRun::judge_a_qsa(const CandidateRef& cand, int loop) {
  if (cand.owner_b.empty()) throw std::invalid_argument("judge_a_qsa: binary candidates only");
  const double confidence =
      cfg_.mode == RunMode::model_eval_baseline ? judge_eval(cand, loop) : judge_flfe(cand, loop);
  judged_.insert(cand);
  return confidence;
}

void ProtocolRun::generate_flfe(const CandidateRef& cand, int loop, GeneratedFeature& out) {
  const std::string& dc1 = cand.owner_a;
  const std::string& dc2 = cand.owner_b;
  const Eigen::VectorXd& f1 = resolve(dc1, cand.feature_a);
  const Eigen::VectorXd& f2 = resolve(dc2, cand.feature_b);

  const MaskGroup group = mask_group(cand.kind);
  const MaskVector mask =
      sample_mask(group, f1.size(), derive_seed(cfg_.seed, "mask", static_cast<std::uint64_t>(loop)),
                  group == MaskGroup::additive ? additive_mask_scale(f1) : 0.0);

  // dc1 -> dc2: masked feature
  const Eigen::VectorXd f1e = mask_encrypt(cand.kind, f1, mask);
  Message m1{dc1, dc2, MessageKind::MaskedFeature, 0, loop, encode_reals(f1e, cfg_.feature_width)};
  net_.send(std::move(m1));
  const Eigen::VectorXd f1e_rx = decode_reals(net_.receive(dc1, dc2).payload, cfg_.feature_width);

  // dc2 -> server: transformed masked feature
  const Eigen::VectorXd f3e = apply_binary(cand.kind, f1e_rx, f2);
  Eigen::VectorXd f3e_rx = f3e;
  if (dc2 != kServerNode) {
    Message m2{dc2, kServerNode, MessageKind::MaskedFeature, 0, loop,
               encode_reals(f3e, cfg_.feature_width)};
    net_.send(std::move(m2));
    f3e_rx = decode_reals(net_.receive(dc2, kServerNode).payload, cfg_.feature_width);
  }

  // dc1 -> server: the mask, so the server can unmask
  MaskVector mask_rx = mask;
  if (dc1 != kServerNode) {
    Message m3{dc1, kServerNode, MessageKind::MaskVectorPayload, 0, loop,
               encode_reals(mask.values, cfg_.feature_width)};
    net_.send(std::move(m3));
    mask_rx.values = decode_reals(net_.receive(dc1, kServerNode).payload, cfg_.feature_width);
  }

  out.values = mask_decrypt(cand.kind, f3e_rx, mask_rx);
}

void ProtocolRun::generate_he(const CandidateRef& cand, int loop, GeneratedFeature& out) {
  const std::string& dc1 = cand.owner_a;
  const std::string& dc2 = cand.owner_b;
  const Eigen::VectorXd& f1 = resolve(dc1, cand.feature_a);
  const Eigen::VectorXd& f2 = resolve(dc2, cand.feature_b);

  // analytic ciphertext accounting: same transmissions as the masked
  // exchange, each value expanded to cipher_bits
  const std::size_t cipher = he_overhead_bytes(f1.size(), cfg_.he_plain_bits, cfg_.he_cipher_bits);
  auto charge = [&](const std::string& from, const std::string& to) {
    if (from == to) return;
    Message msg{from, to, MessageKind::MaskedFeature, 0, loop, std::vector<std::uint8_t>(cipher, 0)};
    net_.send(std::move(msg));
    net_.receive(from, to);
  };
  charge(dc1, dc2);
  charge(dc2, kServerNode);
  charge(dc1, kServerNode);

  out.values = apply_binary(cand.kind, f1, f2);
}

void ProtocolRun::generate_eval(const CandidateRef& cand, int loop, GeneratedFeature& out) {
  const Eigen::VectorXd& f1 = resolve(cand.owner_a, cand.feature_a);
  const Eigen::VectorXd& f2 = resolve(cand.owner_b, cand.feature_b);
  out.values = apply_binary(cand.kind, f1, f2);

  // append-back: the evaluator returns the accepted feature to the first
  // participant parent, which re-uploads it on every later judging loop
  const std::string& target = cand.owner_a != kServerNode ? cand.owner_a : cand.owner_b;
  Message msg{kServerNode, target, MessageKind::PlainFeature, 0, loop,
              encode_reals(out.values, cfg_.feature_width)};
  net_.send(std::move(msg));
  net_.receive(kServerNode, target);
  participant(target).returned.push_back(out.name);
}

std::string ProtocolRun::generate_new_feature(const CandidateRef& cand, int loop) {
  if (cand.owner_b.empty()) throw std::invalid_argument("generate_new_feature: binary candidates only");
  if (!judged_.count(cand))
    throw std::logic_error("generate_new_feature: candidate was never judged");
  GeneratedFeature g;
  g.name = "g" + std::to_string(loop);
  g.lineage = cand;
  g.loop = loop;
  switch (cfg_.mode) {
    case RunMode::flfe:
      generate_flfe(cand, loop, g);
      break;
    case RunMode::he_model_baseline:
      generate_he(cand, loop, g);
      break;
    case RunMode::model_eval_baseline:
      generate_eval(cand, loop, g);
      break;
  }
  store_.push_back(std::move(g));
  return store_.back().name;
}

double ProtocolRun::judge_unary_local(const std::string& party_name, const std::string& feature,
                                      TransformKind kind, int loop) {
  if (arity(kind) != 1) throw std::invalid_argument("judge_unary_local: unary kinds only");
  Participant& p = participant(party_name);
  const Eigen::VectorXd& f = resolve(party_name, feature);
  const std::vector<int>& labels = p.view.label;

  const Eigen::VectorXd stacked = sketch_stack_single(f, labels);
  Message msg{party_name, kServerNode, MessageKind::QsaPayload, 0, loop,
              encode_reals(stacked, cfg_.sketch.float_width)};
  net_.send(std::move(msg));
  const Eigen::VectorXd received =
      decode_reals(net_.receive(party_name, kServerNode).payload, cfg_.sketch.float_width);

  const auto split_ids = splits();
  const Eigen::Index per_split = 2 * cfg_.sketch.bins;
  JudgeInput input;
  input.kind = kind;
  for (std::size_t s = 0; s < split_ids.size(); ++s)
    input.qsa_per_split.push_back(received.segment(static_cast<Eigen::Index>(s) * per_split, per_split));
  if (judge_.needs_plaintext()) {
    CandidateRef cand{party_name, feature, "", "", kind};
    fill_plaintext(input, cand, loop);
  }
  const double confidence = judge_.confidence(input);
  send_control(kServerNode, party_name, MessageKind::Verdict, loop);

  if (confidence >= cfg_.conf_threshold) {
    const std::string name = std::string(to_string(kind)) + "(" + feature + ")";
    bool exists = false;
    for (const auto& loc : p.locals) exists |= loc.name == name;
    if (!exists)
      p.locals.push_back(FeatureColumn{name, party_name, apply_unary(kind, f, labels)});
  }
  return confidence;
}

RunResult ProtocolRun::run() {
  if (cfg_.unary_pass) {
    std::vector<TransformKind> unary;
    for (TransformKind k : cfg_.kinds)
      if (arity(k) == 1) unary.push_back(k);
    for (auto& p : parties_) {
      std::vector<std::string> names;
      for (const auto& f : p.view.features) names.push_back(f.name);
      for (const auto& fname : names)
        for (TransformKind kind : unary) {
          LoopRecord rec;
          rec.loop = 0;
          rec.candidate = CandidateRef{p.view.name, fname, "", "", kind};
          const auto start = Clock::now();
          rec.confidence = judge_unary_local(p.view.name, fname, kind, 0);
          rec.judge_seconds = seconds_since(start);
          rec.recommended = rec.confidence >= cfg_.conf_threshold;
          if (rec.recommended)
            rec.generated = std::string(to_string(kind)) + "(" + fname + ")";
          records_.push_back(std::move(rec));
        }
    }
  }

  for (int loop = 1; loop <= cfg_.max_loop; ++loop) {
    const auto pool = unjudged_candidates();
    if (pool.empty()) break;
    const CandidateRef cand = pool[select_rng_.index(pool.size())];

    send_control(kServerNode, cand.owner_a, MessageKind::Instruction, loop);
    send_control(kServerNode, cand.owner_b, MessageKind::Instruction, loop);

    LoopRecord rec;
    rec.loop = loop;
    rec.candidate = cand;
    const auto judge_start = Clock::now();
    rec.confidence = judge_a_qsa(cand, loop);
    rec.judge_seconds = seconds_since(judge_start);
    rec.recommended = rec.confidence >= cfg_.conf_threshold;
    if (rec.recommended) {
      const auto gen_start = Clock::now();
      rec.generated = generate_new_feature(cand, loop);
      rec.generate_seconds = seconds_since(gen_start);
    }
    records_.push_back(std::move(rec));
  }

  RunResult result;
  result.records = records_;
  result.store = store_;
  result.ledger = net_.ledger();
  result.transcript = net_.transcript();
  return result;
}

}  // namespace flfe
