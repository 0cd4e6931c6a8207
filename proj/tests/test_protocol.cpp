#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "flfe/protocol.hpp"
#include "flfe/rng.hpp"

using namespace flfe;

namespace {

std::vector<PartyView> two_parties(int rows, std::uint64_t seed, int features_per_party = 1) {
  Rng rng(seed);
  std::vector<PartyView> parties(2);
  for (int p = 0; p < 2; ++p) {
    parties[static_cast<std::size_t>(p)].party_id = p;
    parties[static_cast<std::size_t>(p)].name = p == 0 ? "alice" : "bob";
    parties[static_cast<std::size_t>(p)].n_classes = 2;
  }
  std::vector<int> label(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) label[static_cast<std::size_t>(i)] = static_cast<int>(rng.index(2));
  for (int p = 0; p < 2; ++p) {
    parties[static_cast<std::size_t>(p)].label = label;
    for (int f = 0; f < features_per_party; ++f) {
      Eigen::VectorXd v(rows);
      for (int i = 0; i < rows; ++i) v[i] = rng.uniform(-10, 10);
      const std::string name = (p == 0 ? "a" : "b") + std::to_string(f);
      parties[static_cast<std::size_t>(p)].features.push_back(
          FeatureColumn{name, parties[static_cast<std::size_t>(p)].name, v});
    }
  }
  return parties;
}

ProtocolConfig base_config(int max_loop, std::uint64_t seed) {
  ProtocolConfig cfg;
  cfg.sketch.bins = 200;
  cfg.sketch.float_width = 4;
  cfg.max_loop = max_loop;
  cfg.seed = seed;
  return cfg;
}

std::map<MessageKind, std::size_t> bytes_by_kind(const std::vector<LedgerEntry>& ledger) {
  std::map<MessageKind, std::size_t> out;
  for (const auto& e : ledger) out[e.kind] += e.bytes;
  return out;
}

}  // namespace

TEST_CASE("select_candidate covers the space exactly once, then exhausts") {
  const StubJudge judge(0.0);
  ProtocolConfig cfg = base_config(0, 5);
  ProtocolRun run(two_parties(20, 1), judge, cfg);

  // 1 x 1 cross-party features, 4 binary kinds
  CHECK(run.remaining_candidates() == 4);
  std::set<TransformKind> kinds_seen;
  for (int loop = 1; loop <= 4; ++loop) {
    const CandidateRef cand = run.select_candidate();
    CHECK(cand.owner_a == "alice");
    CHECK(cand.owner_b == "bob");
    kinds_seen.insert(cand.kind);
    run.judge_a_qsa(cand, loop);
  }
  CHECK(kinds_seen.size() == 4);  // never re-judges a triple
  CHECK(run.remaining_candidates() == 0);
  CHECK_THROWS_AS(run.select_candidate(), std::runtime_error);
}

TEST_CASE("selection is deterministic per seed") {
  const StubJudge judge(1.0);
  for (int features : {2, 3}) {
    ProtocolConfig cfg = base_config(6, 42);
    cfg.sketch.bins = 8;
    ProtocolRun a(two_parties(30, 9, features), judge, cfg);
    ProtocolRun b(two_parties(30, 9, features), judge, cfg);
    const auto ra = a.run();
    const auto rb = b.run();
    REQUIRE(ra.records.size() == rb.records.size());
    for (std::size_t i = 0; i < ra.records.size(); ++i)
      CHECK(ra.records[i].candidate == rb.records[i].candidate);
  }
}

TEST_CASE("judge_a_qsa message trace and byte accounting") {
  const StubJudge judge(0.9);
  ProtocolConfig cfg = base_config(0, 7);
  ProtocolRun run(two_parties(50, 3), judge, cfg);

  const CandidateRef cand{"alice", "a0", "bob", "b0", TransformKind::sum};
  const double conf = run.judge_a_qsa(cand, 1);
  CHECK(conf == 0.9);

  const auto& ledger = run.network().ledger();
  REQUIRE(ledger.size() == 4);
  CHECK(ledger[0].kind == MessageKind::SketchPayload);
  CHECK(ledger[0].from == "alice");
  CHECK(ledger[0].to == "bob");
  CHECK(ledger[0].bytes == qsa_bytes(1, 200, 2, 4));  // 1600
  CHECK(ledger[1].kind == MessageKind::QsaPayload);
  CHECK(ledger[1].from == "bob");
  CHECK(ledger[1].to == "server");
  CHECK(ledger[1].bytes == qsa_bytes(2, 200, 2, 4));  // 3200
  CHECK(ledger[2].kind == MessageKind::Verdict);
  CHECK(ledger[2].bytes == 64);
  CHECK(ledger[3].kind == MessageKind::Verdict);
  CHECK(ledger[3].bytes == 64);
}

TEST_CASE("judging handles constant features") {
  const StubJudge judge(0.4);
  ProtocolConfig cfg = base_config(0, 7);
  auto parties = two_parties(20, 3);
  parties[0].features[0].values.setConstant(5.0);
  ProtocolRun run(std::move(parties), judge, cfg);
  const double conf = run.judge_a_qsa({"alice", "a0", "bob", "b0", TransformKind::sum}, 1);
  CHECK(conf >= 0.0);
  CHECK(conf <= 1.0);
}

TEST_CASE("multi-class confidence averages the one-vs-all splits") {
  // a hand-built model whose p_useful depends on the first input entry
  JudgeModel model;
  model.transform = TransformKind::sum;
  model.input_dim = 8;
  model.hidden_dim = 1;
  model.w1 = Eigen::MatrixXd::Zero(1, 8);
  model.w1(0, 0) = 1.0;
  model.b1 = Eigen::VectorXd::Zero(1);
  model.w2 = Eigen::MatrixXd::Zero(2, 1);
  model.w2(0, 0) = 4.0;
  model.b2 = Eigen::VectorXd::Zero(2);
  std::map<TransformKind, JudgeModel> models;
  models.emplace(TransformKind::sum, model);
  const MlpJudge judge(std::move(models));

  JudgeInput input;
  input.kind = TransformKind::sum;
  Eigen::VectorXd s0 = Eigen::VectorXd::Zero(8);
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(8);
  s1[0] = 1.0;
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(8);
  s2[0] = 2.0;
  input.qsa_per_split = {s0, s1, s2};
  double expect = 0;
  for (const auto& s : input.qsa_per_split) expect += mlp_forward(model, s)[0];
  expect /= 3.0;
  CHECK(judge.confidence(input) == doctest::Approx(expect).epsilon(1e-15));

  JudgeInput missing;
  missing.kind = TransformKind::division;
  missing.qsa_per_split = {s0};
  CHECK_THROWS_AS(judge.confidence(missing), ConfigError);
}

TEST_CASE("generate_new_feature reconstructs the transform through the mask exchange") {
  for (TransformKind kind : binary_transforms()) {
    const StubJudge judge(1.0);
    ProtocolConfig cfg = base_config(0, 11);
    cfg.sketch.bins = 8;
    ProtocolRun run(two_parties(40, 21), judge, cfg);
    const CandidateRef cand{"alice", "a0", "bob", "b0", kind};
    run.judge_a_qsa(cand, 1);
    const std::string name = run.generate_new_feature(cand, 1);
    REQUIRE(run.store().size() == 1);
    CHECK(run.store()[0].name == name);

    // the stored feature equals the direct transform within tolerance
    const auto parties = two_parties(40, 21);
    const Eigen::VectorXd direct =
        apply_binary(kind, parties[0].features[0].values, parties[1].features[0].values);
    const Eigen::VectorXd& stored = run.store()[0].values;
    for (Eigen::Index i = 0; i < direct.size(); ++i)
      CHECK(std::abs(stored[i] - direct[i]) <= 1e-9 * std::max(1.0, std::abs(direct[i])));
  }
}

TEST_CASE("generation ledger bytes are three feature-width messages") {
  const StubJudge judge(1.0);
  ProtocolConfig cfg = base_config(0, 13);
  cfg.sketch.bins = 8;
  const int rows = 37;
  ProtocolRun run(two_parties(rows, 5), judge, cfg);
  const CandidateRef cand{"alice", "a0", "bob", "b0", TransformKind::sum};
  run.judge_a_qsa(cand, 1);
  const std::size_t before = run.network().total_bytes();
  run.generate_new_feature(cand, 1);
  const auto& ledger = run.network().ledger();

  std::size_t generation = 0;
  int masked = 0, mask_vectors = 0;
  for (const auto& e : ledger) {
    if (e.kind == MessageKind::MaskedFeature) {
      ++masked;
      generation += e.bytes;
    } else if (e.kind == MessageKind::MaskVectorPayload) {
      ++mask_vectors;
      generation += e.bytes;
    }
  }
  CHECK(masked == 2);        // dc1 -> dc2, dc2 -> server
  CHECK(mask_vectors == 1);  // dc1 -> server
  CHECK(generation == 3u * rows * 8u);
  CHECK(run.network().total_bytes() == before + 3u * rows * 8u);
}

TEST_CASE("masked payloads never expose the plaintext feature") {
  const StubJudge judge(1.0);
  ProtocolConfig cfg = base_config(2, 17);
  cfg.sketch.bins = 8;
  auto parties = two_parties(30, 33);
  const Eigen::VectorXd f_alice = parties[0].features[0].values;
  const Eigen::VectorXd f_bob = parties[1].features[0].values;
  ProtocolRun run(std::move(parties), judge, cfg, /*capture_transcript=*/true);
  run.run();

  int masked_seen = 0;
  for (const auto& msg : run.network().transcript()) {
    if (msg.kind != MessageKind::MaskedFeature && msg.kind != MessageKind::MaskVectorPayload) continue;
    ++masked_seen;
    const Eigen::VectorXd payload = decode_reals(msg.payload, 8);
    REQUIRE(payload.size() == f_alice.size());
    bool equals_a = true, equals_b = true;
    for (Eigen::Index i = 0; i < payload.size(); ++i) {
      equals_a = equals_a && payload[i] == f_alice[i];
      equals_b = equals_b && payload[i] == f_bob[i];
    }
    CHECK(!equals_a);
    CHECK(!equals_b);
  }
  CHECK(masked_seen > 0);
}

TEST_CASE("judge_unary_local keeps the feature at its owner") {
  ProtocolConfig cfg = base_config(0, 19);
  cfg.sketch.bins = 16;
  cfg.sketch.float_width = 4;

  // recommended: transform applied locally, one QSA upload + verdict
  {
    const StubJudge accept(1.0);
    ProtocolRun run(two_parties(25, 7), accept, cfg);
    const double conf = run.judge_unary_local("alice", "a0", TransformKind::square, 0);
    CHECK(conf == 1.0);
    const auto by_kind = bytes_by_kind(run.network().ledger());
    CHECK(by_kind.at(MessageKind::QsaPayload) == qsa_bytes(1, 16, 2, 4));
    CHECK(by_kind.at(MessageKind::Verdict) == 64);
    CHECK(by_kind.count(MessageKind::PlainFeature) == 0);
    CHECK(by_kind.count(MessageKind::MaskedFeature) == 0);
    // the new feature is now a local parent candidate
    CHECK(run.remaining_candidates() == 4 * 2 * 1);
  }

  // rejected: same judging bytes, nothing applied
  {
    const StubJudge reject(0.0);
    ProtocolRun run(two_parties(25, 7), reject, cfg);
    run.judge_unary_local("alice", "a0", TransformKind::square, 0);
    const auto by_kind = bytes_by_kind(run.network().ledger());
    CHECK(by_kind.at(MessageKind::QsaPayload) == qsa_bytes(1, 16, 2, 4));
    CHECK(run.remaining_candidates() == 4);
  }

  // judging bytes are independent of the row count
  {
    const StubJudge accept(1.0);
    ProtocolRun small(two_parties(25, 7), accept, cfg);
    ProtocolRun large(two_parties(2500, 7), accept, cfg);
    small.judge_unary_local("alice", "a0", TransformKind::log, 0);
    large.judge_unary_local("alice", "a0", TransformKind::log, 0);
    CHECK(small.network().total_bytes() == large.network().total_bytes());
  }
}

TEST_CASE("run executes the loop budget and stores on recommendation") {
  ProtocolConfig cfg = base_config(0, 23);
  cfg.sketch.bins = 8;

  {
    const StubJudge accept(1.0);
    ProtocolRun run(two_parties(20, 11, 3), accept, cfg);
    const auto result = run.run();
    CHECK(result.records.empty());
    CHECK(result.store.empty());
  }

  cfg.max_loop = 3;
  {
    const StubJudge accept(1.0);
    ProtocolRun run(two_parties(20, 11, 3), accept, cfg);
    const auto result = run.run();
    CHECK(result.records.size() == 3);
    CHECK(result.store.size() == 3);
    for (const auto& rec : result.records) CHECK(rec.recommended);
  }

  {
    const StubJudge reject(0.0);
    ProtocolRun run(two_parties(20, 11, 3), reject, cfg);
    const auto result = run.run();
    CHECK(result.records.size() == 3);
    CHECK(result.store.empty());
    const auto by_kind = bytes_by_kind(result.ledger);
    CHECK(by_kind.count(MessageKind::MaskedFeature) == 0);
    CHECK(by_kind.count(MessageKind::MaskVectorPayload) == 0);
    CHECK(by_kind.count(MessageKind::PlainFeature) == 0);
  }
}

TEST_CASE("run stops early when the candidate space is exhausted") {
  const StubJudge reject(0.0);
  ProtocolConfig cfg = base_config(50, 27);
  cfg.sketch.bins = 8;
  cfg.generated_parents = false;
  ProtocolRun run(two_parties(20, 13), reject, cfg);  // 4 candidates total
  const auto result = run.run();
  CHECK(result.records.size() == 4);
}

TEST_CASE("ledger decomposition: judging bytes are exactly linear in loops") {
  const StubJudge accept(1.0);
  ProtocolConfig cfg = base_config(12, 29);
  cfg.generated_parents = false;  // keeps every loop party-to-party
  ProtocolRun run(two_parties(60, 15, 4), accept, cfg);
  const auto result = run.run();
  const auto summary = result.summary();

  const std::size_t per_loop = qsa_bytes(1, 200, 2, 4) + qsa_bytes(2, 200, 2, 4);
  REQUIRE(summary.loops.size() == 12);
  for (std::size_t i = 0; i < summary.loops.size(); ++i)
    CHECK(summary.cumulative_judging[i] == per_loop * (i + 1));

  // total = judging + generation + control
  CHECK(summary.total_bytes == summary.cumulative_judging.back() + summary.cumulative_generation.back() +
                                   summary.cumulative_control.back());
}

TEST_CASE("replay: identical seeds give identical ledgers and stores") {
  const StubJudge judge(0.6);
  ProtocolConfig cfg = base_config(8, 31);
  cfg.sketch.bins = 16;
  cfg.conf_threshold = 0.5;
  ProtocolRun a(two_parties(40, 17, 2), judge, cfg);
  ProtocolRun b(two_parties(40, 17, 2), judge, cfg);
  const auto ra = a.run();
  const auto rb = b.run();
  REQUIRE(ra.ledger.size() == rb.ledger.size());
  for (std::size_t i = 0; i < ra.ledger.size(); ++i) {
    CHECK(ra.ledger[i].bytes == rb.ledger[i].bytes);
    CHECK(ra.ledger[i].from == rb.ledger[i].from);
    CHECK(ra.ledger[i].kind == rb.ledger[i].kind);
  }
  REQUIRE(ra.store.size() == rb.store.size());
  for (std::size_t i = 0; i < ra.store.size(); ++i) CHECK(ra.store[i].values == rb.store[i].values);
}

TEST_CASE("lineage graph is acyclic with parents from earlier loops") {
  const StubJudge accept(1.0);
  ProtocolConfig cfg = base_config(10, 37);
  cfg.sketch.bins = 8;
  cfg.generated_parents = true;
  ProtocolRun run(two_parties(30, 19, 2), accept, cfg);
  const auto result = run.run();
  REQUIRE(result.store.size() == 10);

  std::map<std::string, int> born_at;
  for (const auto& g : result.store) born_at[g.name] = g.loop;
  bool server_parent_seen = false;
  for (const auto& g : result.store) {
    for (const auto& [owner, feature] :
         {std::pair{g.lineage.owner_a, g.lineage.feature_a}, std::pair{g.lineage.owner_b, g.lineage.feature_b}}) {
      if (owner == std::string(kServerNode)) {
        server_parent_seen = true;
        REQUIRE(born_at.count(feature) == 1);
        CHECK(born_at.at(feature) < g.loop);
      }
    }
  }
  CHECK(server_parent_seen);  // generated features do re-enter the pool
}

TEST_CASE("model evaluation baseline grows its per-loop transmission") {
  ProtocolConfig cfg = base_config(10, 41);
  cfg.mode = RunMode::model_eval_baseline;
  cfg.eval_model.logreg.iterations = 60;
  cfg.eval_folds = 5;
  cfg.conf_threshold = 0.5;

  // product-structured data so some candidates are genuinely accepted
  Rng rng(43);
  auto parties = two_parties(60, 43, 2);
  std::vector<int> label(60);
  for (int i = 0; i < 60; ++i)
    label[static_cast<std::size_t>(i)] =
        parties[0].features[0].values[i] * parties[1].features[0].values[i] > 0 ? 1 : 0;
  parties[0].label = label;
  parties[1].label = label;

  const StubJudge unused(0.0);
  ProtocolRun run(std::move(parties), unused, cfg);
  const auto result = run.run();
  REQUIRE(!result.store.empty());

  // per-loop plain-feature increments step up after each acceptance
  std::map<int, std::size_t> plain_per_loop;
  for (const auto& e : result.ledger)
    if (e.kind == MessageKind::PlainFeature && e.from != std::string(kServerNode))
      plain_per_loop[e.loop] += e.bytes;
  std::size_t prev = 0;
  std::set<int> accepted_at;
  for (const auto& rec : result.records)
    if (rec.recommended) accepted_at.insert(rec.loop);
  for (const auto& [loop, bytes] : plain_per_loop) {
    if (prev > 0) {
      CHECK(bytes >= prev);
      if (accepted_at.count(loop - 1)) CHECK(bytes == prev + 60u * 8u);
    }
    prev = bytes;
  }

  // judged by evaluation: accepted candidates coincide with improvements
  for (const auto& rec : result.records) CHECK((rec.confidence == 0.0 || rec.confidence == 1.0));
}

TEST_CASE("he baseline charges ciphertext-expanded generation") {
  ProtocolConfig cfg = base_config(6, 47);
  cfg.sketch.bins = 16;
  cfg.mode = RunMode::he_model_baseline;
  cfg.generated_parents = false;  // keep every loop party-to-party for exact counting
  const int rows = 45;
  const StubJudge accept(1.0);
  ProtocolRun run(two_parties(rows, 21, 2), accept, cfg);
  const auto result = run.run();
  REQUIRE(result.store.size() == 6);

  std::size_t generation = 0;
  int messages = 0;
  for (const auto& e : result.ledger)
    if (e.kind == MessageKind::MaskedFeature) {
      generation += e.bytes;
      ++messages;
    }
  // three transmissions per accepted loop, each expanded 32x over
  // single-byte plaintext accounting
  CHECK(messages == 18);
  CHECK(generation == 6u * 3u * he_overhead_bytes(rows));
  CHECK(generation == 32u * (6u * 3u * rows * 1u));
}
