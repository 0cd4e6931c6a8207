#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flfe/common.hpp"

namespace flfe {

enum class MessageKind {
  SketchPayload,
  QsaPayload,
  MaskedFeature,
  MaskVectorPayload,
  Instruction,
  Verdict,
  PlainFeature,
};

std::string_view to_string(MessageKind kind);

/// Control messages (Instruction, Verdict) carry no modelled content and
/// are charged a fixed size.
constexpr std::size_t kControlMessageBytes = 64;

struct Message {
  std::string from;
  std::string to;
  MessageKind kind = MessageKind::Instruction;
  std::size_t bytes = 0;  // always equals payload.size()
  int loop = 0;
  std::vector<std::uint8_t> payload;
};

struct LedgerEntry {
  int loop = 0;
  std::string from;
  std::string to;
  MessageKind kind = MessageKind::Instruction;
  std::size_t bytes = 0;
};

/// In-process transport between registered nodes with per-edge FIFO
/// delivery and an append-only byte ledger. Payloads are dropped from the
/// ledger; enable transcript capture to retain full message copies for
/// privacy audits.
class Network {
 public:
  explicit Network(bool capture_transcript = false) : capture_(capture_transcript) {}

  void register_node(const std::string& name);
  bool has_node(const std::string& name) const;

  /// Enqueues the message and appends a ledger entry; returns the ledger
  /// index as the delivery receipt. Rejects unknown nodes and self-sends
  /// without touching the ledger.
  std::size_t send(Message msg);

  /// Pops the oldest undelivered message on the (from, to) edge.
  Message receive(const std::string& from, const std::string& to);

  const std::vector<LedgerEntry>& ledger() const { return ledger_; }
  const std::vector<Message>& transcript() const { return transcript_; }
  std::size_t total_bytes() const;

 private:
  bool capture_;
  std::vector<std::string> nodes_;
  std::map<std::pair<std::string, std::string>, std::deque<Message>> queues_;
  std::vector<LedgerEntry> ledger_;
  std::vector<Message> transcript_;
};

/// Serialized size of a sketch payload: arity * classes * bins *
/// float_width bytes (classes is 2 under the one-vs-all convention).
std::size_t qsa_bytes(int arity, int bins, int classes, int float_width);

/// Analytic ciphertext size for transmitting one feature column under the
/// homomorphic-encryption baseline: each plaintext value of `plain_bits`
/// expands to `cipher_bits`.
std::size_t he_overhead_bytes(std::int64_t rows, int plain_bits = 8, int cipher_bits = 256);

/// Bytes for one judging loop of the model-evaluation baseline, which
/// re-transmits the whole current feature space.
std::size_t eval_overhead_bytes(std::int64_t rows, int feature_count, int float_width);

/// Byte-total rollup of a ledger. Category split: judging = sketch and
/// QSA payloads, generation = masked features and mask vectors, control =
/// instructions and verdicts, plain = plaintext feature transfers
/// (baseline modes only).
struct LedgerSummary {
  std::size_t total_bytes = 0;
  std::map<std::string, std::size_t> per_kind;
  std::map<std::string, std::size_t> per_edge;  // "from->to"
  std::map<int, std::size_t> per_loop;

  std::vector<int> loops;  // ascending loop indices present in the ledger
  std::vector<std::size_t> cumulative_total;
  std::vector<std::size_t> cumulative_judging;
  std::vector<std::size_t> cumulative_generation;
  std::vector<std::size_t> cumulative_control;
  std::vector<std::size_t> cumulative_plain;
};

LedgerSummary summarize_ledger(const std::vector<LedgerEntry>& ledger);

/// CSV export with columns loop,from,to,kind,bytes.
void write_ledger_csv(const std::filesystem::path& path, const std::vector<LedgerEntry>& ledger);

nlohmann::json summary_to_json(const LedgerSummary& summary);

}  // namespace flfe
