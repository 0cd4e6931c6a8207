#include "flfe/fednet.hpp"

#include <algorithm>
#include <fstream>

namespace flfe {

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::SketchPayload: return "SketchPayload";
    case MessageKind::QsaPayload: return "QsaPayload";
    case MessageKind::MaskedFeature: return "MaskedFeature";
    case MessageKind::MaskVectorPayload: return "MaskVectorPayload";
    case MessageKind::Instruction: return "Instruction";
    case MessageKind::Verdict: return "Verdict";
    case MessageKind::PlainFeature: return "PlainFeature";
  }
  return "?";
}

void Network::register_node(const std::string& name) {
  if (has_node(name)) throw std::invalid_argument("node already registered: " + name);
  nodes_.push_back(name);
}

bool Network::has_node(const std::string& name) const {
  return std::find(nodes_.begin(), nodes_.end(), name) != nodes_.end();
}

std::size_t Network::send(Message msg) {
  if (!has_node(msg.from)) throw std::invalid_argument("unknown sender: " + msg.from);
  if (!has_node(msg.to)) throw std::invalid_argument("unknown recipient: " + msg.to);
  if (msg.from == msg.to) throw std::invalid_argument("self-send is not allowed");
  msg.bytes = msg.payload.size();
  ledger_.push_back(LedgerEntry{msg.loop, msg.from, msg.to, msg.kind, msg.bytes});
  if (capture_) transcript_.push_back(msg);
  queues_[{msg.from, msg.to}].push_back(std::move(msg));
  return ledger_.size() - 1;
}

Message Network::receive(const std::string& from, const std::string& to) {
  auto it = queues_.find({from, to});
  if (it == queues_.end() || it->second.empty())
    throw std::logic_error("no message queued from " + from + " to " + to);
  Message msg = std::move(it->second.front());
  it->second.pop_front();
  return msg;
}

std::size_t Network::total_bytes() const {
  std::size_t total = 0;
  for (const auto& e : ledger_) total += e.bytes;
  return total;
}

std::size_t qsa_bytes(int arity, int bins, int classes, int float_width) {
  if (bins < 1) throw std::invalid_argument("qsa_bytes: bins must be positive");
  return static_cast<std::size_t>(arity) * static_cast<std::size_t>(classes) *
         static_cast<std::size_t>(bins) * static_cast<std::size_t>(float_width);
}

std::size_t he_overhead_bytes(std::int64_t rows, int plain_bits, int cipher_bits) {
  (void)plain_bits;  // the expansion is absolute: one value becomes cipher_bits
  if (rows < 0) throw std::invalid_argument("he_overhead_bytes: negative rows");
  return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cipher_bits) / 8;
}

std::size_t eval_overhead_bytes(std::int64_t rows, int feature_count, int float_width) {
  if (rows < 0 || feature_count < 0) throw std::invalid_argument("eval_overhead_bytes: negative counts");
  return static_cast<std::size_t>(rows) * static_cast<std::size_t>(feature_count) *
         static_cast<std::size_t>(float_width);
}

namespace {

enum class Category { judging, generation, control, plain };

Category category_of(MessageKind kind) {
  switch (kind) {
    case MessageKind::SketchPayload:
    case MessageKind::QsaPayload:
      return Category::judging;
    case MessageKind::MaskedFeature:
    case MessageKind::MaskVectorPayload:
      return Category::generation;
    case MessageKind::Instruction:
    case MessageKind::Verdict:
      return Category::control;
    case MessageKind::PlainFeature:
      return Category::plain;
  }
  return Category::control;
}

}  // namespace

LedgerSummary summarize_ledger(const std::vector<LedgerEntry>& ledger) {
  LedgerSummary s;
  std::map<int, std::array<std::size_t, 4>> by_loop;  // judging, generation, control, plain
  for (const auto& e : ledger) {
    s.total_bytes += e.bytes;
    s.per_kind[std::string(to_string(e.kind))] += e.bytes;
    s.per_edge[e.from + "->" + e.to] += e.bytes;
    s.per_loop[e.loop] += e.bytes;
    by_loop[e.loop][static_cast<std::size_t>(category_of(e.kind))] += e.bytes;
  }
  std::size_t judging = 0, generation = 0, control = 0, plain = 0, total = 0;
  for (const auto& [loop, cats] : by_loop) {
    s.loops.push_back(loop);
    judging += cats[0];
    generation += cats[1];
    control += cats[2];
    plain += cats[3];
    total += cats[0] + cats[1] + cats[2] + cats[3];
    s.cumulative_judging.push_back(judging);
    s.cumulative_generation.push_back(generation);
    s.cumulative_control.push_back(control);
    s.cumulative_plain.push_back(plain);
    s.cumulative_total.push_back(total);
  }
  return s;
}

void write_ledger_csv(const std::filesystem::path& path, const std::vector<LedgerEntry>& ledger) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write ledger csv " + path.string());
  out << "loop,from,to,kind,bytes\n";
  for (const auto& e : ledger)
    out << e.loop << ',' << e.from << ',' << e.to << ',' << to_string(e.kind) << ',' << e.bytes << '\n';
}

nlohmann::json summary_to_json(const LedgerSummary& s) {
  nlohmann::json doc;
  doc["total_bytes"] = s.total_bytes;
  doc["per_kind"] = s.per_kind;
  doc["per_edge"] = s.per_edge;
  nlohmann::json per_loop = nlohmann::json::object();
  for (const auto& [loop, bytes] : s.per_loop) per_loop[std::to_string(loop)] = bytes;
  doc["per_loop"] = per_loop;
  doc["series"] = {
      {"loops", s.loops},
      {"cumulative_total", s.cumulative_total},
      {"cumulative_judging", s.cumulative_judging},
      {"cumulative_generation", s.cumulative_generation},
      {"cumulative_control", s.cumulative_control},
      {"cumulative_plain", s.cumulative_plain},
  };
  return doc;
}

}  // namespace flfe
