#include "flfe/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "flfe/rng.hpp"

namespace flfe {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

bool parse_real(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::vector<std::string> Table::numeric_feature_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns)
    if (c.kind == ColumnKind::numeric) out.push_back(c.name);
  return out;
}

const Column& Table::column(const std::string& name) const {
  for (const auto& c : columns)
    if (c.name == name) return c;
  throw DataError("unknown column: " + name);
}

Eigen::MatrixXd Table::numeric_matrix() const {
  std::vector<const Column*> numeric;
  for (const auto& c : columns)
    if (c.kind == ColumnKind::numeric) numeric.push_back(&c);
  Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(numeric.size()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) = numeric[static_cast<std::size_t>(j)]->values;
  return x;
}

Table load_table(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path.string());
  const std::vector<std::string> header = split_csv_line(line);

  int label_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == label_column) label_idx = static_cast<int>(i);
  if (label_idx < 0) throw DataError("missing label column '" + label_column + "' in " + path.string());

  std::vector<std::vector<std::string>> cells(header.size());
  Eigen::Index rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto row = split_csv_line(line);
    if (row.size() != header.size())
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, got " + std::to_string(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) cells[i].push_back(std::move(row[i]));
    ++rows;
  }
  if (rows == 0) throw DataError("no data rows in " + path.string());

  Table t;
  t.name = path.stem().string();
  t.rows = rows;

  // dense label ids in first-occurrence order
  std::map<std::string, int> label_ids;
  t.label.reserve(static_cast<std::size_t>(rows));
  for (const auto& cell : cells[static_cast<std::size_t>(label_idx)]) {
    auto [it, inserted] = label_ids.try_emplace(cell, static_cast<int>(label_ids.size()));
    t.label.push_back(it->second);
    (void)inserted;
  }
  t.n_classes = static_cast<int>(label_ids.size());
  if (t.n_classes < 2) throw DataError("label column has fewer than 2 distinct values in " + path.string());

  for (std::size_t i = 0; i < header.size(); ++i) {
    if (static_cast<int>(i) == label_idx) continue;
    const auto& col_cells = cells[i];
    bool numeric = true;
    bool has_empty = false;
    std::vector<double> parsed(col_cells.size());
    for (std::size_t r = 0; r < col_cells.size(); ++r) {
      if (col_cells[r].empty()) {
        has_empty = true;
        continue;
      }
      if (!parse_real(col_cells[r], parsed[r])) {
        numeric = false;
        break;
      }
    }
    Column c;
    c.name = header[i];
    if (numeric) {
      if (has_empty)
        throw DataError("numeric column '" + c.name + "' has empty cells in " + path.string());
      c.kind = ColumnKind::numeric;
      c.values = Eigen::Map<Eigen::VectorXd>(parsed.data(), static_cast<Eigen::Index>(parsed.size()));
    } else {
      c.kind = ColumnKind::discrete;
      std::map<std::string, int> cat_ids;
      c.values.resize(rows);
      for (std::size_t r = 0; r < col_cells.size(); ++r) {
        auto [it, ins] = cat_ids.try_emplace(col_cells[r], static_cast<int>(cat_ids.size()));
        c.values[static_cast<Eigen::Index>(r)] = it->second;
        (void)ins;
      }
    }
    t.columns.push_back(std::move(c));
  }
  return t;
}

std::vector<PartyView> vertical_split(const Table& table, const PartyAssignment& assignment) {
  std::set<std::string> seen;
  std::vector<PartyView> parties;
  int id = 0;
  for (const auto& [party_name, feature_names] : assignment) {
    PartyView p;
    p.party_id = id++;
    p.name = party_name;
    p.label = table.label;
    p.n_classes = table.n_classes;
    for (const auto& fname : feature_names) {
      if (!seen.insert(fname).second)
        throw std::invalid_argument("feature assigned to more than one party: " + fname);
      const Column& c = table.column(fname);
      if (c.kind != ColumnKind::numeric)
        throw std::invalid_argument("discrete column cannot be assigned to a party: " + fname);
      p.features.push_back(FeatureColumn{fname, party_name, c.values});
    }
    parties.push_back(std::move(p));
  }
  return parties;
}

std::uint64_t search_space_size(const std::vector<std::uint64_t>& m_per_party, std::uint64_t binary_kinds) {
  std::uint64_t sum = 0, sum_sq = 0;
  for (std::uint64_t m : m_per_party) {
    sum += m;
    sum_sq += m * m;
  }
  return binary_kinds * (sum * sum - sum_sq) / 2;
}

std::vector<Fold> kfold_indices(Eigen::Index rows, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold_indices: k must be at least 2");
  if (rows < k) throw std::invalid_argument("kfold_indices: rows < k");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<Fold> folds(static_cast<std::size_t>(k));
  const Eigen::Index base = rows / k;
  const Eigen::Index extra = rows % k;
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const Eigen::Index size = base + (f < extra ? 1 : 0);
    auto& fold = folds[static_cast<std::size_t>(f)];
    fold.test.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                     order.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(size)));
    pos += static_cast<std::size_t>(size);
  }
  for (int f = 0; f < k; ++f) {
    auto& fold = folds[static_cast<std::size_t>(f)];
    std::set<Eigen::Index> in_test(fold.test.begin(), fold.test.end());
    for (Eigen::Index r = 0; r < rows; ++r)
      if (!in_test.count(r)) fold.train.push_back(r);
    std::sort(fold.test.begin(), fold.test.end());
  }
  return folds;
}

}  // namespace flfe
