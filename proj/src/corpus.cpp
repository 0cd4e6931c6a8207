#include "flfe/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flfe/rng.hpp"
#include "flfe/smote.hpp"

namespace flfe {

using nlohmann::json;

std::pair<Usefulness, double> label_candidate(const Eigen::MatrixXd& parents,
                                              const Eigen::VectorXd& new_feature,
                                              const std::vector<int>& labels, const LabelingConfig& cfg,
                                              std::uint64_t seed) {
  if (parents.rows() != new_feature.size() || parents.rows() != static_cast<Eigen::Index>(labels.size()))
    throw std::invalid_argument("label_candidate: shape mismatch");
  Eigen::MatrixXd with_new(parents.rows(), parents.cols() + 1);
  with_new.leftCols(parents.cols()) = parents;
  with_new.col(parents.cols()) = new_feature;
  // one seed for both evaluations so they share the fold split
  const std::uint64_t cv_seed = derive_seed(seed, "cv");
  const double before = cv_f1(cfg.base_model, parents, labels, cfg.cv_folds, cv_seed);
  const double after = cv_f1(cfg.base_model, with_new, labels, cfg.cv_folds, cv_seed);
  const double improvement = after - before;
  return {improvement >= cfg.improvement_threshold ? Usefulness::useful : Usefulness::useless, improvement};
}

namespace {

std::vector<int> class_splits(int n_classes) {
  // binary problems are already one-vs-all; multi-class yields one split
  // per class
  if (n_classes == 2) return {1};
  std::vector<int> out(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) out[static_cast<std::size_t>(c)] = c;
  return out;
}

struct CandidateParents {
  std::vector<const Column*> cols;
  std::vector<std::string> names;
};

std::string parents_tag(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    out += n;
    out += '|';
  }
  return out;
}

bool sample_less(const CorpusSample& a, const CorpusSample& b) {
  const auto key = [](const CorpusSample& s) {
    return std::make_tuple(std::string(to_string(s.transform)), s.meta.synthetic, s.meta.dataset,
                           parents_tag(s.meta.parents), s.meta.positive_class, s.meta.crop);
  };
  return key(a) < key(b);
}

}  // namespace

std::vector<CorpusSample> generate_corpus(const std::vector<Table>& datasets,
                                          const std::vector<TransformKind>& kinds,
                                          const SketchConfig& sketch_cfg, const LabelingConfig& labeling,
                                          std::uint64_t seed, CorpusReport* report) {
  if (datasets.empty()) throw std::invalid_argument("generate_corpus: no datasets");

  std::vector<CorpusSample> samples;
  CorpusReport local_report;
  CorpusReport& rep = report ? *report : local_report;

  for (const Table& table : datasets) {
    std::vector<const Column*> numeric;
    for (const auto& c : table.columns)
      if (c.kind == ColumnKind::numeric) numeric.push_back(&c);
    const auto splits = class_splits(table.n_classes);

    for (TransformKind kind : kinds) {
      std::vector<CandidateParents> candidates;
      if (arity(kind) == 1) {
        for (const Column* c : numeric) candidates.push_back({{c}, {c->name}});
      } else {
        for (std::size_t i = 0; i < numeric.size(); ++i)
          for (std::size_t j = 0; j < numeric.size(); ++j) {
            if (i == j) continue;
            if (commutative(kind) && i > j) continue;  // unordered for sum, multiplication
            candidates.push_back({{numeric[i], numeric[j]}, {numeric[i]->name, numeric[j]->name}});
          }
      }

      for (const auto& cand : candidates) {
        ++rep.candidates;
        const std::uint64_t cand_seed =
            derive_seed(seed, table.name + "/" + std::string(to_string(kind)) + "/" + parents_tag(cand.names));
        try {
          Eigen::VectorXd new_feature =
              arity(kind) == 1 ? apply_unary(kind, cand.cols[0]->values, table.label)
                               : apply_binary(kind, cand.cols[0]->values, cand.cols[1]->values);
          const auto [label, improvement] = label_candidate(
              arity(kind) == 1
                  ? Eigen::MatrixXd(cand.cols[0]->values)
                  : [&] {
                      Eigen::MatrixXd m(table.rows, 2);
                      m.col(0) = cand.cols[0]->values;
                      m.col(1) = cand.cols[1]->values;
                      return m;
                    }(),
              new_feature, table.label, labeling, cand_seed);

          // crop index 0 is the full-row sample; crops re-sketch a random
          // row subset under the same label
          for (int crop = 0; crop <= labeling.crop_count; ++crop) {
            std::vector<Eigen::Index> rows_subset;
            std::vector<int> sub_labels = table.label;
            if (crop > 0) {
              Rng crop_rng(derive_seed(cand_seed, "crop-rate", static_cast<std::uint64_t>(crop)));
              const double rate = crop_rng.uniform(labeling.crop_range.first, labeling.crop_range.second);
              rows_subset = crop_indices(table.rows, rate,
                                         derive_seed(cand_seed, "crop-rows", static_cast<std::uint64_t>(crop)));
              sub_labels.clear();
              sub_labels.reserve(rows_subset.size());
              for (Eigen::Index r : rows_subset) sub_labels.push_back(table.label[static_cast<std::size_t>(r)]);
            }
            auto take = [&](const Eigen::VectorXd& v) {
              if (crop == 0) return v;
              Eigen::VectorXd out(static_cast<Eigen::Index>(rows_subset.size()));
              for (std::size_t i = 0; i < rows_subset.size(); ++i)
                out[static_cast<Eigen::Index>(i)] = v[rows_subset[i]];
              return out;
            };

            for (int split : splits) {
              CorpusSample s;
              s.transform = kind;
              s.label = label;
              s.meta = SampleMeta{table.name, cand.names, split, improvement, crop, false};
              if (arity(kind) == 1) {
                s.qsa = build_qsa(take(cand.cols[0]->values), sub_labels, split, sketch_cfg).flatten();
              } else {
                s.qsa = build_qsa(take(cand.cols[0]->values), take(cand.cols[1]->values), sub_labels, split,
                                  sketch_cfg)
                            .flatten();
              }
              samples.push_back(std::move(s));
            }
          }
        } catch (const std::exception& e) {
          ++rep.skipped;
          rep.skipped_notes.push_back(table.name + "/" + std::string(to_string(kind)) + "/" +
                                      parents_tag(cand.names) + ": " + e.what());
        }
      }
    }
  }

  // per-kind SMOTE balancing of the minority label
  for (TransformKind kind : kinds) {
    std::vector<const CorpusSample*> useful, useless;
    for (const auto& s : samples) {
      if (s.transform != kind) continue;
      (s.label == Usefulness::useful ? useful : useless).push_back(&s);
    }
    if (useful.empty() || useless.empty()) continue;
    const bool minority_useful = useful.size() < useless.size();
    const auto& minority = minority_useful ? useful : useless;
    const auto& majority = minority_useful ? useless : useful;
    const auto target = static_cast<int>(
        std::llround(labeling.smote_target_ratio * static_cast<double>(majority.size())));
    const int n_new = target - static_cast<int>(minority.size());
    if (n_new <= 0 || minority.size() < 2) continue;

    std::vector<Eigen::VectorXd> points;
    points.reserve(minority.size());
    for (const auto* s : minority) points.push_back(s->qsa);
    const int k_nn = std::min<int>(5, static_cast<int>(minority.size()) - 1);
    auto synthetic = smote(points, n_new, k_nn,
                           derive_seed(seed, "smote/" + std::string(to_string(kind))));
    int idx = 0;
    for (auto& v : synthetic) {
      CorpusSample s;
      s.transform = kind;
      s.label = minority_useful ? Usefulness::useful : Usefulness::useless;
      s.qsa = std::move(v);
      s.meta = SampleMeta{"smote", {}, idx++, 0.0, 0, true};
      samples.push_back(std::move(s));
    }
  }

  std::sort(samples.begin(), samples.end(), sample_less);

  for (const auto& s : samples) {
    auto& counts = rep.per_kind[std::string(to_string(s.transform))];
    if (s.meta.synthetic)
      ++counts["synthetic"];
    ++counts[s.label == Usefulness::useful ? "useful" : "useless"];
  }
  return samples;
}

namespace {

json sample_to_json(const CorpusSample& s) {
  json qsa = json::array();
  for (Eigen::Index i = 0; i < s.qsa.size(); ++i) qsa.push_back(s.qsa[i]);
  return json{
      {"transform", std::string(to_string(s.transform))},
      {"qsa", std::move(qsa)},
      {"label", s.label == Usefulness::useful ? "useful" : "useless"},
      {"meta",
       {{"dataset", s.meta.dataset},
        {"parents", s.meta.parents},
        {"positive_class", s.meta.positive_class},
        {"improvement", s.meta.improvement},
        {"crop", s.meta.crop},
        {"synthetic", s.meta.synthetic}}},
  };
}

CorpusSample sample_from_json(const json& doc) {
  CorpusSample s;
  const auto kind = transform_from_string(doc.at("transform").get<std::string>());
  if (!kind) throw DataError("corpus: unknown transform name");
  s.transform = *kind;
  const auto& qsa = doc.at("qsa");
  s.qsa.resize(static_cast<Eigen::Index>(qsa.size()));
  for (std::size_t i = 0; i < qsa.size(); ++i) s.qsa[static_cast<Eigen::Index>(i)] = qsa[i].get<double>();
  const auto label = doc.at("label").get<std::string>();
  if (label != "useful" && label != "useless") throw DataError("corpus: bad label " + label);
  s.label = label == "useful" ? Usefulness::useful : Usefulness::useless;
  const auto& meta = doc.at("meta");
  s.meta.dataset = meta.at("dataset").get<std::string>();
  s.meta.parents = meta.at("parents").get<std::vector<std::string>>();
  s.meta.positive_class = meta.at("positive_class").get<int>();
  s.meta.improvement = meta.at("improvement").get<double>();
  s.meta.crop = meta.at("crop").get<int>();
  s.meta.synthetic = meta.at("synthetic").get<bool>();
  return s;
}

}  // namespace

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusSample>& samples) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  for (const auto& s : samples) out << sample_to_json(s).dump() << "\n";
}

std::vector<CorpusSample> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  std::vector<CorpusSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      samples.push_back(sample_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return samples;
}

std::string corpus_fingerprint(const std::vector<CorpusSample>& samples, TransformKind kind) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& s : samples) {
    if (s.transform != kind) continue;
    mix(sample_to_json(s).dump());
    mix("\n");
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

JudgeTrainingOutcome train_all_judges(const std::vector<CorpusSample>& samples, const TrainHyper& hyper) {
  if (samples.empty()) throw std::invalid_argument("train_all_judges: empty corpus");
  JudgeTrainingOutcome outcome;
  for (TransformKind kind : all_transforms()) {
    std::vector<const CorpusSample*> subset;
    for (const auto& s : samples)
      if (s.transform == kind) subset.push_back(&s);
    if (subset.empty()) continue;
    bool has_useful = false, has_useless = false;
    for (const auto* s : subset)
      (s->label == Usefulness::useful ? has_useful : has_useless) = true;
    if (!has_useful || !has_useless) {
      outcome.skipped_kinds.push_back(std::string(to_string(kind)));
      continue;
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(subset.size()), subset[0]->qsa.size());
    std::vector<int> y(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
      if (subset[i]->qsa.size() != x.cols())
        throw DataError("corpus: inconsistent qsa length for kind " + std::string(to_string(kind)));
      x.row(static_cast<Eigen::Index>(i)) = subset[i]->qsa.transpose();
      y[i] = static_cast<int>(subset[i]->label);
    }
    TrainHyper kind_hyper = hyper;
    kind_hyper.seed = derive_seed(hyper.seed, "judge/" + std::string(to_string(kind)));
    outcome.judges.emplace(kind, train_judge(kind, x, y, kind_hyper));
  }
  return outcome;
}

}  // namespace flfe
