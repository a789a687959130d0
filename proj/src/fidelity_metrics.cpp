#include "mapgen/fidelity_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include "mapgen/classes.hpp"
#include "mapgen/errors.hpp"

namespace mapgen::metrics {

double miou(const LabelImage& pred, const LabelImage& ref, std::span<const ClassId> classes) {
  require_same_shape(pred, ref, "miou");
  std::array<std::size_t, 256> inter{}, uni{};
  const auto p = pred.pixels();
  const auto r = ref.pixels();
  std::array<bool, 256> wanted{};
  for (ClassId c : classes) wanted[c] = true;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == r[i]) {
      ++inter[p[i]];
      ++uni[p[i]];
    } else {
      ++uni[p[i]];
      ++uni[r[i]];
    }
  }
  double sum = 0.0;
  int n = 0;
  for (int c = 0; c < 256; ++c) {
    if (!wanted[c] || uni[c] == 0) continue;
    sum += static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
    ++n;
  }
  if (n == 0) throw DataError("miou undefined: every evaluated class is absent from both rasters");
  return sum / n;
}

double miou(const LabelImage& pred, const LabelImage& ref) {
  std::vector<ClassId> all(256);
  for (int c = 0; c < 256; ++c) all[c] = static_cast<ClassId>(c);
  return miou(pred, ref, all);
}

Label parse_label(std::string_view s) {
  if (s == "real") return Label::kReal;
  if (s == "synthetic") return Label::kSynthetic;
  throw DataError("unknown label '" + std::string(s) + "' (expected real or synthetic)");
}

std::string_view label_name(Label l) { return l == Label::kReal ? "real" : "synthetic"; }

Prf prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Prf s;
  if (tp + fp > 0)
    s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  else
    s.zero_denominator = true;
  if (tp + fn > 0)
    s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  else
    s.zero_denominator = true;
  if (s.precision + s.recall > 0.0)
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  else
    s.zero_denominator = true;
  return s;
}

namespace {

struct Tally {
  std::size_t tp = 0, fp = 0, fn = 0;
  void add(const AssessmentRecord& r) {
    if (r.response != Label::kReal && r.truth != Label::kReal) return;
    if (r.truth == Label::kReal && r.response == Label::kReal)
      ++tp;
    else if (r.response == Label::kReal)
      ++fp;
    else
      ++fn;
  }
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

int parse_int(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("bad ") + what + " '" + s + "'");
  }
}

}  // namespace

std::vector<AssessmentRow> score_assessment(std::span<const AssessmentRecord> records, Averaging mode) {
  if (records.empty()) throw DataError("no assessment records");
  using Key = std::pair<std::string, int>;
  std::map<Key, std::map<std::string, Tally>> per;
  std::map<Key, std::size_t> counts;
  for (const auto& r : records) {
    if (r.task < 1 || r.task > 3) throw DataError("task must be 1, 2 or 3 (item " + r.item_id + ")");
    const Key k{r.style, r.task};
    per[k][mode == Averaging::kPooled ? std::string() : r.participant_id].add(r);
    ++counts[k];
  }
  std::vector<AssessmentRow> rows;
  for (const auto& [key, parts] : per) {
    AssessmentRow row;
    row.style = key.first;
    row.task = key.second;
    row.records = counts[key];
    for (const auto& [pid, t] : parts) {
      const Prf s = prf_from_counts(t.tp, t.fp, t.fn);
      row.score.precision += s.precision;
      row.score.recall += s.recall;
      row.score.f1 += s.f1;
      row.score.zero_denominator = row.score.zero_denominator || s.zero_denominator;
    }
    const double n = static_cast<double>(parts.size());
    row.score.precision /= n;
    row.score.recall /= n;
    row.score.f1 /= n;
    std::set<std::string> ids;
    for (const auto& r : records)
      if (r.style == key.first && r.task == key.second) ids.insert(r.participant_id);
    row.participants = ids.size();
    rows.push_back(row);
  }
  return rows;
}

std::vector<AssessmentRecord> read_assessment_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty assessment file");
  const auto header = split_csv(line);
  const std::vector<std::string> expected = {"item_id", "truth", "response", "task", "style", "participant_id"};
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& name : expected)
    if (!col.count(name)) throw DataError("assessment CSV lacks column '" + name + "'");
  std::vector<AssessmentRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv(line);
    if (f.size() < header.size()) throw DataError("assessment CSV line " + std::to_string(lineno) + " is short");
    AssessmentRecord r;
    r.item_id = f[col["item_id"]];
    r.truth = parse_label(f[col["truth"]]);
    r.response = parse_label(f[col["response"]]);
    r.task = parse_int(f[col["task"]], "task");
    r.style = f[col["style"]];
    r.participant_id = f[col["participant_id"]];
    out.push_back(std::move(r));
  }
  return out;
}

std::map<std::string, double> mean_similarity(std::span<const SimilarityRating> ratings) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& r : ratings) {
    if (!(r.rating >= 0.0 && r.rating <= 5.0)) throw DataError("similarity rating outside 0..5");
    acc[r.style].first += r.rating;
    ++acc[r.style].second;
  }
  std::map<std::string, double> out;
  for (const auto& [style, s] : acc) out[style] = s.first / s.second;
  return out;
}

std::vector<SimilarityRating> read_similarity_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* name : {"style", "participant_id", "rating"})
    if (!col.count(name)) throw DataError(std::string("similarity CSV lacks column '") + name + "'");
  std::vector<SimilarityRating> out;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv(line);
    if (f.size() < header.size()) throw DataError("short similarity CSV line");
    SimilarityRating r;
    r.style = f[col["style"]];
    r.participant_id = f[col["participant_id"]];
    try {
      r.rating = std::stod(f[col["rating"]]);
    } catch (const std::exception&) {
      throw DataError("bad similarity rating '" + f[col["rating"]] + "'");
    }
    out.push_back(r);
  }
  return out;
}

std::string format_assessment_table(std::span<const AssessmentRow> rows, const std::map<std::string, double>& similarity) {
  std::vector<std::string> styles;
  for (const auto& r : rows)
    if (std::find(styles.begin(), styles.end(), r.style) == styles.end()) styles.push_back(r.style);
  auto find = [&](const std::string& s, int task) -> const AssessmentRow* {
    for (const auto& r : rows)
      if (r.style == s && r.task == task) return &r;
    return nullptr;
  };
  std::ostringstream out;
  char buf[64];
  out << "Metric    ";
  for (const auto& s : styles) {
    std::snprintf(buf, sizeof buf, "| %-22s", s.c_str());
    out << buf;
  }
  out << "\n          ";
  for (std::size_t i = 0; i < styles.size(); ++i) out << "| Task 1 Task 2 Task 3 ";
  out << "\n";
  const char* names[] = {"Precision", "Recall", "F1"};
  for (int m = 0; m < 3; ++m) {
    std::snprintf(buf, sizeof buf, "%-10s", names[m]);
    out << buf;
    for (const auto& s : styles) {
      out << "|";
      for (int task = 1; task <= 3; ++task) {
        const auto* r = find(s, task);
        if (!r) {
          out << "    -- ";
          continue;
        }
        const double v = m == 0 ? r->score.precision : m == 1 ? r->score.recall : r->score.f1;
        std::snprintf(buf, sizeof buf, "%7.2f", v);
        out << buf;
      }
      out << " ";
    }
    out << "\n";
  }
  if (!similarity.empty()) {
    out << "Similarity";
    for (const auto& s : styles) {
      const auto it = similarity.find(s);
      if (it == similarity.end())
        out << "|    --                ";
      else {
        std::snprintf(buf, sizeof buf, "| %5.2f                 ", it->second);
        out << buf;
      }
    }
    out << "\n";
  }
  return out.str();
}

double sus_response_score(const SusResponse& r) {
  int total = 0;
  for (int i = 0; i < 10; ++i) {
    const int v = r.items[i];
    if (v < 1 || v > 5) throw DataError("SUS item " + std::to_string(i + 1) + " = " + std::to_string(v) + " outside 1..5");
    total += (i % 2 == 0) ? v - 1 : 5 - v;
  }
  return total * 2.5;
}

SusSummary sus_score(std::span<const SusResponse> responses) {
  SusSummary s;
  s.count = responses.size();
  if (responses.empty()) return s;
  std::vector<double> scores;
  for (const auto& r : responses) scores.push_back(sus_response_score(r));
  double sum = 0.0;
  for (double v : scores) sum += v;
  s.mean = sum / scores.size();
  double var = 0.0;
  for (double v : scores) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / scores.size());
  return s;
}

std::vector<SusResponse> read_sus_csv(std::istream& in) {
  std::vector<SusResponse> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto f = split_csv(line);
    auto numeric = [](const std::string& s) {
      return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '-'; });
    };
    if (first && !std::all_of(f.begin() + (f.size() == 11 ? 1 : 0), f.end(), numeric)) {
      first = false;
      continue;
    }
    first = false;
    if (f.size() == 11) f.erase(f.begin());
    if (f.size() != 10) throw DataError("SUS response needs exactly 10 items, got " + std::to_string(f.size()));
    SusResponse r;
    for (int i = 0; i < 10; ++i) r.items[i] = parse_int(f[i], "SUS item");
    sus_response_score(r);
    out.push_back(r);
  }
  return out;
}

}  // namespace mapgen::metrics
