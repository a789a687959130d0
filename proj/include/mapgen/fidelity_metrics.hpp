#pragma once

#include <array>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mapgen/image.hpp"

namespace mapgen::metrics {

/// Mean over `classes` of |pred ∩ ref| / |pred ∪ ref|. Classes absent from both rasters are
/// skipped; throws DataError if none remain or the shapes differ.
double miou(const LabelImage& pred, const LabelImage& ref, std::span<const ClassId> classes);

/// Same, evaluating every class that occurs in either raster.
double miou(const LabelImage& pred, const LabelImage& ref);

enum class Label { kReal, kSynthetic };

Label parse_label(std::string_view s);
std::string_view label_name(Label l);

struct AssessmentRecord {
  std::string item_id;
  Label truth = Label::kReal;
  Label response = Label::kReal;
  int task = 1;  // 1, 2 or 3
  std::string style;
  std::string participant_id;
};

/// "real" is the positive class: TP = real judged real, FP = synthetic judged real,
/// FN = real judged synthetic.
struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool zero_denominator = false;  // some ratio was 0/0 and reported as 0
};

Prf prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

enum class Averaging {
  kPerParticipant,  // score each participant, then average the three numbers
  kPooled,          // one tally over all participants
};

struct AssessmentRow {
  std::string style;
  int task = 0;
  Prf score;
  std::size_t participants = 0;
  std::size_t records = 0;
};

/// One row per (style, task) group, sorted by style then task. Throws DataError for a task
/// outside 1..3 or an empty input.
std::vector<AssessmentRow> score_assessment(std::span<const AssessmentRecord> records,
                                            Averaging mode = Averaging::kPerParticipant);

/// CSV with header item_id,truth,response,task,style,participant_id.
std::vector<AssessmentRecord> read_assessment_csv(std::istream& in);

/// Similarity ratings on the 0..5 scale, averaged per style.
struct SimilarityRating {
  std::string style;
  std::string participant_id;
  double rating = 0.0;
};
std::map<std::string, double> mean_similarity(std::span<const SimilarityRating> ratings);
std::vector<SimilarityRating> read_similarity_csv(std::istream& in);

/// Metric rows x (style, task) columns, two decimals; a Similarity row when ratings are given.
std::string format_assessment_table(std::span<const AssessmentRow> rows,
                                    const std::map<std::string, double>& similarity = {});

struct SusResponse {
  std::array<int, 10> items{};
};

/// 2.5 * (sum over odd items of (x - 1) + sum over even items of (5 - x)); items are 1-based.
/// Throws DataError for an item outside 1..5.
double sus_response_score(const SusResponse& r);

struct SusSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t count = 0;
};

SusSummary sus_score(std::span<const SusResponse> responses);

/// One response per line: ten comma-separated integers; an optional non-numeric header line
/// and a leading participant column are ignored.
std::vector<SusResponse> read_sus_csv(std::istream& in);

}  // namespace mapgen::metrics
