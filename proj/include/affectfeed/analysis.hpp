#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affectfeed/corpus.hpp"
#include "affectfeed/synth.hpp"
#include "affectfeed/taxonomy.hpp"

namespace affectfeed::analysis {

// Annotation options: the taxonomy affects followed by "other".
inline constexpr std::size_t kOptionCount = kTaxonomySize + 1;
std::string option_name(std::size_t option);

struct PostRatings {
    std::string post_id;
    std::vector<std::string> raters;
    std::vector<std::vector<double>> judgements;  // per rater, 0/1 per option
};

using RaterMatrix = std::vector<PostRatings>;

// Posts in order of first annotation, raters in file order.
RaterMatrix rater_matrix(std::span<const AnnotationRecord> annotations);

// Pearson r by the centered formula; empty for fewer than two items or a
// constant input.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct InterraterResult {
    double mean = 0.0;
    std::vector<std::pair<std::string, double>> per_rater;  // defined raters, sorted by id
    std::vector<std::string> excluded;                      // raters with undefined r
};

// For each rater, r between their judgements and the mean judgement of the
// other raters of the same post, over every (post, option) cell they share
// with at least one other rater; averaged over raters. Throws
// Error(UndefinedCorrelation) when no rater has a defined r.
InterraterResult interrater_correlation(const RaterMatrix& matrix);

// Binary (or real) columns keyed by post id.
struct LabelTable {
    std::vector<std::string> columns;
    std::map<std::string, std::vector<double>> rows;
};

struct CorrelationMatrix {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::optional<double>> cells;  // row-major
    std::size_t posts = 0;                     // overlap the cells were computed on

    const std::optional<double>& at(std::size_t r, std::size_t c) const { return cells[r * col_labels.size() + c]; }
    // Undefined cells are empty fields.
    std::string to_csv() const;
};

// Column-by-column Pearson r over the posts present in both tables.
// Throws Error(NoOverlap) when the tables share no post.
CorrelationMatrix pearson_matrix(const LabelTable& a, const LabelTable& b);

// Affects selected by at least k raters, one column per taxonomy affect.
LabelTable consensus_table(std::span<const AnnotationRecord> annotations, std::size_t k);
// 1 where the post has at least one event of the kind.
LabelTable engagement_table(const Corpus& corpus);
// One column per feeling seen at least `min_frequency` times; posts whose
// feeling falls below the floor are left out.
LabelTable feeling_table(std::span<const synth::PublisherFeeling> feelings, std::size_t min_frequency);

struct AgreementThreshold {
    std::size_t raters = 1;
    bool exact = false;  // "= raters" instead of ">= raters"

    std::string label() const;
    bool accepts(std::size_t support) const { return exact ? support == raters : support >= raters; }
};

std::vector<AgreementThreshold> default_thresholds();  // >=1, >=2, =3

struct AgreementRow {
    AgreementThreshold threshold;
    std::size_t posts = 0;
    double any_care = 0.0;  // percent
    double all_care = 0.0;
    double other = 0.0;
};

// Over posts with both annotations and a non-empty CARE label set. Human
// choices are compared in the comment-label view, so both kinds of anger
// count as the unsplit angered label; "other" and any affect outside the
// CARE set count as non-CARE labels.
std::vector<AgreementRow> care_agreement(std::span<const AnnotationRecord> annotations,
                                         const std::map<std::string, AffectSet>& care_labels,
                                         std::span<const AgreementThreshold> thresholds);
std::string agreement_to_csv(std::span<const AgreementRow> rows);

struct OptionStats {
    std::string option;
    std::size_t posts_1x = 0;  // posts where at least one rater chose it
    std::size_t posts_3x = 0;  // posts where at least three raters chose it
    double mean_support = 0.0;  // over posts_1x
    double sd_support = 0.0;
};

struct AnnotationStats {
    std::size_t posts = 0;
    std::size_t rater_posts = 0;
    double mean_selections = 0.0;
    std::vector<OptionStats> options;
};

// Throws Error(InvalidArgument) for an empty annotation set.
AnnotationStats annotation_stats(std::span<const AnnotationRecord> annotations);
std::string annotation_stats_to_csv(const AnnotationStats& stats);

}  // namespace affectfeed::analysis
