#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affectfeed/corpus.hpp"
#include "affectfeed/taxonomy.hpp"

namespace affectfeed::dataset {

// Engagement kinds followed by the trainable affects; snooze is left out
// unless asked for.
class ClassSpace {
public:
    struct Entry {
        std::optional<EventKind> event;
        std::optional<Affect> affect;
        std::string name;
    };

    static ClassSpace standard(bool include_snooze = false);

    std::size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }
    const std::string& name(std::size_t i) const { return entries_.at(i).name; }
    std::optional<std::size_t> index_of(EventKind k) const;
    std::optional<std::size_t> index_of(Affect a) const;
    std::optional<std::size_t> index_of(std::string_view name) const;
    bool includes_snooze() const { return index_of(EventKind::Snooze).has_value(); }

private:
    std::vector<Entry> entries_;
};

using LabelMask = std::uint32_t;

inline constexpr std::uint8_t kFromEngagement = 1;
inline constexpr std::uint8_t kFromCare = 2;
inline constexpr std::uint8_t kFromHuman = 4;

std::string sources_to_string(std::uint8_t sources);
std::uint8_t parse_sources(std::string_view s);

struct LabeledExample {
    std::string post_id;
    std::string user_id;
    LabelMask labels = 0;  // bit i = class i of the ClassSpace
    std::uint8_t sources = 0;

    bool has(std::size_t cls) const { return (labels >> cls) & 1u; }
    friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

inline constexpr std::int64_t kSecondsPerDay = 86400;

// One row per (post, user) with at least one event of a class kind inside
// (as_of - window, as_of].
std::vector<LabeledExample> engagement_labels(const Corpus& corpus, const ClassSpace& classes, std::int64_t as_of,
                                              std::int64_t window_days = 90);

// One row (p, A, u) for every post p labeled with a trainable, non-negative
// affect A and every user u who liked or loved p.
std::vector<LabeledExample> personalize(const std::map<std::string, AffectSet>& affect_labels, const Corpus& corpus,
                                        const ClassSpace& classes, std::uint8_t source);

// Affects selected by at least k raters, per annotated post.
std::map<std::string, AffectSet> consensus(std::span<const AnnotationRecord> annotations, std::size_t k);

// Unions labels and sources of rows sharing (post, user); first-seen order.
std::vector<LabeledExample> merge_rows(std::span<const LabeledExample> rows);

enum class Split : std::uint8_t { Train, Validation, Test };
std::string_view split_name(Split s);

struct ClassCounts {
    std::array<std::size_t, 3> positives{};
    std::array<std::size_t, 3> negatives{};
};

struct SplitDataset {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> validation;
    std::vector<LabeledExample> test;
    std::uint64_t seed = 0;
    std::vector<ClassCounts> class_counts;  // per class, as sampled
    std::vector<std::string> warnings;

    const std::vector<LabeledExample>& part(Split s) const;
    std::vector<LabeledExample>& part(Split s);
    std::size_t size() const { return train.size() + validation.size() + test.size(); }
};

// For every class, per_class_n / 2 positives and as many negatives, drawn
// per split so each class is divided 80/10/10. Rows are assigned to one
// split up front, so a (post, user) row never lands in two splits.
SplitDataset assemble(std::span<const LabeledExample> rows, const ClassSpace& classes, std::size_t per_class_n,
                      std::uint64_t seed);

struct BuildParams {
    std::optional<std::int64_t> as_of;  // defaults to corpus max timestamp
    std::int64_t window_days = 90;
    std::size_t consensus_k = 3;
    std::size_t per_class_n = 1000;
    bool include_snooze = false;
    std::uint64_t seed = 0;
};

struct BuildResult {
    ClassSpace classes;
    std::vector<LabeledExample> rows;  // merged pool before sampling
    SplitDataset split;
};

// Engagement rows + personalized human consensus + personalized CARE
// labels, merged and assembled.
BuildResult build_dataset(const Corpus& corpus, const std::map<std::string, AffectSet>& care_labels,
                          const BuildParams& params);

std::string mask_to_string(LabelMask mask, std::size_t n_classes);
LabelMask parse_mask(std::string_view bits);

std::string dataset_to_jsonl(const SplitDataset& ds, const ClassSpace& classes);
// The class space is inferred from the mask width (23 or 24 with snooze).
std::pair<SplitDataset, ClassSpace> read_dataset(const std::filesystem::path& path);
std::string summary_csv(const SplitDataset& ds, const ClassSpace& classes);

}  // namespace affectfeed::dataset
