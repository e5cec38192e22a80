#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "affectfeed/corpus.hpp"
#include "affectfeed/taxonomy.hpp"

namespace affectfeed::care {

inline constexpr std::string_view kSlot = "{kw}";

// A token template with exactly one keyword slot, e.g. "what a {kw}".
class CarePattern {
public:
    // Throws Error(InvalidArgument) unless the template tokenizes to at least
    // one literal plus exactly one slot.
    static CarePattern parse(std::string id, std::string_view template_text);

    const std::string& id() const { return id_; }
    const std::vector<std::string>& prefix() const { return prefix_; }
    const std::vector<std::string>& suffix() const { return suffix_; }
    std::size_t min_match_tokens() const { return prefix_.size() + suffix_.size() + 1; }
    std::string template_text() const;

    friend bool operator==(const CarePattern&, const CarePattern&) = default;

private:
    std::string id_;
    std::vector<std::string> prefix_;
    std::vector<std::string> suffix_;
};

// keyword (single lowercase token) -> affects
using Lexicon = std::map<std::string, AffectSet>;

struct Seeds {
    std::vector<CarePattern> patterns;
    Lexicon lexicon;
};

// The shipped seed set; data/seed_patterns.tsv and data/seed_lexicon.tsv
// hold the same entries.
const Seeds& default_seeds();

struct PatternMatch {
    std::size_t pattern;  // index into the pattern list
    std::size_t begin;    // first token of the match
    std::size_t slot;     // token position of the keyword
    std::size_t end;      // one past the last token
};

std::vector<PatternMatch> find_matches(const std::vector<std::string>& tokens,
                                       std::span<const CarePattern> patterns);

AffectSet match_tokens(const std::vector<std::string>& tokens, std::span<const CarePattern> patterns,
                       const Lexicon& lexicon);
AffectSet match_comment(std::string_view comment, std::span<const CarePattern> patterns,
                        const Lexicon& lexicon);

// Affects supported by at least `min_support` comments.
AffectSet aggregate(std::span<const AffectSet> comment_labels, std::size_t min_support);
AffectSet label_post(std::span<const std::string> comments, std::span<const CarePattern> patterns,
                     const Lexicon& lexicon, std::size_t min_support);

struct LabeledPost {
    AffectSet labels;
    std::vector<std::string> comments;
};

// affect -> n-gram (space-joined tokens) -> occurrence count
class NgramStats {
public:
    void add(Affect a, const std::string& ngram, std::uint64_t n = 1) { counts_[a][ngram] += n; }
    std::uint64_t count(Affect a, const std::string& ngram) const;
    const std::map<Affect, std::unordered_map<std::string, std::uint64_t>>& by_affect() const { return counts_; }
    bool empty() const { return counts_.empty(); }

private:
    std::map<Affect, std::unordered_map<std::string, std::uint64_t>> counts_;
};

// Counts n-grams (1..n_max) of the comments of labeled posts that produce
// no label, skipping the literal tokens of any pattern match in them; each
// comment counts toward every affect of its post.
NgramStats mine_ngrams(std::span<const LabeledPost> posts, std::span<const CarePattern> patterns,
                       const Lexicon& lexicon, std::size_t n_max);

struct ExpandThresholds {
    std::uint64_t min_freq = 20;
    std::size_t min_classes_for_pattern = 2;
    double purity_for_keyword = 0.8;
    // Shortest n-gram accepted as a new pattern prefix.
    std::size_t min_pattern_tokens = 2;
};

enum class ChangeKind { NewPattern, NewKeyword, Conflict };
std::string_view change_kind_name(ChangeKind k);

struct ChangelogEntry {
    std::size_t iteration = 0;
    ChangeKind kind = ChangeKind::NewPattern;
    std::string ngram;
    std::string pattern_id;          // NewPattern only
    std::optional<Affect> affect;    // NewKeyword / Conflict
    AffectSet existing;              // Conflict: current lexicon mapping
    std::map<Affect, std::uint64_t> evidence;
    std::uint64_t total = 0;

    friend bool operator==(const ChangelogEntry&, const ChangelogEntry&) = default;
};

struct ExpandResult {
    std::vector<CarePattern> patterns;
    Lexicon lexicon;
    std::vector<ChangelogEntry> changelog;
};

ExpandResult expand(std::span<const CarePattern> patterns, const Lexicon& lexicon, const NgramStats& stats,
                    const ExpandThresholds& thresholds);

struct CareParams {
    std::size_t min_support = 2;
    std::size_t n_max = 3;
    ExpandThresholds thresholds;
};

struct StopRule {
    std::size_t max_iters = 2;
    std::size_t target_labels = std::numeric_limits<std::size_t>::max();
};

struct IterationReport {
    std::size_t iteration = 0;
    std::size_t patterns = 0;
    std::size_t keywords = 0;
    std::size_t labeled_posts = 0;
    std::size_t labels = 0;
    std::size_t added_patterns = 0;
    std::size_t added_keywords = 0;
    std::size_t conflicts = 0;
};

struct CareRun {
    std::vector<AffectSet> labels;  // aligned with corpus.posts()
    std::vector<CarePattern> patterns;
    Lexicon lexicon;
    std::vector<ChangelogEntry> changelog;
    std::vector<IterationReport> reports;  // reports[0] is the seed pass
    std::vector<std::vector<AffectSet>> label_history;  // labels after each pass
};

// Labels with the seeds, then alternates mining+expansion and relabeling
// until nothing is added, max_iters expansions ran, or target_labels is met.
CareRun run_care(const Corpus& corpus, const Seeds& seeds, const CareParams& params, const StopRule& stop);

std::vector<AffectSet> label_corpus(const Corpus& corpus, std::span<const CarePattern> patterns,
                                    const Lexicon& lexicon, std::size_t min_support);

// Text formats: `id<TAB>template` and `keyword<TAB>affect[,affect...]`;
// blank lines and lines starting with '#' are ignored.
std::vector<CarePattern> read_patterns(const std::filesystem::path& path);
Lexicon read_lexicon(const std::filesystem::path& path);
std::string patterns_to_text(std::span<const CarePattern> patterns);
std::string lexicon_to_text(const Lexicon& lexicon);
std::string changelog_to_jsonl(std::span<const ChangelogEntry> entries);

// Post-level label files: one {"post_id", "affects"} record per labeled post.
std::string labels_to_jsonl(const Corpus& corpus, std::span<const AffectSet> labels);
std::map<std::string, AffectSet> read_labels(const std::filesystem::path& path);

}  // namespace affectfeed::care
