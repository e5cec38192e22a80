#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "affectfeed/corpus.hpp"
#include "affectfeed/dataset.hpp"
#include "affectfeed/taxonomy.hpp"

namespace affectfeed::synth {

struct PlantEntry {
    // Probability that a comment on a post carrying this affect is a planted
    // expression.
    double rate = 0.5;
    std::vector<std::string> keywords;          // drawn from the seed lexicon
    std::vector<std::string> heldout_keywords;  // absent from the seed lexicon
};

struct PlantSpec {
    std::vector<std::string> templates;        // instances of seed patterns
    std::vector<std::string> novel_templates;  // not in the seed pattern set
    std::map<Affect, PlantEntry> affects;      // keyed by comment-label affect
    double heldout_share = 0.25;
    double novel_template_share = 0.2;
    // Chance that a comment instead carries a seed expression of some other
    // affect.
    double noise_rate = 0.02;

    static PlantSpec defaults();
};

struct SynthConfig {
    std::size_t n_posts = 1000;
    std::size_t n_users = 200;
    std::size_t comments_per_post = 6;
    PlantSpec plant = PlantSpec::defaults();
    double care_affect_share = 0.6;
    double secondary_affect_rate = 0.3;
    double annotation_rate = 0.2;
    std::size_t raters_per_post = 5;
    std::size_t n_raters = 40;
    double violating_rate = 0.05;
    double ocr_rate = 0.2;
    double feeling_rate = 0.3;
    double surveys_per_post = 1.0;
    std::size_t feature_dim = kDefaultFeatureDim;
    std::int64_t start_time = 1'600'000'000;
    std::int64_t span_days = 120;
};

struct PlantedExpression {
    std::size_t comment = 0;  // index into corpus.comments()
    Affect affect = Affect::Adoring;
    std::string template_text;
    std::string keyword;
    bool heldout = false;
    bool novel_template = false;
    bool noise = false;

    // Template with the keyword filled in, as it appears in the text.
    std::string phrase() const;
};

struct GroundTruth {
    std::vector<Affect> primary;          // per post
    std::vector<AffectSet> post_affects;  // per post, primary plus secondary
    std::vector<PlantedExpression> expressions;
    std::map<Affect, std::vector<std::string>> heldout_keywords;
    std::vector<AffectSet> user_preferences;  // per user
};

struct SurveyResponse {
    std::string post_id;
    std::string user_id;
    std::int64_t at = 0;
    bool answer = false;

    friend bool operator==(const SurveyResponse&, const SurveyResponse&) = default;
};

struct PublisherFeeling {
    std::string post_id;
    std::string feeling;

    friend bool operator==(const PublisherFeeling&, const PublisherFeeling&) = default;
};

struct SynthOutput {
    Corpus corpus;
    GroundTruth truth;
    std::vector<SurveyResponse> surveys;
    std::vector<PublisherFeeling> feelings;
};

// Pure function of (seed, config). Throws Error(InvalidArgument) for rates
// outside [0, 1] or vocabularies that collide.
SynthOutput synth_corpus(std::uint64_t seed, const SynthConfig& config);

// The comment-label view of a taxonomy affect: both kinds of anger collapse
// to AngeredUnsplit.
Affect care_view(Affect a);
AffectSet care_view(AffectSet s);

// Per-affect content words placed in post text.
const std::vector<std::string>& content_words(Affect a);
const std::vector<std::string>& filler_words();
const std::vector<std::string>& topic_tags();

struct TokenDatasetConfig {
    std::size_t n_rows = 20000;
    double positive_rate = 0.3;
    std::size_t filler_tokens = 1;  // per title and per body
    std::size_t n_users = 200;
    bool shuffle_labels = false;
};

struct TokenDataset {
    Corpus corpus;
    std::vector<dataset::LabeledExample> rows;
};

// One post per row; each positive class plants its own marker token in the
// post title. With shuffle_labels the label masks are permuted across rows,
// which severs every link between text and labels.
TokenDataset synth_token_dataset(std::uint64_t seed, const dataset::ClassSpace& classes,
                                 const TokenDatasetConfig& config);

void write_output(const SynthOutput& out, const std::filesystem::path& dir);
std::vector<SurveyResponse> read_surveys(const std::filesystem::path& path);
std::vector<PublisherFeeling> read_feelings(const std::filesystem::path& path);
std::string ground_truth_to_json(const SynthOutput& out);

}  // namespace affectfeed::synth
