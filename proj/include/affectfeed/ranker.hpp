#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affectfeed/corpus.hpp"
#include "affectfeed/model.hpp"
#include "affectfeed/synth.hpp"

namespace affectfeed::ranker {

// Read-only view of the corpus plus the friendship graph derived from it:
// two users are friends when they share an interest tag.
class FeedContext {
public:
    explicit FeedContext(const Corpus& corpus);

    const Corpus& corpus() const { return *corpus_; }
    const std::vector<std::size_t>& friends_of(std::size_t user_idx) const { return friends_[user_idx]; }

    // Seconds after which recency has decayed by a factor of e.
    double recency_scale = 2.0 * 86400.0;

    // exp(-age / recency_scale), 1 for posts not older than `at`.
    double recency(const Post& post, std::int64_t at) const;
    // Distinct friends of the user with a positive engagement on the post
    // at or before `at`.
    std::size_t friend_engagement(std::size_t post_idx, std::size_t user_idx, std::int64_t at) const;

private:
    const Corpus* corpus_;
    std::vector<std::vector<std::size_t>> friends_;
};

// Removes violating posts, keeping the order of the rest. Throws
// Error(DanglingReference) for ids missing from the corpus.
std::vector<std::string> integrity_filter(const Corpus& corpus, std::span<const std::string> pool);

struct Candidate {
    std::string post_id;
    double score = 0.0;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Lightweight score recency + friend_engagement; the top K by score with
// ties broken by post id ascending.
std::vector<Candidate> reduce_candidates(const FeedContext& ctx, std::span<const std::string> pool,
                                         const std::string& user_id, std::int64_t at, std::size_t k = 500);

enum class PredictorKind { EngagementModel, Recency, FriendEngagement, SurveyModel };
std::string_view predictor_kind_name(PredictorKind k);
std::optional<PredictorKind> parse_predictor_kind(std::string_view s);

struct Predictor {
    std::string id;
    PredictorKind kind = PredictorKind::Recency;
    std::function<double(const Post&, const User&, std::int64_t)> evaluate;
};

struct ScoreTerm {
    std::string predictor_id;
    double weight = 0.0;
    double prediction = 0.0;

    friend bool operator==(const ScoreTerm&, const ScoreTerm&) = default;
};

struct ValueScore {
    std::string post_id;
    std::string user_id;
    std::int64_t at = 0;
    double score = 0.0;
    std::vector<ScoreTerm> terms;

    // Left-to-right sum of weight * prediction over the terms; equal to
    // score bit for bit.
    double resum() const;

    friend bool operator==(const ValueScore&, const ValueScore&) = default;
};

// Throws Error(InvalidArgument) on a weight count mismatch and
// Error(NonFinitePrediction) naming the predictor whose output is not
// finite.
ValueScore value_score(const Post& post, const User& user, std::int64_t at, std::span<const Predictor> predictors,
                       std::span<const double> weights);

struct ScoredPost {
    std::string post_id;
    std::string author_id;
    double score = 0.0;

    friend bool operator==(const ScoredPost&, const ScoredPost&) = default;
};

struct DiversityConstraints {
    std::size_t max_consecutive_same_author = 2;  // 0: unlimited
    std::size_t max_per_author = 0;               // 0: unlimited
};

struct RerankResult {
    std::vector<ScoredPost> posts;
    // Set when the constraints could not be met; posts from
    // `appended_from` on were appended in score order.
    bool infeasible = false;
    std::size_t appended_from = 0;
};

// Greedy: each slot takes the best remaining post that keeps the rest of
// the list arrangeable under the run limit. Posts over an author's cap, or
// left over when no post fits, are appended in score order and flagged.
RerankResult rerank_diversity(std::span<const ScoredPost> scored, const DiversityConstraints& constraints);

// True when the posts can be ordered so that no author has more than
// `max_run` consecutive posts, given that the list continues a run of
// `tail_run` posts by `tail_author`.
bool run_feasible(std::span<const ScoredPost> posts, std::size_t max_run, const std::string& tail_author = {},
                  std::size_t tail_run = 0);

struct PipelineConfig {
    std::size_t k = 500;
    std::vector<Predictor> predictors;
    std::vector<double> weights;
    DiversityConstraints diversity;
};

struct FeedRequest {
    std::string user_id;
    std::int64_t at = 0;
    std::vector<std::string> pool;
};

struct FeedResult {
    std::string user_id;
    std::int64_t at = 0;
    std::vector<std::string> posts;
    std::vector<std::string> removed_by_filter;
    std::vector<Candidate> reduced;
    std::vector<ValueScore> scores;  // by score descending, then post id
    bool rerank_infeasible = false;
};

// integrity_filter -> reduce_candidates -> value_score -> rerank_diversity.
FeedResult run_feed(const FeedContext& ctx, const FeedRequest& request, const PipelineConfig& config);

std::string feed_result_to_json(const FeedResult& r);

// Predictors backed by the module's models and the feed context.
Predictor recency_predictor(const FeedContext& ctx, std::string id = "recency");
Predictor friend_predictor(const FeedContext& ctx, std::string id = "friend_engagement");
// Mean predicted probability of the like, love and share classes.
Predictor engagement_predictor(std::shared_ptr<const model::TwoTowerModel> model, const dataset::ClassSpace& classes,
                               std::string id = "engagement_model");

// (s_new - s_base) / (1 - s_base) * 100. Throws Error(InvalidArgument)
// unless both lie in [0, 1] and s_base < 1.
double auc_loss_reduction(double s_new, double s_base);

struct SurveyScorerConfig {
    std::size_t iterations = 400;
    double learning_rate = 0.5;
    double l2 = 1e-4;
};

struct SurveyScorer {
    std::vector<std::string> feature_names;
    std::vector<double> mean;  // standardization, from the training part
    std::vector<double> scale;
    std::vector<double> weights;
    double bias = 0.0;
    bool uses_embedding = false;
    std::size_t embedding_dim = 0;

    double predict(std::span<const double> raw_features) const;
    friend bool operator==(const SurveyScorer&, const SurveyScorer&) = default;
};

// Survey responses joined with corpus features; rows are assigned 80/10/10
// by a seeded shuffle.
struct SurveyData {
    std::vector<std::vector<double>> features;
    std::vector<bool> answers;
    std::vector<std::string> feature_names;
    std::vector<std::size_t> train, validation, test;
};

// Features: post dense features, user network statistics, log1p of the
// post age in hours, then the post's embedding when a table is given.
// Throws Error(DanglingReference) for unknown ids and
// Error(InvalidArgument) when the table lacks a surveyed post.
SurveyData survey_features(const Corpus& corpus, std::span<const synth::SurveyResponse> surveys,
                           const model::EmbeddingTable* embedding, std::uint64_t seed);

// Logistic regression by full-batch gradient descent on standardized
// features. Throws Error(DegenerateDataset) when the training answers are
// all equal.
SurveyScorer train_survey_scorer(const SurveyData& data, const SurveyScorerConfig& config = {});

std::optional<double> scorer_auc(const SurveyScorer& scorer, const SurveyData& data,
                                 std::span<const std::size_t> rows);

// Features by absolute standardized weight, largest first.
std::vector<std::pair<std::string, double>> feature_importance(const SurveyScorer& scorer);

Predictor survey_predictor(std::shared_ptr<const SurveyScorer> scorer,
                           std::shared_ptr<const model::EmbeddingTable> embedding, std::string id = "survey_model");

struct AblationResult {
    double base_auc = 0.0;
    double new_auc = 0.0;
    double loss_reduction = 0.0;
    std::vector<std::pair<std::string, double>> importance;  // of the scorer with embedding
};

// Trains the scorer with and without the embedding block on the same split
// and compares test AUC.
AblationResult ablate(const Corpus& corpus, std::span<const synth::SurveyResponse> surveys,
                      const model::EmbeddingTable& embedding, std::uint64_t seed,
                      const SurveyScorerConfig& config = {});

// Pipeline config file: {"k", "max_consecutive_same_author",
// "max_per_author", "recency_scale_hours", "weights": {predictor: w}}.
struct PipelineFile {
    std::size_t k = 500;
    DiversityConstraints diversity;
    double recency_scale_hours = 48.0;
    std::vector<std::pair<std::string, double>> weights;
};
PipelineFile read_pipeline_file(const std::filesystem::path& path);
std::string pipeline_file_to_json(const PipelineFile& f);

}  // namespace affectfeed::ranker
