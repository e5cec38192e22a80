#include "affectfeed/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "affectfeed/error.hpp"
#include "affectfeed/io_util.hpp"
#include "affectfeed/metrics.hpp"
#include "affectfeed/random.hpp"
#include "json.hpp"

namespace affectfeed::ranker {

using json = nlohmann::ordered_json;

namespace {

bool positive_engagement(EventKind k) {
    switch (k) {
        case EventKind::Hide:
        case EventKind::Snooze:
        case EventKind::Unfollow:
        case EventKind::Report: return false;
        default: return true;
    }
}

std::size_t require_user(const Corpus& corpus, const std::string& id) {
    auto idx = corpus.user_index(id);
    if (!idx) throw Error(ErrorKind::DanglingReference, "unknown user " + id);
    return *idx;
}

std::size_t require_post(const Corpus& corpus, const std::string& id) {
    auto idx = corpus.post_index(id);
    if (!idx) throw Error(ErrorKind::DanglingReference, "unknown post " + id);
    return *idx;
}

struct RunState {
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
};

bool feasible(const RunState& s, std::size_t max_run, const std::string& tail_author, std::size_t tail_run) {
    for (const auto& [author, n] : s.counts) {
        if (n == 0) continue;
        const std::size_t gaps = s.total - n + 1;
        const std::size_t already = author == tail_author ? tail_run : 0;
        if (n + already > max_run * gaps) return false;
    }
    return true;
}

}  // namespace

FeedContext::FeedContext(const Corpus& corpus) : corpus_(&corpus), friends_(corpus.users().size()) {
    std::map<std::string, std::vector<std::size_t>> by_tag;
    const auto users = corpus.users();
    for (std::size_t u = 0; u < users.size(); ++u) {
        for (const auto& tag : users[u].interests) by_tag[tag].push_back(u);
    }
    for (const auto& [tag, members] : by_tag) {
        for (auto u : members) {
            for (auto v : members) {
                if (u != v) friends_[u].push_back(v);
            }
        }
    }
    for (auto& f : friends_) {
        std::sort(f.begin(), f.end());
        f.erase(std::unique(f.begin(), f.end()), f.end());
    }
}

double FeedContext::recency(const Post& post, std::int64_t at) const {
    const double age = static_cast<double>(std::max<std::int64_t>(0, at - post.created_at));
    return std::exp(-age / recency_scale);
}

std::size_t FeedContext::friend_engagement(std::size_t post_idx, std::size_t user_idx, std::int64_t at) const {
    const auto& friends = friends_[user_idx];
    std::set<std::size_t> engaged;
    for (auto e : corpus_->events_of(post_idx)) {
        const auto& ev = corpus_->events()[e];
        if (ev.at > at || !positive_engagement(ev.kind)) continue;
        auto u = *corpus_->user_index(ev.user_id);
        if (std::binary_search(friends.begin(), friends.end(), u)) engaged.insert(u);
    }
    return engaged.size();
}

std::vector<std::string> integrity_filter(const Corpus& corpus, std::span<const std::string> pool) {
    std::vector<std::string> out;
    for (const auto& id : pool) {
        if (!corpus.posts()[require_post(corpus, id)].violating) out.push_back(id);
    }
    return out;
}

std::vector<Candidate> reduce_candidates(const FeedContext& ctx, std::span<const std::string> pool,
                                         const std::string& user_id, std::int64_t at, std::size_t k) {
    const auto u = require_user(ctx.corpus(), user_id);
    std::vector<Candidate> scored;
    scored.reserve(pool.size());
    for (const auto& id : pool) {
        const auto p = require_post(ctx.corpus(), id);
        const double s = ctx.recency(ctx.corpus().posts()[p], at) +
                         static_cast<double>(ctx.friend_engagement(p, u, at));
        scored.push_back({id, s});
    }
    auto better = [](const Candidate& a, const Candidate& b) {
        return a.score != b.score ? a.score > b.score : a.post_id < b.post_id;
    };
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);
    scored.resize(n);
    return scored;
}

std::string_view predictor_kind_name(PredictorKind k) {
    switch (k) {
        case PredictorKind::EngagementModel: return "engagement_model";
        case PredictorKind::Recency: return "recency";
        case PredictorKind::FriendEngagement: return "friend_engagement";
        case PredictorKind::SurveyModel: return "survey_model";
    }
    return "";
}

std::optional<PredictorKind> parse_predictor_kind(std::string_view s) {
    for (auto k : {PredictorKind::EngagementModel, PredictorKind::Recency, PredictorKind::FriendEngagement,
                   PredictorKind::SurveyModel}) {
        if (predictor_kind_name(k) == s) return k;
    }
    return std::nullopt;
}

double ValueScore::resum() const {
    double s = 0.0;
    for (const auto& t : terms) s += t.weight * t.prediction;
    return s;
}

ValueScore value_score(const Post& post, const User& user, std::int64_t at, std::span<const Predictor> predictors,
                       std::span<const double> weights) {
    if (predictors.size() != weights.size()) {
        throw Error(ErrorKind::InvalidArgument, "value_score: " + std::to_string(predictors.size()) +
                                                    " predictors but " + std::to_string(weights.size()) + " weights");
    }
    ValueScore v{post.id, user.id, at, 0.0, {}};
    for (std::size_t i = 0; i < predictors.size(); ++i) {
        const double pred = predictors[i].evaluate(post, user, at);
        if (!std::isfinite(pred)) {
            throw Error(ErrorKind::NonFinitePrediction,
                        "predictor " + predictors[i].id + " returned a non-finite value for post " + post.id);
        }
        v.terms.push_back({predictors[i].id, weights[i], pred});
    }
    v.score = v.resum();
    return v;
}

bool run_feasible(std::span<const ScoredPost> posts, std::size_t max_run, const std::string& tail_author,
                  std::size_t tail_run) {
    if (max_run == 0) return true;
    if (tail_run > max_run) return false;
    RunState s;
    for (const auto& p : posts) ++s.counts[p.author_id];
    s.total = posts.size();
    return feasible(s, max_run, tail_author, tail_run);
}

RerankResult rerank_diversity(std::span<const ScoredPost> scored, const DiversityConstraints& c) {
    // Work on input positions so leftovers can be merged back in score order.
    std::vector<std::size_t> main, overflow;
    std::map<std::string, std::size_t> per_author;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        if (c.max_per_author > 0 && per_author[scored[i].author_id]++ >= c.max_per_author) {
            overflow.push_back(i);
        } else {
            main.push_back(i);
        }
    }

    const std::size_t limit = c.max_consecutive_same_author;
    RunState state;
    for (auto i : main) ++state.counts[scored[i].author_id];
    state.total = main.size();
    const bool lookahead = limit > 0 && feasible(state, limit, {}, 0);

    RerankResult r;
    std::string tail;
    std::size_t run = 0;
    std::vector<std::size_t> leftover;
    std::vector<std::size_t> remaining = main;
    while (!remaining.empty()) {
        std::optional<std::size_t> chosen;
        for (std::size_t j = 0; j < remaining.size() && !chosen; ++j) {
            const auto& author = scored[remaining[j]].author_id;
            const std::size_t next_run = author == tail ? run + 1 : 1;
            if (limit > 0 && next_run > limit) continue;
            if (lookahead) {
                --state.counts[author];
                --state.total;
                const bool ok = feasible(state, limit, author, next_run);
                ++state.counts[author];
                ++state.total;
                if (!ok) continue;
            }
            chosen = j;
        }
        if (!chosen) {
            leftover = remaining;
            break;
        }
        const std::size_t idx = remaining[*chosen];
        const auto& author = scored[idx].author_id;
        run = author == tail ? run + 1 : 1;
        tail = author;
        --state.counts[author];
        --state.total;
        r.posts.push_back(scored[idx]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(*chosen));
    }

    leftover.insert(leftover.end(), overflow.begin(), overflow.end());
    std::sort(leftover.begin(), leftover.end());
    r.appended_from = r.posts.size();
    r.infeasible = !leftover.empty();
    for (auto i : leftover) r.posts.push_back(scored[i]);
    return r;
}

FeedResult run_feed(const FeedContext& ctx, const FeedRequest& request, const PipelineConfig& config) {
    const Corpus& corpus = ctx.corpus();
    const auto& user = corpus.users()[require_user(corpus, request.user_id)];
    FeedResult out;
    out.user_id = request.user_id;
    out.at = request.at;

    auto clean = integrity_filter(corpus, request.pool);
    std::set<std::string> kept(clean.begin(), clean.end());
    for (const auto& id : request.pool) {
        if (!kept.count(id)) out.removed_by_filter.push_back(id);
    }
    out.reduced = reduce_candidates(ctx, clean, request.user_id, request.at, config.k);
    for (const auto& c : out.reduced) {
        out.scores.push_back(value_score(corpus.post(c.post_id), user, request.at, config.predictors, config.weights));
    }
    std::sort(out.scores.begin(), out.scores.end(), [](const ValueScore& a, const ValueScore& b) {
        return a.score != b.score ? a.score > b.score : a.post_id < b.post_id;
    });
    std::vector<ScoredPost> scored;
    for (const auto& v : out.scores) scored.push_back({v.post_id, corpus.post(v.post_id).author_id, v.score});
    auto reranked = rerank_diversity(scored, config.diversity);
    out.rerank_infeasible = reranked.infeasible;
    for (const auto& p : reranked.posts) out.posts.push_back(p.post_id);
    return out;
}

std::string feed_result_to_json(const FeedResult& r) {
    json j;
    j["user_id"] = r.user_id;
    j["at"] = r.at;
    j["posts"] = r.posts;
    j["removed_by_filter"] = r.removed_by_filter;
    json reduced = json::array();
    for (const auto& c : r.reduced) reduced.push_back({{"post_id", c.post_id}, {"score", c.score}});
    j["reduced"] = reduced;
    json scores = json::array();
    for (const auto& v : r.scores) {
        json terms = json::array();
        for (const auto& t : v.terms) {
            terms.push_back({{"predictor", t.predictor_id}, {"weight", t.weight}, {"prediction", t.prediction}});
        }
        scores.push_back({{"post_id", v.post_id}, {"score", v.score}, {"terms", terms}});
    }
    j["scores"] = scores;
    j["rerank_infeasible"] = r.rerank_infeasible;
    return j.dump();
}

Predictor recency_predictor(const FeedContext& ctx, std::string id) {
    return {std::move(id), PredictorKind::Recency,
            [&ctx](const Post& p, const User&, std::int64_t at) { return ctx.recency(p, at); }};
}

Predictor friend_predictor(const FeedContext& ctx, std::string id) {
    return {std::move(id), PredictorKind::FriendEngagement, [&ctx](const Post& p, const User& u, std::int64_t at) {
                return static_cast<double>(ctx.friend_engagement(*ctx.corpus().post_index(p.id),
                                                                 *ctx.corpus().user_index(u.id), at));
            }};
}

Predictor engagement_predictor(std::shared_ptr<const model::TwoTowerModel> model, const dataset::ClassSpace& classes,
                               std::string id) {
    std::vector<std::size_t> cls;
    for (auto k : {EventKind::Like, EventKind::Love, EventKind::Share}) {
        auto i = classes.index_of(k);
        if (!i) throw Error(ErrorKind::InvalidArgument, "class space lacks " + std::string(event_kind_name(k)));
        cls.push_back(*i);
    }
    return {std::move(id), PredictorKind::EngagementModel,
            [model = std::move(model), cls](const Post& p, const User& u, std::int64_t) {
                auto probs = model::predict(*model, p, u);
                double s = 0.0;
                for (auto c : cls) s += probs.at(c);
                return s / static_cast<double>(cls.size());
            }};
}

double auc_loss_reduction(double s_new, double s_base) {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(s_new) || !in_unit(s_base)) {
        throw Error(ErrorKind::InvalidArgument, "AUC values must lie in [0, 1]");
    }
    if (s_base >= 1.0) throw Error(ErrorKind::InvalidArgument, "base AUC of 1 leaves no room for improvement");
    return (s_new - s_base) / (1.0 - s_base) * 100.0;
}

namespace {

using EmbeddingIndex = std::unordered_map<std::string, const std::vector<double>*>;

EmbeddingIndex index_embedding(const model::EmbeddingTable& table) {
    EmbeddingIndex idx;
    for (const auto& [id, v] : table) idx[id] = &v;
    return idx;
}

std::vector<double> survey_row(const Post& p, const User& u, std::int64_t at, const EmbeddingIndex* emb) {
    std::vector<double> x(p.dense_features);
    x.insert(x.end(), u.network_stats.begin(), u.network_stats.end());
    const double hours = static_cast<double>(std::max<std::int64_t>(0, at - p.created_at)) / 3600.0;
    x.push_back(std::log1p(hours));
    if (emb) {
        auto it = emb->find(p.id);
        if (it == emb->end()) throw Error(ErrorKind::InvalidArgument, "embedding table has no row for post " + p.id);
        x.insert(x.end(), it->second->begin(), it->second->end());
    }
    return x;
}

double dot_standardized(const SurveyScorer& s, std::span<const double> raw) {
    double z = s.bias;
    for (std::size_t i = 0; i < s.weights.size(); ++i) z += s.weights[i] * (raw[i] - s.mean[i]) / s.scale[i];
    return z;
}

}  // namespace

double SurveyScorer::predict(std::span<const double> raw) const {
    if (raw.size() != weights.size()) throw Error(ErrorKind::InvalidArgument, "survey scorer: feature size mismatch");
    return sigmoid(dot_standardized(*this, raw));
}

SurveyData survey_features(const Corpus& corpus, std::span<const synth::SurveyResponse> surveys,
                           const model::EmbeddingTable* embedding, std::uint64_t seed) {
    SurveyData d;
    EmbeddingIndex idx;
    if (embedding) idx = index_embedding(*embedding);
    for (const auto& s : surveys) {
        const auto& p = corpus.posts()[require_post(corpus, s.post_id)];
        const auto& u = corpus.users()[require_user(corpus, s.user_id)];
        d.features.push_back(survey_row(p, u, s.at, embedding ? &idx : nullptr));
        d.answers.push_back(s.answer);
    }
    for (std::size_t i = 0; i < corpus.dense_dim(); ++i) d.feature_names.push_back("dense" + std::to_string(i));
    for (std::size_t i = 0; i < corpus.network_dim(); ++i) d.feature_names.push_back("network" + std::to_string(i));
    d.feature_names.push_back("age_log_hours");
    if (embedding && !embedding->empty()) {
        for (std::size_t i = 0; i < embedding->front().second.size(); ++i) {
            d.feature_names.push_back("embedding" + std::to_string(i));
        }
    }

    std::vector<std::size_t> order(surveys.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    const auto n = order.size();
    const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
    d.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    d.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                        order.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_train + n_val)));
    d.test.assign(order.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_train + n_val)), order.end());
    return d;
}

SurveyScorer train_survey_scorer(const SurveyData& data, const SurveyScorerConfig& config) {
    const auto& rows = data.train;
    std::size_t positives = 0;
    for (auto r : rows) positives += data.answers[r] ? 1 : 0;
    if (positives == 0 || positives == rows.size()) {
        throw Error(ErrorKind::DegenerateDataset, "survey training answers are all " +
                                                      std::string(positives == 0 ? "negative" : "positive"));
    }
    const std::size_t dim = data.features[rows.front()].size();
    SurveyScorer s;
    s.feature_names = data.feature_names;
    s.mean.assign(dim, 0.0);
    s.scale.assign(dim, 0.0);
    s.weights.assign(dim, 0.0);
    for (const auto& name : s.feature_names) {
        if (name.rfind("embedding", 0) == 0) ++s.embedding_dim;
    }
    s.uses_embedding = s.embedding_dim > 0;

    const double n = static_cast<double>(rows.size());
    for (auto r : rows) {
        for (std::size_t i = 0; i < dim; ++i) s.mean[i] += data.features[r][i];
    }
    for (auto& m : s.mean) m /= n;
    for (auto r : rows) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = data.features[r][i] - s.mean[i];
            s.scale[i] += d * d;
        }
    }
    for (auto& v : s.scale) {
        v = std::sqrt(v / n);
        if (!(v > 0.0)) v = 1.0;
    }

    std::vector<std::vector<double>> x;
    x.reserve(rows.size());
    for (auto r : rows) {
        std::vector<double> z(dim);
        for (std::size_t i = 0; i < dim; ++i) z[i] = (data.features[r][i] - s.mean[i]) / s.scale[i];
        x.push_back(std::move(z));
    }
    std::vector<double> gw(dim);
    for (std::size_t it = 0; it < config.iterations; ++it) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            double z = s.bias;
            for (std::size_t i = 0; i < dim; ++i) z += s.weights[i] * x[k][i];
            const double err = sigmoid(z) - (data.answers[rows[k]] ? 1.0 : 0.0);
            for (std::size_t i = 0; i < dim; ++i) gw[i] += err * x[k][i];
            gb += err;
        }
        for (std::size_t i = 0; i < dim; ++i) {
            s.weights[i] -= config.learning_rate * (gw[i] / n + config.l2 * s.weights[i]);
        }
        s.bias -= config.learning_rate * gb / n;
    }
    return s;
}

std::optional<double> scorer_auc(const SurveyScorer& scorer, const SurveyData& data,
                                 std::span<const std::size_t> rows) {
    std::vector<double> scores;
    std::unique_ptr<bool[]> labels(new bool[rows.size()]);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        scores.push_back(dot_standardized(scorer, data.features[rows[k]]));
        labels[k] = data.answers[rows[k]];
    }
    return auc_roc(scores, std::span<const bool>(labels.get(), rows.size()));
}

std::vector<std::pair<std::string, double>> feature_importance(const SurveyScorer& scorer) {
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t i = 0; i < scorer.weights.size(); ++i) {
        out.emplace_back(scorer.feature_names[i], std::abs(scorer.weights[i]));
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
}

Predictor survey_predictor(std::shared_ptr<const SurveyScorer> scorer,
                           std::shared_ptr<const model::EmbeddingTable> embedding, std::string id) {
    if (scorer->uses_embedding && !embedding) {
        throw Error(ErrorKind::InvalidArgument, "survey scorer needs an embedding table");
    }
    auto idx = std::make_shared<EmbeddingIndex>();
    if (scorer->uses_embedding) *idx = index_embedding(*embedding);
    return {std::move(id), PredictorKind::SurveyModel,
            [scorer = std::move(scorer), embedding = std::move(embedding), idx](const Post& p, const User& u,
                                                                                  std::int64_t at) {
                return scorer->predict(survey_row(p, u, at, scorer->uses_embedding ? idx.get() : nullptr));
            }};
}

AblationResult ablate(const Corpus& corpus, std::span<const synth::SurveyResponse> surveys,
                      const model::EmbeddingTable& embedding, std::uint64_t seed,
                      const SurveyScorerConfig& config) {
    const auto base_data = survey_features(corpus, surveys, nullptr, seed);
    const auto new_data = survey_features(corpus, surveys, &embedding, seed);
    const auto base = train_survey_scorer(base_data, config);
    const auto with_emb = train_survey_scorer(new_data, config);
    auto base_auc = scorer_auc(base, base_data, base_data.test);
    auto new_auc = scorer_auc(with_emb, new_data, new_data.test);
    if (!base_auc || !new_auc) throw Error(ErrorKind::DegenerateDataset, "survey test answers are all equal");
    AblationResult r;
    r.base_auc = *base_auc;
    r.new_auc = *new_auc;
    r.loss_reduction = auc_loss_reduction(r.new_auc, r.base_auc);
    r.importance = feature_importance(with_emb);
    return r;
}

PipelineFile read_pipeline_file(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    PipelineFile f;
    try {
        f.k = j.value("k", f.k);
        f.diversity.max_consecutive_same_author =
            j.value("max_consecutive_same_author", f.diversity.max_consecutive_same_author);
        f.diversity.max_per_author = j.value("max_per_author", f.diversity.max_per_author);
        f.recency_scale_hours = j.value("recency_scale_hours", f.recency_scale_hours);
        if (j.contains("weights")) {
            for (const auto& [name, w] : j.at("weights").items()) {
                if (!parse_predictor_kind(name)) {
                    throw Error(ErrorKind::Parse, path.string() + ": unknown predictor '" + name + "'");
                }
                f.weights.emplace_back(name, w.get<double>());
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    if (!(f.recency_scale_hours > 0.0)) throw Error(ErrorKind::InvalidArgument, "recency_scale_hours must be > 0");
    return f;
}

std::string pipeline_file_to_json(const PipelineFile& f) {
    json j;
    j["k"] = f.k;
    j["max_consecutive_same_author"] = f.diversity.max_consecutive_same_author;
    j["max_per_author"] = f.diversity.max_per_author;
    j["recency_scale_hours"] = f.recency_scale_hours;
    json w = json::object();
    for (const auto& [name, v] : f.weights) w[name] = v;
    j["weights"] = w;
    return j.dump(2) + "\n";
}

}  // namespace affectfeed::ranker
