#include "affectfeed/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "affectfeed/care.hpp"
#include "affectfeed/error.hpp"
#include "affectfeed/io_util.hpp"
#include "affectfeed/random.hpp"
#include "affectfeed/text.hpp"
#include "json.hpp"

namespace affectfeed::synth {

using json = nlohmann::ordered_json;

namespace {

constexpr std::int64_t kDay = 86400;

const std::map<Affect, std::vector<std::string>>& content_table() {
    static const std::map<Affect, std::vector<std::string>> table = {
        {Affect::Adoring, {"puppy", "kitten", "toddler", "bunny", "duckling"}},
        {Affect::Connected, {"reunion", "hometown", "classmates", "anniversary", "neighbors"}},
        {Affect::ConstructivelyAngered, {"petition", "protest", "injustice", "reform", "rally"}},
        {Affect::DestructivelyAngered, {"scam", "clickbait", "troll", "hoax", "spam"}},
        {Affect::Entertained, {"prank", "meme", "sitcom", "standup", "parody"}},
        {Affect::Excited, {"championship", "concert", "launch", "festival", "premiere"}},
        {Affect::Grateful, {"donation", "volunteers", "nurses", "gratitude", "kindness"}},
        {Affect::Informed, {"report", "study", "election", "economy", "vaccine"}},
        {Affect::Inspired, {"marathon", "recovery", "mentor", "graduation", "comeback"}},
        {Affect::Neutral, {"schedule", "update", "notice", "meeting", "parking"}},
        {Affect::Relaxed, {"beach", "meditation", "sunset", "garden", "yoga"}},
        {Affect::Saddened, {"funeral", "obituary", "loss", "farewell", "hospice"}},
        {Affect::Scared, {"earthquake", "wildfire", "burglary", "outbreak", "storm"}},
        {Affect::Surprised, {"discovery", "twist", "revelation", "eclipse", "record"}},
        {Affect::Touched, {"veteran", "adoption", "wedding", "rescue", "memorial"}},
        {Affect::Approving, {"award", "promotion", "scholarship", "medal", "achievement"}},
    };
    return table;
}

const std::vector<std::string>& kFeelings() {
    static const std::vector<std::string> f = {"blessed", "happy",  "excited", "sad",   "worried",
                                               "angry",   "annoyed", "thankful", "loved", "tired"};
    return f;
}

std::string feeling_for(Affect a) {
    switch (a) {
        case Affect::Adoring: return "loved";
        case Affect::Connected: return "blessed";
        case Affect::ConstructivelyAngered: return "angry";
        case Affect::DestructivelyAngered: return "annoyed";
        case Affect::Entertained: return "happy";
        case Affect::Excited: return "excited";
        case Affect::Grateful: return "thankful";
        case Affect::Inspired: return "blessed";
        case Affect::Relaxed: return "happy";
        case Affect::Saddened: return "sad";
        case Affect::Scared: return "worried";
        case Affect::Touched: return "loved";
        case Affect::Approving: return "excited";
        default: return "tired";
    }
}

int valence(Affect a) {
    if (is_negative(a)) return -1;
    if (a == Affect::Neutral || a == Affect::Surprised) return 0;
    return 1;
}

void check_rate(double r, const std::string& what) {
    if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorKind::InvalidArgument, what + " must lie in [0, 1]");
}

void validate(const SynthConfig& c) {
    check_rate(c.care_affect_share, "care_affect_share");
    check_rate(c.secondary_affect_rate, "secondary_affect_rate");
    check_rate(c.annotation_rate, "annotation_rate");
    check_rate(c.violating_rate, "violating_rate");
    check_rate(c.ocr_rate, "ocr_rate");
    check_rate(c.feeling_rate, "feeling_rate");
    check_rate(c.plant.heldout_share, "heldout_share");
    check_rate(c.plant.novel_template_share, "novel_template_share");
    check_rate(c.plant.noise_rate, "noise_rate");
    if (!(c.surveys_per_post >= 0.0)) throw Error(ErrorKind::InvalidArgument, "surveys_per_post must be >= 0");
    for (const auto& [a, e] : c.plant.affects) {
        check_rate(e.rate, "plant rate for " + std::string(affect_name(a)));
        if (e.keywords.empty()) {
            throw Error(ErrorKind::InvalidArgument, "plant entry for " + std::string(affect_name(a)) + " has no keywords");
        }
    }
    if (c.plant.templates.empty()) throw Error(ErrorKind::InvalidArgument, "plant spec has no templates");
    if (c.annotation_rate > 0 && c.raters_per_post > c.n_raters) {
        throw Error(ErrorKind::InvalidArgument, "raters_per_post exceeds n_raters");
    }
    if (c.n_posts > 0 && c.n_users == 0) throw Error(ErrorKind::InvalidArgument, "posts need at least one user");

    // Planted expressions must be the only place where template tokens and
    // keywords occur; otherwise re-scans of the text would over-count.
    std::set<std::string> reserved;
    auto reserve_template = [&](const std::string& t) {
        auto p = care::CarePattern::parse("t", t);
        for (const auto& w : p.prefix()) reserved.insert(w);
        for (const auto& w : p.suffix()) reserved.insert(w);
    };
    for (const auto& t : c.plant.templates) reserve_template(t);
    for (const auto& t : c.plant.novel_templates) reserve_template(t);
    for (const auto& [a, e] : c.plant.affects) {
        for (const auto& w : e.keywords) reserved.insert(w);
        for (const auto& w : e.heldout_keywords) reserved.insert(w);
    }
    for (const auto& w : filler_words()) {
        if (reserved.count(w)) throw Error(ErrorKind::InvalidArgument, "filler word '" + w + "' collides with a plant token");
    }
    for (const auto& [a, words] : content_table()) {
        for (const auto& w : words) {
            if (reserved.count(w)) throw Error(ErrorKind::InvalidArgument, "content word '" + w + "' collides with a plant token");
        }
    }
}

std::string fill(const std::string& tmpl, const std::string& keyword) {
    auto pos = tmpl.find(care::kSlot);
    return tmpl.substr(0, pos) + keyword + tmpl.substr(pos + care::kSlot.size());
}

void append_words(std::string& out, Rng& rng, const std::vector<std::string>& vocab, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!out.empty()) out += ' ';
        out += rng.pick(vocab);
    }
}

std::string decorate(std::string text, Rng& rng) {
    if (!text.empty() && rng.bernoulli(0.5)) text[0] = static_cast<char>(text[0] - 'a' + 'A');
    auto r = rng.below(3);
    if (r == 0) text += "!";
    else if (r == 1) text += ".";
    return text;
}

std::string padded(const char* prefix, std::size_t i, int width) {
    auto s = std::to_string(i);
    if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
    return prefix + s;
}

std::vector<double> gaussian_vector(Rng& rng, std::size_t n, double scale) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

}  // namespace

std::string PlantedExpression::phrase() const { return fill(template_text, keyword); }

PlantSpec PlantSpec::defaults() {
    PlantSpec s;
    for (const auto& p : care::default_seeds().patterns) s.templates.push_back(p.template_text());
    s.novel_templates = {"i am so {kw}", "it is really {kw}", "just too {kw}"};
    const std::map<Affect, std::vector<std::string>> heldout = {
        {Affect::Adoring, {"darling", "cuddly", "charming", "endearing", "squishy"}},
        {Affect::Entertained, {"hysterical", "comical", "witty", "goofy", "laughable"}},
        {Affect::Excited, {"epic", "electrifying", "exhilarating", "pumped", "stoked"}},
        {Affect::Saddened, {"gloomy", "sorrowful", "tearful", "mournful", "bleak"}},
        {Affect::Scared, {"spooky", "chilling", "eerie", "nightmarish", "petrifying"}},
        {Affect::AngeredUnsplit, {"appalling", "despicable", "shameful", "vile", "atrocious"}},
        {Affect::Approving, {"commendable", "honorable", "praiseworthy", "exemplary", "noble"}},
    };
    for (Affect a : care_affects()) {
        PlantEntry e;
        e.rate = 0.5;
        for (const auto& [kw, set] : care::default_seeds().lexicon) {
            if (set.contains(a)) e.keywords.push_back(kw);
        }
        e.heldout_keywords = heldout.at(a);
        s.affects[a] = std::move(e);
    }
    return s;
}

Affect care_view(Affect a) {
    if (a == Affect::ConstructivelyAngered || a == Affect::DestructivelyAngered) return Affect::AngeredUnsplit;
    return a;
}

AffectSet care_view(AffectSet s) {
    AffectSet out;
    for (Affect a : s.to_vector()) out.insert(care_view(a));
    return out;
}

const std::vector<std::string>& content_words(Affect a) {
    static const std::vector<std::string> none;
    auto it = content_table().find(a);
    return it == content_table().end() ? none : it->second;
}

const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> words = {
        "the",    "and",     "of",      "to",       "in",      "for",     "on",      "with",   "at",
        "by",     "from",    "about",   "into",     "over",    "after",   "before",  "today",  "yesterday",
        "week",   "people",  "friend",  "guys",     "here",    "there",   "again",   "everyone", "maybe",
        "honestly", "literally", "okay", "yeah",    "story",   "post",    "photo",   "video",  "thing",
        "time",   "day",     "night",   "morning",  "town",    "city",    "school",  "work",   "home",
        "car",    "dog",     "coffee",  "lunch",    "dinner",  "game",    "team",    "song",   "movie",
        "book",   "old",     "new",     "big",      "small",   "first",   "last",    "next",   "other",
        "some",   "many",    "every",   "our",      "their",   "my",      "your",    "his",    "her",
        "we",     "they",    "you",     "he",       "she",     "still",   "never",   "always", "then",
        "now",    "well",    "also",    "very",     "much",    "more",    "less",    "only",   "even",
        "back",   "down",    "out",     "off",      "around",  "through", "while",   "because", "though",
        "kind",   "sort",    "part",    "side",     "place",   "year",    "month",   "hour",   "minute",
    };
    return words;
}

const std::vector<std::string>& topic_tags() {
    static const std::vector<std::string> tags = {
        "pets",     "family",    "activism", "politics", "comedy",    "sports", "community", "news",
        "fitness",  "misc",      "nature",   "memorials", "safety",   "science", "stories",  "achievements",
    };
    return tags;
}

SynthOutput synth_corpus(std::uint64_t seed, const SynthConfig& cfg) {
    validate(cfg);
    Rng rng(seed);
    Rng text_rng = rng.fork(1);
    Rng event_rng = rng.fork(2);
    Rng annot_rng = rng.fork(3);
    Rng survey_rng = rng.fork(4);

    SynthOutput out;
    auto& truth = out.truth;
    for (const auto& [a, e] : cfg.plant.affects) truth.heldout_keywords[a] = e.heldout_keywords;

    const auto& taxonomy = taxonomy_affects();
    std::vector<Affect> care_capable, other_affects, secondary_pool;
    for (Affect a : taxonomy) {
        if (cfg.plant.affects.count(care_view(a))) care_capable.push_back(a);
        else other_affects.push_back(a);
        if (a != Affect::Neutral) secondary_pool.push_back(a);
    }

    // Users.
    std::vector<User> users;
    for (std::size_t i = 0; i < cfg.n_users; ++i) {
        User u;
        u.id = padded("u", i, 5);
        AffectSet prefs;
        const auto n_prefs = 1 + rng.below(3);
        while (prefs.size() < n_prefs) prefs.insert(rng.pick(secondary_pool));
        for (Affect a : prefs.to_vector()) u.interests.push_back(topic_tags()[static_cast<std::size_t>(a)]);
        for (const auto& tag : u.interests) u.bio_text += (u.bio_text.empty() ? "" : " ") + tag;
        append_words(u.bio_text, text_rng, filler_words(), 3 + text_rng.below(4));
        u.network_stats = gaussian_vector(rng, cfg.feature_dim, 1.0);
        truth.user_preferences.push_back(prefs);
        users.push_back(std::move(u));
    }

    // Posts.
    std::vector<Post> posts;
    for (std::size_t i = 0; i < cfg.n_posts; ++i) {
        Affect primary = (rng.bernoulli(cfg.care_affect_share) && !care_capable.empty()) || other_affects.empty()
                             ? rng.pick(care_capable)
                             : rng.pick(other_affects);
        AffectSet affects{primary};
        if (rng.bernoulli(cfg.secondary_affect_rate)) {
            Affect second = rng.pick(secondary_pool);
            if (second != primary) affects.insert(second);
        }
        truth.primary.push_back(primary);
        truth.post_affects.push_back(affects);

        Post p;
        p.id = padded("p", i, 6);
        p.author_id = users[rng.below(users.size())].id;
        p.created_at = cfg.start_time + rng.between(0, cfg.span_days * kDay);
        double violating_p = cfg.violating_rate * (primary == Affect::DestructivelyAngered ? 4.0 : 1.0);
        p.violating = rng.bernoulli(std::min(1.0, violating_p));

        append_words(p.title, text_rng, content_words(primary), 2);
        append_words(p.title, text_rng, filler_words(), 2 + text_rng.below(3));
        append_words(p.body, text_rng, content_words(primary), 3);
        for (Affect a : affects.to_vector()) {
            if (a != primary) append_words(p.body, text_rng, content_words(a), 2);
        }
        append_words(p.body, text_rng, filler_words(), 6 + text_rng.below(7));
        if (text_rng.bernoulli(cfg.ocr_rate)) {
            std::string ocr;
            append_words(ocr, text_rng, content_words(primary), 1);
            append_words(ocr, text_rng, filler_words(), 2 + text_rng.below(3));
            p.ocr_text = ocr;
        }
        p.dense_features = gaussian_vector(rng, cfg.feature_dim, 0.5);
        if (cfg.feature_dim > 0) p.dense_features[static_cast<std::size_t>(primary) % cfg.feature_dim] += 0.8;
        posts.push_back(std::move(p));
    }

    // Comments, with planted expressions.
    std::vector<Comment> comments;
    std::vector<Affect> care_keys;
    for (const auto& [a, e] : cfg.plant.affects) care_keys.push_back(a);
    for (std::size_t i = 0; i < posts.size(); ++i) {
        const Affect care_affect = care_view(truth.primary[i]);
        auto entry = cfg.plant.affects.find(care_affect);
        for (std::size_t k = 0; k < cfg.comments_per_post; ++k) {
            Comment c;
            c.post_id = posts[i].id;
            c.author_id = users[text_rng.below(users.size())].id;
            c.created_at = posts[i].created_at + text_rng.between(60, 3 * kDay);

            std::optional<PlantedExpression> expr;
            if (entry != cfg.plant.affects.end() && text_rng.bernoulli(entry->second.rate)) {
                PlantedExpression e;
                e.affect = care_affect;
                e.heldout = !entry->second.heldout_keywords.empty() && text_rng.bernoulli(cfg.plant.heldout_share);
                e.keyword = text_rng.pick(e.heldout ? entry->second.heldout_keywords : entry->second.keywords);
                e.novel_template = !cfg.plant.novel_templates.empty() &&
                                   text_rng.bernoulli(cfg.plant.novel_template_share);
                e.template_text = text_rng.pick(e.novel_template ? cfg.plant.novel_templates : cfg.plant.templates);
                expr = e;
            } else if (care_keys.size() > 1 && text_rng.bernoulli(cfg.plant.noise_rate)) {
                PlantedExpression e;
                do {
                    e.affect = text_rng.pick(care_keys);
                } while (e.affect == care_affect);
                e.noise = true;
                e.keyword = text_rng.pick(cfg.plant.affects.at(e.affect).keywords);
                e.template_text = text_rng.pick(cfg.plant.templates);
                expr = e;
            }

            std::string text;
            if (expr) {
                append_words(text, text_rng, filler_words(), text_rng.below(3));
                text += (text.empty() ? "" : " ") + expr->phrase();
                append_words(text, text_rng, filler_words(), text_rng.below(4));
                expr->comment = comments.size();
                truth.expressions.push_back(*expr);
            } else {
                append_words(text, text_rng, filler_words(), 3 + text_rng.below(7));
            }
            c.text = decorate(std::move(text), text_rng);
            comments.push_back(std::move(c));
        }
    }

    // Engagement. Each viewer emits events according to the post's affects
    // and whether they match the viewer's preferences.
    std::vector<EngagementEvent> events;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        const auto& affects = truth.post_affects[i];
        auto has = [&](std::initializer_list<Affect> list) {
            return std::any_of(list.begin(), list.end(), [&](Affect a) { return affects.contains(a); });
        };
        const bool positive = valence(truth.primary[i]) > 0;
        const bool violating = posts[i].violating;
        const auto n_viewers = std::min<std::size_t>(users.size(), 3 + event_rng.below(16));
        std::set<std::size_t> viewers;
        while (viewers.size() < n_viewers) viewers.insert(event_rng.below(users.size()));
        for (auto v : viewers) {
            const double m = truth.user_preferences[v].intersects(affects) ? 1.0 : 0.0;
            const std::int64_t delay = event_rng.bernoulli(0.9) ? event_rng.between(60, 3 * kDay)
                                                                : event_rng.between(3 * kDay, 100 * kDay);
            const std::int64_t t0 = posts[i].created_at + delay;
            const std::array<double, kEventKindCount> prob = {
                (positive ? 0.55 : 0.25) + 0.2 * m,                                                            // like
                (has({Affect::Adoring, Affect::Touched, Affect::Grateful, Affect::Connected, Affect::Inspired}) ? 0.35 : 0.05) + 0.15 * m,  // love
                has({Affect::Saddened, Affect::Touched}) ? 0.3 : 0.03,                                         // care
                has({Affect::Entertained}) ? 0.6 : 0.03,                                                       // haha
                has({Affect::Surprised, Affect::Excited}) ? 0.4 : 0.04,                                        // wow
                has({Affect::Saddened}) ? 0.6 : has({Affect::Scared}) ? 0.2 : 0.02,                           // sad
                has({Affect::ConstructivelyAngered, Affect::DestructivelyAngered}) ? 0.55 : 0.02,              // angry
                (has({Affect::Informed, Affect::Inspired}) ? 0.3 : 0.06) + 0.1 * m,                            // share
                has({Affect::Informed}) ? 0.4 : 0.05,                                                          // outbound_click
                (violating || has({Affect::DestructivelyAngered}) ? 0.2 : 0.03) * (1.0 - 0.5 * m),             // hide
                0.02,                                                                                          // snooze
                has({Affect::DestructivelyAngered}) ? 0.08 : 0.01,                                             // unfollow
                violating ? 0.3 : has({Affect::DestructivelyAngered}) ? 0.1 : 0.005,                          // report
            };
            for (std::size_t k = 0; k < kEventKindCount; ++k) {
                if (!event_rng.bernoulli(prob[k])) continue;
                events.push_back({posts[i].id, users[v].id, static_cast<EventKind>(k), t0 + static_cast<std::int64_t>(k)});
            }
        }
    }

    // Human annotations.
    std::vector<AnnotationRecord> annotations;
    for (std::size_t i = 0; i < posts.size() && cfg.annotation_rate > 0; ++i) {
        if (!annot_rng.bernoulli(cfg.annotation_rate)) continue;
        std::set<std::size_t> raters;
        while (raters.size() < cfg.raters_per_post) raters.insert(annot_rng.below(cfg.n_raters));
        const Affect primary = truth.primary[i];
        for (auto r : raters) {
            AnnotationRecord a;
            a.post_id = posts[i].id;
            a.rater_id = padded("r", r, 3);
            if (annot_rng.bernoulli(0.85)) a.selected.insert(primary);
            for (Affect x : truth.post_affects[i].to_vector()) {
                if (x != primary && annot_rng.bernoulli(0.55)) a.selected.insert(x);
            }
            if (annot_rng.bernoulli(0.25) && a.selected.size() < kMaxSelections) {
                a.selected.insert(taxonomy[annot_rng.below(kTaxonomySize)]);
            }
            if (annot_rng.bernoulli(0.05) && a.selected.size() < kMaxSelections) a.other = true;
            if (a.selection_count() == 0) a.selected.insert(primary);
            annotations.push_back(std::move(a));
        }
    }

    // Publisher feelings and survey answers.
    for (std::size_t i = 0; i < posts.size(); ++i) {
        if (!survey_rng.bernoulli(cfg.feeling_rate)) continue;
        auto f = survey_rng.bernoulli(0.4) ? feeling_for(truth.primary[i]) : survey_rng.pick(kFeelings());
        out.feelings.push_back({posts[i].id, f});
    }
    const auto n_surveys =
        posts.empty() ? 0 : static_cast<std::size_t>(std::llround(cfg.surveys_per_post * static_cast<double>(posts.size())));
    for (std::size_t s = 0; s < n_surveys; ++s) {
        auto pi = survey_rng.below(posts.size());
        auto ui = survey_rng.below(users.size());
        const double m = truth.user_preferences[ui].intersects(truth.post_affects[pi]) ? 1.0 : 0.0;
        const double logit = 1.6 * valence(truth.primary[pi]) + 1.2 * m - 0.6;
        const bool answer = survey_rng.bernoulli(1.0 / (1.0 + std::exp(-logit)));
        out.surveys.push_back({posts[pi].id, users[ui].id, posts[pi].created_at + survey_rng.between(3600, 5 * kDay), answer});
    }

    out.corpus = Corpus::build(std::move(posts), std::move(users), std::move(comments), std::move(events),
                               std::move(annotations));
    return out;
}

TokenDataset synth_token_dataset(std::uint64_t seed, const dataset::ClassSpace& classes,
                                 const TokenDatasetConfig& cfg) {
    check_rate(cfg.positive_rate, "positive_rate");
    if (cfg.n_users == 0) throw Error(ErrorKind::InvalidArgument, "n_users must be >= 1");
    Rng rng(seed);
    std::vector<User> users;
    for (std::size_t u = 0; u < cfg.n_users; ++u) {
        User user;
        user.id = padded("u", u, 5);
        append_words(user.bio_text, rng, filler_words(), 4);
        user.interests = {rng.pick(topic_tags())};
        user.network_stats = gaussian_vector(rng, kDefaultFeatureDim, 1.0);
        users.push_back(std::move(user));
    }
    TokenDataset out;
    std::vector<Post> posts;
    for (std::size_t i = 0; i < cfg.n_rows; ++i) {
        Post p;
        p.id = padded("q", i, 6);
        p.author_id = users[rng.below(users.size())].id;
        p.created_at = 1'600'000'000 + static_cast<std::int64_t>(i);
        p.dense_features.assign(kDefaultFeatureDim, 0.0);
        std::vector<std::string> title;
        dataset::LabelMask mask = 0;
        for (std::size_t c = 0; c < classes.size(); ++c) {
            if (!rng.bernoulli(cfg.positive_rate)) continue;
            mask |= dataset::LabelMask{1} << c;
            title.push_back(padded("marker", c, 2));
        }
        for (std::size_t f = 0; f < cfg.filler_tokens; ++f) title.push_back(rng.pick(filler_words()));
        rng.shuffle(title);
        p.title = join_tokens(title);
        append_words(p.body, rng, filler_words(), cfg.filler_tokens);
        out.rows.push_back({p.id, users[rng.below(users.size())].id, mask, dataset::kFromEngagement});
        posts.push_back(std::move(p));
    }
    if (cfg.shuffle_labels) {
        std::vector<dataset::LabelMask> masks;
        for (const auto& r : out.rows) masks.push_back(r.labels);
        rng.shuffle(masks);
        for (std::size_t i = 0; i < masks.size(); ++i) out.rows[i].labels = masks[i];
    }
    out.corpus = Corpus::build(std::move(posts), std::move(users), {}, {}, {});
    return out;
}

std::string ground_truth_to_json(const SynthOutput& out) {
    const auto& t = out.truth;
    json j;
    json posts = json::array();
    for (std::size_t i = 0; i < t.primary.size(); ++i) {
        json p;
        p["post_id"] = out.corpus.posts()[i].id;
        p["primary"] = std::string(affect_name(t.primary[i]));
        p["affects"] = t.post_affects[i].to_string();
        posts.push_back(p);
    }
    j["posts"] = posts;
    json exprs = json::array();
    for (const auto& e : t.expressions) {
        json x;
        x["comment"] = e.comment;
        x["affect"] = std::string(affect_name(e.affect));
        x["template"] = e.template_text;
        x["keyword"] = e.keyword;
        x["heldout"] = e.heldout;
        x["novel_template"] = e.novel_template;
        x["noise"] = e.noise;
        exprs.push_back(x);
    }
    j["expressions"] = exprs;
    json held = json::object();
    for (const auto& [a, words] : t.heldout_keywords) held[std::string(affect_name(a))] = words;
    j["heldout_keywords"] = held;
    return j.dump(1) + "\n";
}

void write_output(const SynthOutput& out, const std::filesystem::path& dir) {
    write_corpus(out.corpus, dir);
    std::string surveys, feelings;
    for (const auto& s : out.surveys) {
        json j;
        j["post_id"] = s.post_id;
        j["user_id"] = s.user_id;
        j["at"] = s.at;
        j["answer"] = s.answer;
        surveys += j.dump() + "\n";
    }
    for (const auto& f : out.feelings) {
        json j;
        j["post_id"] = f.post_id;
        j["feeling"] = f.feeling;
        feelings += j.dump() + "\n";
    }
    write_file_atomic(dir / "surveys.jsonl", surveys);
    write_file_atomic(dir / "feelings.jsonl", feelings);
    write_file_atomic(dir / "ground_truth.json", ground_truth_to_json(out));
}

namespace {
json parse_line(std::string_view line, const std::filesystem::path& path, std::size_t lineno) {
    try {
        auto j = json::parse(line);
        if (!j.is_object()) throw Error(ErrorKind::Parse, "");
        return j;
    } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": malformed record");
    }
}
}  // namespace

std::vector<SurveyResponse> read_surveys(const std::filesystem::path& path) {
    std::vector<SurveyResponse> out;
    for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        auto j = parse_line(line, path, lineno);
        try {
            out.push_back({j.at("post_id").get<std::string>(), j.at("user_id").get<std::string>(),
                           j.at("at").get<std::int64_t>(), j.at("answer").get<bool>()});
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    });
    return out;
}

std::vector<PublisherFeeling> read_feelings(const std::filesystem::path& path) {
    std::vector<PublisherFeeling> out;
    for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        auto j = parse_line(line, path, lineno);
        try {
            out.push_back({j.at("post_id").get<std::string>(), j.at("feeling").get<std::string>()});
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    });
    return out;
}

}  // namespace affectfeed::synth
