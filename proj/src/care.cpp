#include "affectfeed/care.hpp"

#include <algorithm>
#include <sstream>

#include "affectfeed/error.hpp"
#include "affectfeed/io_util.hpp"
#include "affectfeed/text.hpp"
#include "json.hpp"

namespace affectfeed::care {

using json = nlohmann::ordered_json;
using TokenList = std::vector<std::string>;

CarePattern CarePattern::parse(std::string id, std::string_view template_text) {
    CarePattern p;
    p.id_ = std::move(id);
    bool seen_slot = false;
    std::istringstream in{std::string(template_text)};
    std::string word;
    while (in >> word) {
        if (word == kSlot) {
            if (seen_slot) throw Error(ErrorKind::InvalidArgument, "pattern '" + p.id_ + "' has more than one slot");
            seen_slot = true;
            continue;
        }
        for (auto& tok : tokenize(word)) (seen_slot ? p.suffix_ : p.prefix_).push_back(std::move(tok));
    }
    if (!seen_slot) throw Error(ErrorKind::InvalidArgument, "pattern '" + p.id_ + "' has no {kw} slot");
    if (p.prefix_.empty() && p.suffix_.empty()) {
        throw Error(ErrorKind::InvalidArgument, "pattern '" + p.id_ + "' has no literal tokens");
    }
    return p;
}

std::string CarePattern::template_text() const {
    std::string out = join_tokens(prefix_);
    if (!out.empty()) out += ' ';
    out += kSlot;
    if (!suffix_.empty()) out += ' ' + join_tokens(suffix_);
    return out;
}

const Seeds& default_seeds() {
    static const Seeds seeds = [] {
        Seeds s;
        const std::pair<const char*, const char*> patterns[] = {
            {"s01", "what a {kw}"},   {"s02", "this is so {kw}"}, {"s03", "how {kw}"},
            {"s04", "that was {kw}"}, {"s05", "such a {kw}"},     {"s06", "feeling {kw}"},
        };
        for (auto [id, text] : patterns) s.patterns.push_back(CarePattern::parse(id, text));
        const std::pair<Affect, std::vector<const char*>> words[] = {
            {Affect::Adoring, {"cute", "adorable", "sweet", "precious", "lovely"}},
            {Affect::Entertained, {"hilarious", "funny", "amusing", "lol", "priceless"}},
            {Affect::Excited, {"exciting", "awesome", "thrilling", "amazing", "excited"}},
            {Affect::Saddened, {"sad", "heartbreaking", "tragic", "devastating", "depressing"}},
            {Affect::Scared, {"scary", "terrifying", "frightening", "creepy", "alarming"}},
            {Affect::AngeredUnsplit, {"infuriating", "outrageous", "disgusting", "maddening", "enraging"}},
            {Affect::Approving, {"proud", "impressive", "admirable", "respectable", "brave"}},
        };
        for (const auto& [affect, list] : words) {
            for (const char* w : list) s.lexicon[w].insert(affect);
        }
        return s;
    }();
    return seeds;
}

std::vector<PatternMatch> find_matches(const TokenList& tokens, std::span<const CarePattern> patterns) {
    std::vector<PatternMatch> out;
    const std::size_t n = tokens.size();
    for (std::size_t pi = 0; pi < patterns.size(); ++pi) {
        const auto& pre = patterns[pi].prefix();
        const auto& suf = patterns[pi].suffix();
        const std::size_t len = pre.size() + 1 + suf.size();
        if (len > n) continue;
        for (std::size_t i = 0; i + len <= n; ++i) {
            if (!std::equal(pre.begin(), pre.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) continue;
            const std::size_t slot = i + pre.size();
            if (!std::equal(suf.begin(), suf.end(), tokens.begin() + static_cast<std::ptrdiff_t>(slot + 1))) continue;
            out.push_back({pi, i, slot, i + len});
        }
    }
    return out;
}

AffectSet match_tokens(const TokenList& tokens, std::span<const CarePattern> patterns, const Lexicon& lexicon) {
    AffectSet out;
    for (const auto& m : find_matches(tokens, patterns)) {
        auto it = lexicon.find(tokens[m.slot]);
        if (it != lexicon.end()) out |= it->second;
    }
    return out;
}

AffectSet match_comment(std::string_view comment, std::span<const CarePattern> patterns, const Lexicon& lexicon) {
    return match_tokens(tokenize(comment), patterns, lexicon);
}

AffectSet aggregate(std::span<const AffectSet> comment_labels, std::size_t min_support) {
    if (min_support < 1) throw Error(ErrorKind::InvalidArgument, "min_support must be >= 1");
    std::array<std::size_t, kAffectSlots> support{};
    for (const auto& s : comment_labels) {
        for (Affect a : s.to_vector()) ++support[static_cast<std::size_t>(a)];
    }
    AffectSet out;
    for (std::size_t i = 0; i < kAffectSlots; ++i) {
        if (support[i] >= min_support) out.insert(static_cast<Affect>(i));
    }
    return out;
}

AffectSet label_post(std::span<const std::string> comments, std::span<const CarePattern> patterns,
                     const Lexicon& lexicon, std::size_t min_support) {
    std::vector<AffectSet> per_comment;
    per_comment.reserve(comments.size());
    for (const auto& c : comments) per_comment.push_back(match_comment(c, patterns, lexicon));
    return aggregate(per_comment, min_support);
}

std::uint64_t NgramStats::count(Affect a, const std::string& ngram) const {
    auto it = counts_.find(a);
    if (it == counts_.end()) return 0;
    auto jt = it->second.find(ngram);
    return jt == it->second.end() ? 0 : jt->second;
}

namespace {

// Adds the n-grams of one unlabeled comment to every affect in `labels`.
void count_comment(const TokenList& tokens, std::span<const CarePattern> patterns, AffectSet labels,
                   std::size_t n_max, NgramStats& stats) {
    std::vector<bool> consumed(tokens.size(), false);
    for (const auto& m : find_matches(tokens, patterns)) {
        for (std::size_t i = m.begin; i < m.end; ++i) {
            if (i != m.slot) consumed[i] = true;
        }
    }
    const auto affects = labels.to_vector();
    std::size_t seg_begin = 0;
    while (seg_begin < tokens.size()) {
        if (consumed[seg_begin]) {
            ++seg_begin;
            continue;
        }
        std::size_t seg_end = seg_begin;
        while (seg_end < tokens.size() && !consumed[seg_end]) ++seg_end;
        for (std::size_t i = seg_begin; i < seg_end; ++i) {
            for (std::size_t n = 1; n <= n_max && i + n <= seg_end; ++n) {
                auto gram = join_tokens(tokens, i, i + n);
                for (Affect a : affects) stats.add(a, gram);
            }
        }
        seg_begin = seg_end;
    }
}

struct TokenizedPost {
    AffectSet labels;
    std::vector<TokenList> comments;
};

NgramStats mine_tokenized(std::span<const TokenizedPost> posts, std::span<const CarePattern> patterns,
                          const Lexicon& lexicon, std::size_t n_max) {
    if (n_max < 1) throw Error(ErrorKind::InvalidArgument, "n_max must be >= 1");
    NgramStats stats;
    for (const auto& p : posts) {
        if (p.labels.empty()) continue;
        for (const auto& tokens : p.comments) {
            if (!match_tokens(tokens, patterns, lexicon).empty()) continue;
            count_comment(tokens, patterns, p.labels, n_max, stats);
        }
    }
    return stats;
}

bool contains_run(const TokenList& hay, const TokenList& needle) {
    if (needle.size() > hay.size()) return false;
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

NgramStats mine_ngrams(std::span<const LabeledPost> posts, std::span<const CarePattern> patterns,
                       const Lexicon& lexicon, std::size_t n_max) {
    std::vector<TokenizedPost> tokenized;
    tokenized.reserve(posts.size());
    for (const auto& p : posts) {
        TokenizedPost t{p.labels, {}};
        for (const auto& c : p.comments) t.comments.push_back(tokenize(c));
        tokenized.push_back(std::move(t));
    }
    return mine_tokenized(tokenized, patterns, lexicon, n_max);
}

std::string_view change_kind_name(ChangeKind k) {
    switch (k) {
        case ChangeKind::NewPattern: return "new_pattern";
        case ChangeKind::NewKeyword: return "new_keyword";
        case ChangeKind::Conflict: return "conflict";
    }
    return "";
}

ExpandResult expand(std::span<const CarePattern> patterns, const Lexicon& lexicon, const NgramStats& stats,
                    const ExpandThresholds& th) {
    if (th.min_freq < 1 || th.min_classes_for_pattern < 1 || th.min_pattern_tokens < 1) {
        throw Error(ErrorKind::InvalidArgument, "expansion thresholds must be positive");
    }
    if (!(th.purity_for_keyword > 0.5 && th.purity_for_keyword <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "purity_for_keyword must lie in (0.5, 1]");
    }

    // Only n-grams frequent in at least one affect can pass either rule.
    std::map<std::string, std::map<Affect, std::uint64_t>> candidates;
    for (const auto& [affect, counts] : stats.by_affect()) {
        for (const auto& [gram, n] : counts) {
            if (n >= th.min_freq) candidates[gram];
        }
    }
    for (auto& [gram, evidence] : candidates) {
        for (const auto& [affect, counts] : stats.by_affect()) {
            auto it = counts.find(gram);
            if (it != counts.end()) evidence[affect] = it->second;
        }
    }

    ExpandResult out{{patterns.begin(), patterns.end()}, lexicon, {}};

    struct PatternCandidate {
        TokenList tokens;
        std::string gram;
        const std::map<Affect, std::uint64_t>* evidence;
    };
    std::vector<PatternCandidate> pattern_candidates;

    for (const auto& [gram, evidence] : candidates) {
        auto tokens = tokenize(gram);
        std::uint64_t total = 0;
        std::size_t frequent_classes = 0;
        Affect best = evidence.begin()->first;
        std::uint64_t best_count = 0;
        for (const auto& [affect, n] : evidence) {
            total += n;
            if (n >= th.min_freq) ++frequent_classes;
            if (n > best_count) {
                best = affect;
                best_count = n;
            }
        }

        if (tokens.size() >= th.min_pattern_tokens && frequent_classes >= th.min_classes_for_pattern) {
            bool has_keyword = std::any_of(tokens.begin(), tokens.end(),
                                           [&](const std::string& t) { return lexicon.count(t) > 0; });
            bool exists = std::any_of(patterns.begin(), patterns.end(), [&](const CarePattern& p) {
                return p.suffix().empty() && p.prefix() == tokens;
            });
            if (!has_keyword && !exists) pattern_candidates.push_back({tokens, gram, &evidence});
        }

        if (tokens.size() == 1 && best_count >= th.min_freq &&
            static_cast<double>(best_count) >= th.purity_for_keyword * static_cast<double>(total)) {
            ChangelogEntry e;
            e.ngram = gram;
            e.affect = best;
            e.evidence = evidence;
            e.total = total;
            auto it = out.lexicon.find(gram);
            if (it == out.lexicon.end()) {
                e.kind = ChangeKind::NewKeyword;
                out.lexicon[gram].insert(best);
                out.changelog.push_back(std::move(e));
            } else if (!it->second.contains(best)) {
                e.kind = ChangeKind::Conflict;
                e.existing = it->second;
                out.changelog.push_back(std::move(e));
            }
        }
    }

    // A shorter candidate seen only inside a longer one with identical
    // evidence adds nothing; keep the longest form.
    std::vector<ChangelogEntry> pattern_entries;
    for (const auto& c : pattern_candidates) {
        bool subsumed = std::any_of(pattern_candidates.begin(), pattern_candidates.end(), [&](const PatternCandidate& d) {
            return d.tokens.size() > c.tokens.size() && *d.evidence == *c.evidence && contains_run(d.tokens, c.tokens);
        });
        if (subsumed) continue;
        ChangelogEntry e;
        e.kind = ChangeKind::NewPattern;
        e.ngram = c.gram;
        e.pattern_id = "auto" + std::to_string(out.patterns.size() + 1);
        e.evidence = *c.evidence;
        for (const auto& [a, n] : e.evidence) e.total += n;
        out.patterns.push_back(CarePattern::parse(e.pattern_id, c.gram + " " + std::string(kSlot)));
        pattern_entries.push_back(std::move(e));
    }
    out.changelog.insert(out.changelog.begin(), pattern_entries.begin(), pattern_entries.end());
    return out;
}

namespace {

std::vector<TokenizedPost> tokenize_corpus(const Corpus& corpus) {
    std::vector<TokenizedPost> out(corpus.posts().size());
    for (std::size_t p = 0; p < out.size(); ++p) {
        for (auto ci : corpus.comments_of(p)) out[p].comments.push_back(tokenize(corpus.comments()[ci].text));
    }
    return out;
}

std::vector<AffectSet> label_tokenized(const std::vector<TokenizedPost>& posts, std::span<const CarePattern> patterns,
                                       const Lexicon& lexicon, std::size_t min_support) {
    std::vector<AffectSet> labels(posts.size());
    std::vector<AffectSet> per_comment;
    for (std::size_t p = 0; p < posts.size(); ++p) {
        per_comment.clear();
        for (const auto& tokens : posts[p].comments) per_comment.push_back(match_tokens(tokens, patterns, lexicon));
        labels[p] = aggregate(per_comment, min_support);
    }
    return labels;
}

IterationReport summarize(std::size_t iteration, const std::vector<AffectSet>& labels,
                          std::span<const CarePattern> patterns, const Lexicon& lexicon) {
    IterationReport r;
    r.iteration = iteration;
    r.patterns = patterns.size();
    r.keywords = lexicon.size();
    for (const auto& s : labels) {
        if (!s.empty()) ++r.labeled_posts;
        r.labels += s.size();
    }
    return r;
}

}  // namespace

std::vector<AffectSet> label_corpus(const Corpus& corpus, std::span<const CarePattern> patterns,
                                    const Lexicon& lexicon, std::size_t min_support) {
    return label_tokenized(tokenize_corpus(corpus), patterns, lexicon, min_support);
}

CareRun run_care(const Corpus& corpus, const Seeds& seeds, const CareParams& params, const StopRule& stop) {
    if (seeds.patterns.empty() || seeds.lexicon.empty()) {
        throw Error(ErrorKind::InvalidArgument, "CARE needs at least one seed pattern and keyword");
    }
    auto posts = tokenize_corpus(corpus);

    CareRun run;
    run.patterns = seeds.patterns;
    run.lexicon = seeds.lexicon;
    run.labels = label_tokenized(posts, run.patterns, run.lexicon, params.min_support);
    run.reports.push_back(summarize(0, run.labels, run.patterns, run.lexicon));
    run.label_history.push_back(run.labels);

    for (std::size_t iter = 1; iter <= stop.max_iters; ++iter) {
        if (run.reports.back().labels >= stop.target_labels) break;
        for (std::size_t p = 0; p < posts.size(); ++p) posts[p].labels = run.labels[p];
        auto stats = mine_tokenized(posts, run.patterns, run.lexicon, params.n_max);
        auto result = expand(run.patterns, run.lexicon, stats, params.thresholds);

        IterationReport added;
        for (auto& e : result.changelog) {
            e.iteration = iter;
            switch (e.kind) {
                case ChangeKind::NewPattern: ++added.added_patterns; break;
                case ChangeKind::NewKeyword: ++added.added_keywords; break;
                case ChangeKind::Conflict: ++added.conflicts; break;
            }
        }
        run.changelog.insert(run.changelog.end(), result.changelog.begin(), result.changelog.end());
        if (added.added_patterns == 0 && added.added_keywords == 0) break;

        run.patterns = std::move(result.patterns);
        run.lexicon = std::move(result.lexicon);
        run.labels = label_tokenized(posts, run.patterns, run.lexicon, params.min_support);
        auto report = summarize(iter, run.labels, run.patterns, run.lexicon);
        report.added_patterns = added.added_patterns;
        report.added_keywords = added.added_keywords;
        report.conflicts = added.conflicts;
        run.reports.push_back(report);
        run.label_history.push_back(run.labels);
    }
    return run;
}

namespace {
std::pair<std::string_view, std::string_view> split_tab(std::string_view line, const std::filesystem::path& path,
                                                        std::size_t lineno) {
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
        throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": expected a TAB separator");
    }
    return {line.substr(0, tab), line.substr(tab + 1)};
}
}  // namespace

std::vector<CarePattern> read_patterns(const std::filesystem::path& path) {
    std::vector<CarePattern> out;
    for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        if (line.front() == '#') return;
        auto [id, text] = split_tab(line, path, lineno);
        try {
            out.push_back(CarePattern::parse(std::string(id), text));
        } catch (const Error& e) {
            throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        for (std::size_t i = 0; i + 1 < out.size(); ++i) {
            if (out[i].id() == out.back().id()) {
                throw Error(ErrorKind::DuplicateId, path.string() + ":" + std::to_string(lineno) +
                                                        ": duplicate pattern id '" + out.back().id() + "'");
            }
        }
    });
    return out;
}

Lexicon read_lexicon(const std::filesystem::path& path) {
    Lexicon out;
    for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        if (line.front() == '#') return;
        auto [kw, affects] = split_tab(line, path, lineno);
        auto where = path.string() + ":" + std::to_string(lineno) + ": ";
        auto toks = tokenize(kw);
        if (toks.size() != 1 || toks[0] != kw) throw Error(ErrorKind::Parse, where + "keyword must be one lowercase token");
        if (out.count(toks[0])) throw Error(ErrorKind::DuplicateId, where + "duplicate keyword '" + toks[0] + "'");
        AffectSet set;
        try {
            set = AffectSet::parse(affects);
        } catch (const Error& e) {
            throw Error(ErrorKind::Parse, where + e.what());
        }
        if (set.empty()) throw Error(ErrorKind::Parse, where + "keyword maps to no affect");
        out[toks[0]] = set;
    });
    return out;
}

std::string patterns_to_text(std::span<const CarePattern> patterns) {
    std::string out;
    for (const auto& p : patterns) out += p.id() + "\t" + p.template_text() + "\n";
    return out;
}

std::string lexicon_to_text(const Lexicon& lexicon) {
    std::string out;
    for (const auto& [kw, set] : lexicon) out += kw + "\t" + set.to_string() + "\n";
    return out;
}

std::string changelog_to_jsonl(std::span<const ChangelogEntry> entries) {
    std::string out;
    for (const auto& e : entries) {
        json j;
        j["iteration"] = e.iteration;
        j["kind"] = std::string(change_kind_name(e.kind));
        j["ngram"] = e.ngram;
        if (e.kind == ChangeKind::NewPattern) j["pattern_id"] = e.pattern_id;
        if (e.affect) j["affect"] = std::string(affect_name(*e.affect));
        if (e.kind == ChangeKind::Conflict) j["existing"] = e.existing.to_string();
        json ev = json::object();
        for (const auto& [a, n] : e.evidence) ev[std::string(affect_name(a))] = n;
        j["evidence"] = ev;
        j["total"] = e.total;
        out += j.dump() + "\n";
    }
    return out;
}

std::string labels_to_jsonl(const Corpus& corpus, std::span<const AffectSet> labels) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].empty()) continue;
        json j;
        j["post_id"] = corpus.posts()[i].id;
        json arr = json::array();
        for (Affect a : labels[i].to_vector()) arr.push_back(std::string(affect_name(a)));
        j["affects"] = arr;
        out += j.dump() + "\n";
    }
    return out;
}

std::map<std::string, AffectSet> read_labels(const std::filesystem::path& path) {
    std::map<std::string, AffectSet> out;
    for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        auto where = path.string() + ":" + std::to_string(lineno) + ": ";
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::Parse, where + "malformed record: " + e.what());
        }
        if (!j.is_object() || !j.contains("post_id") || !j["post_id"].is_string() || !j.contains("affects") ||
            !j["affects"].is_array()) {
            throw Error(ErrorKind::Parse, where + "expected {\"post_id\": str, \"affects\": [str]}");
        }
        AffectSet set;
        for (const auto& a : j["affects"]) {
            auto parsed = a.is_string() ? parse_affect(a.get<std::string>()) : std::nullopt;
            if (!parsed) throw Error(ErrorKind::Parse, where + "unknown affect " + a.dump());
            set.insert(*parsed);
        }
        auto id = j["post_id"].get<std::string>();
        if (!out.emplace(id, set).second) throw Error(ErrorKind::DuplicateId, where + "duplicate post '" + id + "'");
    });
    return out;
}

}  // namespace affectfeed::care
