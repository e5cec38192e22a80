#include "affectfeed/corpus.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <tuple>

#include "affectfeed/error.hpp"
#include "affectfeed/io_util.hpp"
#include "json.hpp"

namespace affectfeed {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kOtherOption = "other";

struct LineContext {
    const std::filesystem::path& file;
    std::size_t line;

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorKind::Parse, file.string() + ":" + std::to_string(line) + ": " + msg);
    }
};

const json& field(const json& j, const char* key, const LineContext& ctx) {
    auto it = j.find(key);
    if (it == j.end()) ctx.fail(std::string("missing field '") + key + "'");
    return *it;
}

std::string get_string(const json& j, const char* key, const LineContext& ctx) {
    const auto& v = field(j, key, ctx);
    if (!v.is_string()) ctx.fail(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::int64_t get_timestamp(const json& j, const char* key, const LineContext& ctx) {
    const auto& v = field(j, key, ctx);
    if (!v.is_number_integer()) ctx.fail(std::string("field '") + key + "' must be an integer");
    auto t = v.get<std::int64_t>();
    if (t < 0) ctx.fail(std::string("field '") + key + "' must be >= 0");
    return t;
}

std::vector<double> get_reals(const json& j, const char* key, const LineContext& ctx) {
    const auto& v = field(j, key, ctx);
    if (!v.is_array()) ctx.fail(std::string("field '") + key + "' must be an array");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) ctx.fail(std::string("field '") + key + "' must hold numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

std::vector<std::string> get_strings(const json& j, const char* key, const LineContext& ctx) {
    const auto& v = field(j, key, ctx);
    if (!v.is_array()) ctx.fail(std::string("field '") + key + "' must be an array");
    std::vector<std::string> out;
    for (const auto& x : v) {
        if (!x.is_string()) ctx.fail(std::string("field '") + key + "' must hold strings");
        out.push_back(x.get<std::string>());
    }
    return out;
}

template <typename Record, typename Decode>
std::vector<Record> read_records(const std::filesystem::path& path, Decode decode) {
    std::vector<Record> out;
    for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        LineContext ctx{path, lineno};
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            ctx.fail(std::string("malformed record: ") + e.what());
        }
        if (!j.is_object()) ctx.fail("record must be a JSON object");
        out.push_back(decode(j, ctx));
    });
    return out;
}

Post decode_post(const json& j, const LineContext& ctx) {
    Post p;
    p.id = get_string(j, "id", ctx);
    p.title = get_string(j, "title", ctx);
    p.body = get_string(j, "body", ctx);
    if (auto it = j.find("ocr_text"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) ctx.fail("field 'ocr_text' must be a string or null");
        p.ocr_text = it->get<std::string>();
    }
    p.author_id = get_string(j, "author_id", ctx);
    p.created_at = get_timestamp(j, "created_at", ctx);
    const auto& v = field(j, "violating", ctx);
    if (!v.is_boolean()) ctx.fail("field 'violating' must be a boolean");
    p.violating = v.get<bool>();
    p.dense_features = get_reals(j, "dense_features", ctx);
    return p;
}

User decode_user(const json& j, const LineContext& ctx) {
    User u;
    u.id = get_string(j, "id", ctx);
    u.bio_text = get_string(j, "bio", ctx);
    u.interests = get_strings(j, "interests", ctx);
    u.network_stats = get_reals(j, "network_stats", ctx);
    return u;
}

Comment decode_comment(const json& j, const LineContext& ctx) {
    Comment c;
    c.post_id = get_string(j, "post_id", ctx);
    c.text = get_string(j, "text", ctx);
    c.author_id = get_string(j, "author_id", ctx);
    c.created_at = get_timestamp(j, "created_at", ctx);
    return c;
}

EngagementEvent decode_event(const json& j, const LineContext& ctx) {
    EngagementEvent e;
    e.post_id = get_string(j, "post_id", ctx);
    e.user_id = get_string(j, "user_id", ctx);
    auto kind = get_string(j, "kind", ctx);
    auto k = parse_event_kind(kind);
    if (!k) ctx.fail("unknown event kind '" + kind + "'");
    e.kind = *k;
    e.at = get_timestamp(j, "at", ctx);
    return e;
}

AnnotationRecord decode_annotation(const json& j, const LineContext& ctx) {
    AnnotationRecord a;
    a.post_id = get_string(j, "post_id", ctx);
    a.rater_id = get_string(j, "rater_id", ctx);
    for (const auto& s : get_strings(j, "selected", ctx)) {
        if (s == kOtherOption) {
            if (a.other) ctx.fail("option 'other' selected twice");
            a.other = true;
            continue;
        }
        auto aff = parse_affect(s);
        if (!aff || !is_taxonomy(*aff)) ctx.fail("unknown affect '" + s + "'");
        if (a.selected.contains(*aff)) ctx.fail("affect '" + s + "' selected twice");
        a.selected.insert(*aff);
    }
    return a;
}

[[noreturn]] void dangling(const std::string& what) { throw Error(ErrorKind::DanglingReference, what); }

}  // namespace

Corpus Corpus::build(std::vector<Post> posts, std::vector<User> users, std::vector<Comment> comments,
                     std::vector<EngagementEvent> events, std::vector<AnnotationRecord> annotations) {
    Corpus c;
    c.posts_ = std::move(posts);
    c.users_ = std::move(users);
    c.comments_ = std::move(comments);
    c.events_ = std::move(events);
    c.annotations_ = std::move(annotations);

    std::int64_t lo = std::numeric_limits<std::int64_t>::max();
    std::int64_t hi = std::numeric_limits<std::int64_t>::min();
    auto see = [&](std::int64_t t, const std::string& where) {
        if (t < 0) throw Error(ErrorKind::InvalidArgument, where + ": negative timestamp");
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    };

    for (std::size_t i = 0; i < c.users_.size(); ++i) {
        const auto& u = c.users_[i];
        if (!c.user_by_id_.emplace(u.id, i).second) {
            throw Error(ErrorKind::DuplicateId, "duplicate user id '" + u.id + "'");
        }
        if (i == 0) c.network_dim_ = u.network_stats.size();
        if (u.network_stats.size() != c.network_dim_) {
            throw Error(ErrorKind::InvalidArgument, "user '" + u.id + "': network_stats length differs");
        }
    }
    for (std::size_t i = 0; i < c.posts_.size(); ++i) {
        const auto& p = c.posts_[i];
        if (!c.post_by_id_.emplace(p.id, i).second) {
            throw Error(ErrorKind::DuplicateId, "duplicate post id '" + p.id + "'");
        }
        if (i == 0) c.dense_dim_ = p.dense_features.size();
        if (p.dense_features.size() != c.dense_dim_) {
            throw Error(ErrorKind::InvalidArgument, "post '" + p.id + "': dense_features length differs");
        }
        if (!c.user_by_id_.count(p.author_id)) {
            dangling("post '" + p.id + "' has unknown author '" + p.author_id + "'");
        }
        see(p.created_at, "post '" + p.id + "'");
    }

    c.comments_by_post_.assign(c.posts_.size(), {});
    c.events_by_post_.assign(c.posts_.size(), {});
    c.annotations_by_post_.assign(c.posts_.size(), {});

    for (std::size_t i = 0; i < c.comments_.size(); ++i) {
        const auto& cm = c.comments_[i];
        auto it = c.post_by_id_.find(cm.post_id);
        if (it == c.post_by_id_.end()) dangling("comment " + std::to_string(i + 1) + " references unknown post '" + cm.post_id + "'");
        if (!c.user_by_id_.count(cm.author_id)) {
            dangling("comment " + std::to_string(i + 1) + " has unknown author '" + cm.author_id + "'");
        }
        see(cm.created_at, "comment " + std::to_string(i + 1));
        c.comments_by_post_[it->second].push_back(i);
    }

    std::set<std::tuple<std::string_view, std::string_view, EventKind, std::int64_t>> seen_events;
    for (std::size_t i = 0; i < c.events_.size(); ++i) {
        const auto& e = c.events_[i];
        auto it = c.post_by_id_.find(e.post_id);
        if (it == c.post_by_id_.end()) dangling("event " + std::to_string(i + 1) + " references unknown post '" + e.post_id + "'");
        if (!c.user_by_id_.count(e.user_id)) {
            dangling("event " + std::to_string(i + 1) + " references unknown user '" + e.user_id + "'");
        }
        if (!seen_events.emplace(e.post_id, e.user_id, e.kind, e.at).second) {
            throw Error(ErrorKind::DuplicateId, "event " + std::to_string(i + 1) + " repeats (" + e.post_id + ", " +
                                                    e.user_id + ", " + std::string(event_kind_name(e.kind)) +
                                                    ") at the same timestamp");
        }
        see(e.at, "event " + std::to_string(i + 1));
        c.events_by_post_[it->second].push_back(i);
    }

    for (std::size_t i = 0; i < c.annotations_.size(); ++i) {
        const auto& a = c.annotations_[i];
        auto it = c.post_by_id_.find(a.post_id);
        if (it == c.post_by_id_.end()) {
            dangling("annotation " + std::to_string(i + 1) + " references unknown post '" + a.post_id + "'");
        }
        auto n = a.selection_count();
        if (n < 1 || n > kMaxSelections) {
            throw Error(ErrorKind::InvalidArgument,
                        "annotation " + std::to_string(i + 1) + ": must select 1 to 3 options, got " + std::to_string(n));
        }
        for (auto j : c.annotations_by_post_[it->second]) {
            if (c.annotations_[j].rater_id == a.rater_id) {
                throw Error(ErrorKind::DuplicateId,
                            "rater '" + a.rater_id + "' annotated post '" + a.post_id + "' twice");
            }
        }
        c.annotations_by_post_[it->second].push_back(i);
    }

    if (lo <= hi) {
        c.min_ts_ = lo;
        c.max_ts_ = hi;
    }
    return c;
}

std::optional<std::size_t> Corpus::post_index(const std::string& id) const {
    auto it = post_by_id_.find(id);
    if (it == post_by_id_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Corpus::user_index(const std::string& id) const {
    auto it = user_by_id_.find(id);
    if (it == user_by_id_.end()) return std::nullopt;
    return it->second;
}

const Post& Corpus::post(const std::string& id) const {
    auto i = post_index(id);
    if (!i) throw Error(ErrorKind::DanglingReference, "unknown post '" + id + "'");
    return posts_[*i];
}

const User& Corpus::user(const std::string& id) const {
    auto i = user_index(id);
    if (!i) throw Error(ErrorKind::DanglingReference, "unknown user '" + id + "'");
    return users_[*i];
}

CorpusPaths CorpusPaths::in_directory(const std::filesystem::path& dir) {
    CorpusPaths p;
    p.posts = dir / "posts.jsonl";
    p.users = dir / "users.jsonl";
    p.comments = dir / "comments.jsonl";
    p.events = dir / "events.jsonl";
    if (std::filesystem::exists(dir / "annotations.jsonl")) p.annotations = dir / "annotations.jsonl";
    return p;
}

Corpus load_corpus(const CorpusPaths& paths) {
    auto posts = read_records<Post>(paths.posts, decode_post);
    auto users = read_records<User>(paths.users, decode_user);
    auto comments = read_records<Comment>(paths.comments, decode_comment);
    auto events = read_records<EngagementEvent>(paths.events, decode_event);
    std::vector<AnnotationRecord> annotations;
    if (paths.annotations) annotations = read_records<AnnotationRecord>(*paths.annotations, decode_annotation);
    return Corpus::build(std::move(posts), std::move(users), std::move(comments), std::move(events),
                         std::move(annotations));
}

Corpus load_corpus(const std::filesystem::path& dir) { return load_corpus(CorpusPaths::in_directory(dir)); }

std::string post_to_line(const Post& p) {
    json j;
    j["id"] = p.id;
    j["title"] = p.title;
    j["body"] = p.body;
    j["ocr_text"] = p.ocr_text ? json(*p.ocr_text) : json(nullptr);
    j["author_id"] = p.author_id;
    j["created_at"] = p.created_at;
    j["violating"] = p.violating;
    j["dense_features"] = p.dense_features;
    return j.dump();
}

std::string user_to_line(const User& u) {
    json j;
    j["id"] = u.id;
    j["bio"] = u.bio_text;
    j["interests"] = u.interests;
    j["network_stats"] = u.network_stats;
    return j.dump();
}

std::string comment_to_line(const Comment& c) {
    json j;
    j["post_id"] = c.post_id;
    j["text"] = c.text;
    j["author_id"] = c.author_id;
    j["created_at"] = c.created_at;
    return j.dump();
}

std::string event_to_line(const EngagementEvent& e) {
    json j;
    j["post_id"] = e.post_id;
    j["user_id"] = e.user_id;
    j["kind"] = std::string(event_kind_name(e.kind));
    j["at"] = e.at;
    return j.dump();
}

std::string annotation_to_line(const AnnotationRecord& a) {
    json j;
    j["post_id"] = a.post_id;
    j["rater_id"] = a.rater_id;
    json sel = json::array();
    for (Affect x : a.selected.to_vector()) sel.push_back(std::string(affect_name(x)));
    if (a.other) sel.push_back(kOtherOption);
    j["selected"] = sel;
    return j.dump();
}

namespace {
template <typename Range, typename Encode>
std::string encode_lines(const Range& records, Encode encode) {
    std::string out;
    for (const auto& r : records) {
        out += encode(r);
        out += '\n';
    }
    return out;
}
}  // namespace

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "posts.jsonl", encode_lines(corpus.posts(), post_to_line));
    write_file_atomic(dir / "users.jsonl", encode_lines(corpus.users(), user_to_line));
    write_file_atomic(dir / "comments.jsonl", encode_lines(corpus.comments(), comment_to_line));
    write_file_atomic(dir / "events.jsonl", encode_lines(corpus.events(), event_to_line));
    write_file_atomic(dir / "annotations.jsonl", encode_lines(corpus.annotations(), annotation_to_line));
}

}  // namespace affectfeed
