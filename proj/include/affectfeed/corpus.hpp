#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "affectfeed/taxonomy.hpp"

namespace affectfeed {

inline constexpr std::size_t kDefaultFeatureDim = 8;

struct Post {
    std::string id;
    std::string title;
    std::string body;
    std::optional<std::string> ocr_text;
    std::string author_id;
    std::int64_t created_at = 0;
    bool violating = false;
    std::vector<double> dense_features;

    friend bool operator==(const Post&, const Post&) = default;
};

struct User {
    std::string id;
    std::string bio_text;
    std::vector<std::string> interests;
    std::vector<double> network_stats;

    friend bool operator==(const User&, const User&) = default;
};

struct Comment {
    std::string post_id;
    std::string text;
    std::string author_id;
    std::int64_t created_at = 0;

    friend bool operator==(const Comment&, const Comment&) = default;
};

struct EngagementEvent {
    std::string post_id;
    std::string user_id;
    EventKind kind = EventKind::Like;
    std::int64_t at = 0;

    friend bool operator==(const EngagementEvent&, const EngagementEvent&) = default;
};

// One rater's multi-select answer for one post. `other` is the free-form
// "none of these" option, which is not an Affect.
struct AnnotationRecord {
    std::string post_id;
    std::string rater_id;
    AffectSet selected;
    bool other = false;

    std::size_t selection_count() const { return selected.size() + (other ? 1 : 0); }
    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

inline constexpr std::size_t kMaxSelections = 3;

// Cross-referenced, validated, immutable collection of records.
class Corpus {
public:
    Corpus() = default;

    // Validates every invariant and builds the indexes. Throws Error with
    // DuplicateId, DanglingReference or InvalidArgument.
    static Corpus build(std::vector<Post> posts, std::vector<User> users,
                        std::vector<Comment> comments, std::vector<EngagementEvent> events,
                        std::vector<AnnotationRecord> annotations);

    std::span<const Post> posts() const { return posts_; }
    std::span<const User> users() const { return users_; }
    std::span<const Comment> comments() const { return comments_; }
    std::span<const EngagementEvent> events() const { return events_; }
    std::span<const AnnotationRecord> annotations() const { return annotations_; }

    std::optional<std::size_t> post_index(const std::string& id) const;
    std::optional<std::size_t> user_index(const std::string& id) const;
    const Post& post(const std::string& id) const;
    const User& user(const std::string& id) const;

    // Indexes into comments()/events()/annotations(), in file order.
    const std::vector<std::size_t>& comments_of(std::size_t post_idx) const { return comments_by_post_[post_idx]; }
    const std::vector<std::size_t>& events_of(std::size_t post_idx) const { return events_by_post_[post_idx]; }
    const std::vector<std::size_t>& annotations_of(std::size_t post_idx) const {
        return annotations_by_post_[post_idx];
    }

    std::size_t dense_dim() const { return dense_dim_; }
    std::size_t network_dim() const { return network_dim_; }

    // Smallest/largest timestamp over posts, comments and events (0 if empty).
    std::int64_t min_timestamp() const { return min_ts_; }
    std::int64_t max_timestamp() const { return max_ts_; }

    bool empty() const { return posts_.empty() && users_.empty(); }

    friend bool operator==(const Corpus& a, const Corpus& b) {
        return a.posts_ == b.posts_ && a.users_ == b.users_ && a.comments_ == b.comments_ &&
               a.events_ == b.events_ && a.annotations_ == b.annotations_;
    }

private:
    std::vector<Post> posts_;
    std::vector<User> users_;
    std::vector<Comment> comments_;
    std::vector<EngagementEvent> events_;
    std::vector<AnnotationRecord> annotations_;

    std::unordered_map<std::string, std::size_t> post_by_id_;
    std::unordered_map<std::string, std::size_t> user_by_id_;
    std::vector<std::vector<std::size_t>> comments_by_post_;
    std::vector<std::vector<std::size_t>> events_by_post_;
    std::vector<std::vector<std::size_t>> annotations_by_post_;
    std::size_t dense_dim_ = kDefaultFeatureDim;
    std::size_t network_dim_ = kDefaultFeatureDim;
    std::int64_t min_ts_ = 0;
    std::int64_t max_ts_ = 0;
};

struct CorpusPaths {
    std::filesystem::path posts;
    std::filesystem::path users;
    std::filesystem::path comments;
    std::filesystem::path events;
    std::optional<std::filesystem::path> annotations;

    // Standard file names inside a corpus directory; annotations are picked
    // up only if the file exists.
    static CorpusPaths in_directory(const std::filesystem::path& dir);
};

Corpus load_corpus(const CorpusPaths& paths);
Corpus load_corpus(const std::filesystem::path& dir);
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

// Per-record line encoders, shared with the writers of derived files.
std::string post_to_line(const Post& p);
std::string user_to_line(const User& u);
std::string comment_to_line(const Comment& c);
std::string event_to_line(const EngagementEvent& e);
std::string annotation_to_line(const AnnotationRecord& a);

}  // namespace affectfeed
