#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "affectfeed/corpus.hpp"
#include "affectfeed/random.hpp"

namespace fixtures {

using namespace affectfeed;

inline Post post(const std::string& id, const std::string& author, std::int64_t at = 1000,
                 const std::string& title = "", bool violating = false) {
    Post p;
    p.id = id;
    p.title = title;
    p.author_id = author;
    p.created_at = at;
    p.violating = violating;
    p.dense_features.assign(kDefaultFeatureDim, 0.0);
    return p;
}

inline User user(const std::string& id, std::vector<std::string> interests = {}) {
    User u;
    u.id = id;
    u.interests = std::move(interests);
    u.network_stats.assign(kDefaultFeatureDim, 0.0);
    return u;
}

inline AnnotationRecord annotation(const std::string& post, const std::string& rater, AffectSet selected,
                                   bool other = false) {
    return {post, rater, selected, other};
}

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("affectfeed_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace fixtures
