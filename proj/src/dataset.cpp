#include "affectfeed/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "affectfeed/error.hpp"
#include "affectfeed/io_util.hpp"
#include "affectfeed/random.hpp"
#include "json.hpp"

namespace affectfeed::dataset {

using json = nlohmann::ordered_json;

ClassSpace ClassSpace::standard(bool include_snooze) {
    ClassSpace cs;
    for (EventKind k : all_event_kinds()) {
        if (k == EventKind::Snooze && !include_snooze) continue;
        cs.entries_.push_back({k, std::nullopt, std::string(event_kind_name(k))});
    }
    for (Affect a : taxonomy_affects()) {
        if (excluded_from_training(a)) continue;
        cs.entries_.push_back({std::nullopt, a, std::string(affect_name(a))});
    }
    return cs;
}

std::optional<std::size_t> ClassSpace::index_of(EventKind k) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].event == k) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> ClassSpace::index_of(Affect a) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].affect == a) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> ClassSpace::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) return i;
    }
    return std::nullopt;
}

std::string sources_to_string(std::uint8_t sources) {
    std::string out;
    auto add = [&](std::uint8_t bit, const char* name) {
        if (!(sources & bit)) return;
        if (!out.empty()) out += '+';
        out += name;
    };
    add(kFromEngagement, "engagement");
    add(kFromCare, "care");
    add(kFromHuman, "human");
    return out;
}

std::uint8_t parse_sources(std::string_view s) {
    std::uint8_t out = 0;
    while (!s.empty()) {
        auto plus = s.find('+');
        auto item = s.substr(0, plus);
        if (item == "engagement") out |= kFromEngagement;
        else if (item == "care") out |= kFromCare;
        else if (item == "human") out |= kFromHuman;
        else throw Error(ErrorKind::Parse, "unknown label source '" + std::string(item) + "'");
        if (plus == std::string_view::npos) break;
        s.remove_prefix(plus + 1);
    }
    if (out == 0) throw Error(ErrorKind::Parse, "label row has no source");
    return out;
}

std::vector<LabeledExample> engagement_labels(const Corpus& corpus, const ClassSpace& classes, std::int64_t as_of,
                                              std::int64_t window_days) {
    if (window_days < 0) throw Error(ErrorKind::InvalidArgument, "window_days must be >= 0");
    const std::int64_t lo = as_of - window_days * kSecondsPerDay;
    std::vector<LabeledExample> rows;
    for (std::size_t p = 0; p < corpus.posts().size(); ++p) {
        std::unordered_map<std::string_view, std::size_t> row_of_user;
        for (auto ei : corpus.events_of(p)) {
            const auto& e = corpus.events()[ei];
            if (e.at <= lo || e.at > as_of) continue;
            auto cls = classes.index_of(e.kind);
            if (!cls) continue;
            auto [it, fresh] = row_of_user.emplace(e.user_id, rows.size());
            if (fresh) rows.push_back({e.post_id, e.user_id, 0, kFromEngagement});
            rows[it->second].labels |= LabelMask{1} << *cls;
        }
    }
    return rows;
}

std::vector<LabeledExample> personalize(const std::map<std::string, AffectSet>& affect_labels, const Corpus& corpus,
                                        const ClassSpace& classes, std::uint8_t source) {
    std::vector<LabeledExample> rows;
    for (std::size_t p = 0; p < corpus.posts().size(); ++p) {
        const auto& post = corpus.posts()[p];
        auto it = affect_labels.find(post.id);
        if (it == affect_labels.end()) continue;

        std::vector<std::string_view> likers;
        for (auto ei : corpus.events_of(p)) {
            const auto& e = corpus.events()[ei];
            if (e.kind != EventKind::Like && e.kind != EventKind::Love) continue;
            if (std::find(likers.begin(), likers.end(), e.user_id) == likers.end()) likers.push_back(e.user_id);
        }
        for (Affect a : it->second.to_vector()) {
            if (is_negative(a)) continue;
            auto cls = classes.index_of(a);
            if (!cls) continue;
            for (auto u : likers) rows.push_back({post.id, std::string(u), LabelMask{1} << *cls, source});
        }
    }
    return rows;
}

std::map<std::string, AffectSet> consensus(std::span<const AnnotationRecord> annotations, std::size_t k) {
    if (k < 1) throw Error(ErrorKind::InvalidArgument, "consensus k must be >= 1");
    std::map<std::string, std::array<std::size_t, kAffectSlots>> votes;
    for (const auto& a : annotations) {
        auto& v = votes[a.post_id];
        for (Affect x : a.selected.to_vector()) ++v[static_cast<std::size_t>(x)];
    }
    std::map<std::string, AffectSet> out;
    for (const auto& [post, v] : votes) {
        AffectSet s;
        for (std::size_t i = 0; i < kAffectSlots; ++i) {
            if (v[i] >= k) s.insert(static_cast<Affect>(i));
        }
        if (!s.empty()) out[post] = s;
    }
    return out;
}

std::vector<LabeledExample> merge_rows(std::span<const LabeledExample> rows) {
    std::vector<LabeledExample> out;
    std::map<std::pair<std::string_view, std::string_view>, std::size_t> index;
    for (const auto& r : rows) {
        auto [it, fresh] = index.emplace(std::pair<std::string_view, std::string_view>{r.post_id, r.user_id}, out.size());
        if (fresh) {
            out.push_back(r);
        } else {
            out[it->second].labels |= r.labels;
            out[it->second].sources |= r.sources;
        }
    }
    return out;
}

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    return "";
}

const std::vector<LabeledExample>& SplitDataset::part(Split s) const {
    switch (s) {
        case Split::Train: return train;
        case Split::Validation: return validation;
        case Split::Test: return test;
    }
    return test;
}

std::vector<LabeledExample>& SplitDataset::part(Split s) {
    return const_cast<std::vector<LabeledExample>&>(std::as_const(*this).part(s));
}

namespace {

constexpr std::array<Split, 3> kSplits = {Split::Train, Split::Validation, Split::Test};

std::array<std::size_t, 3> split_targets(std::size_t n) {
    auto train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
    auto val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
    return {train, val, n - train - val};
}

// Draws `want` items from `pool`; without replacement when the pool is large
// enough, with replacement otherwise. Returns false if it had to replace.
bool draw(const std::vector<std::size_t>& pool, std::size_t want, Rng& rng, std::vector<std::size_t>& out) {
    if (pool.empty() || want == 0) return true;
    if (pool.size() >= want) {
        auto copy = pool;
        for (std::size_t i = 0; i < want; ++i) {
            std::swap(copy[i], copy[i + rng.below(copy.size() - i)]);
            out.push_back(copy[i]);
        }
        return true;
    }
    for (std::size_t i = 0; i < want; ++i) out.push_back(pool[rng.below(pool.size())]);
    return false;
}

}  // namespace

SplitDataset assemble(std::span<const LabeledExample> rows, const ClassSpace& classes, std::size_t per_class_n,
                      std::uint64_t seed) {
    if (per_class_n == 0 || per_class_n % 2 != 0) {
        throw Error(ErrorKind::InvalidArgument, "per_class_n must be a positive even number");
    }
    if (rows.empty()) throw Error(ErrorKind::InsufficientPositives, "no rows to sample from");

    Rng rng(seed);
    SplitDataset ds;
    ds.seed = seed;

    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const auto row_targets = split_targets(rows.size());
    std::vector<Split> split_of(rows.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        split_of[order[r]] = r < row_targets[0] ? Split::Train
                             : r < row_targets[0] + row_targets[1] ? Split::Validation
                                                                     : Split::Test;
    }

    const auto targets = split_targets(per_class_n / 2);
    ds.class_counts.resize(classes.size());
    for (std::size_t cls = 0; cls < classes.size(); ++cls) {
        std::array<std::vector<std::size_t>, 3> pos, neg;
        std::size_t total_pos = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto s = static_cast<std::size_t>(split_of[i]);
            if (rows[i].has(cls)) {
                pos[s].push_back(i);
                ++total_pos;
            } else {
                neg[s].push_back(i);
            }
        }
        if (total_pos == 0) {
            throw Error(ErrorKind::InsufficientPositives, "class '" + classes.name(cls) + "' has no positive rows");
        }
        for (std::size_t s = 0; s < 3; ++s) {
            const auto where = classes.name(cls) + "/" + std::string(split_name(kSplits[s]));
            std::vector<std::size_t> picked;
            if (pos[s].empty() && targets[s] > 0) {
                ds.warnings.push_back(where + ": no positive rows in this split");
            } else if (!draw(pos[s], targets[s], rng, picked)) {
                ds.warnings.push_back(where + ": " + std::to_string(pos[s].size()) + " positives for " +
                                      std::to_string(targets[s]) + " slots, sampled with replacement");
            }
            ds.class_counts[cls].positives[s] = picked.size();
            const auto n_pos = picked.size();
            if (neg[s].empty() && targets[s] > 0) {
                ds.warnings.push_back(where + ": no negative rows in this split");
            } else if (!draw(neg[s], targets[s], rng, picked)) {
                ds.warnings.push_back(where + ": " + std::to_string(neg[s].size()) + " negatives for " +
                                      std::to_string(targets[s]) + " slots, sampled with replacement");
            }
            ds.class_counts[cls].negatives[s] = picked.size() - n_pos;
            auto& dst = ds.part(kSplits[s]);
            for (auto i : picked) dst.push_back(rows[i]);
        }
    }
    return ds;
}

BuildResult build_dataset(const Corpus& corpus, const std::map<std::string, AffectSet>& care_labels,
                          const BuildParams& params) {
    BuildResult out{ClassSpace::standard(params.include_snooze), {}, {}};
    const auto as_of = params.as_of.value_or(corpus.max_timestamp());
    if (as_of < corpus.min_timestamp()) {
        throw Error(ErrorKind::InvalidArgument, "as_of precedes every record in the corpus");
    }
    auto rows = engagement_labels(corpus, out.classes, as_of, params.window_days);
    auto human = personalize(consensus(corpus.annotations(), params.consensus_k), corpus, out.classes, kFromHuman);
    auto care = personalize(care_labels, corpus, out.classes, kFromCare);
    rows.insert(rows.end(), human.begin(), human.end());
    rows.insert(rows.end(), care.begin(), care.end());
    out.rows = merge_rows(rows);
    out.split = assemble(out.rows, out.classes, params.per_class_n, params.seed);
    return out;
}

std::string mask_to_string(LabelMask mask, std::size_t n_classes) {
    std::string out(n_classes, '0');
    for (std::size_t i = 0; i < n_classes; ++i) {
        if ((mask >> i) & 1u) out[i] = '1';
    }
    return out;
}

LabelMask parse_mask(std::string_view bits) {
    if (bits.size() > 32) throw Error(ErrorKind::Parse, "label mask wider than 32 classes");
    LabelMask m = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1') m |= LabelMask{1} << i;
        else if (bits[i] != '0') throw Error(ErrorKind::Parse, "label mask must contain only 0/1");
    }
    return m;
}

std::string dataset_to_jsonl(const SplitDataset& ds, const ClassSpace& classes) {
    std::string out;
    for (Split s : kSplits) {
        for (const auto& r : ds.part(s)) {
            json j;
            j["post_id"] = r.post_id;
            j["user_id"] = r.user_id;
            j["labels"] = mask_to_string(r.labels, classes.size());
            j["source"] = sources_to_string(r.sources);
            j["split"] = std::string(split_name(s));
            out += j.dump() + "\n";
        }
    }
    return out;
}

std::pair<SplitDataset, ClassSpace> read_dataset(const std::filesystem::path& path) {
    SplitDataset ds;
    std::optional<std::size_t> width;
    for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        auto where = path.string() + ":" + std::to_string(lineno) + ": ";
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::Parse, where + "malformed record: " + e.what());
        }
        for (const char* key : {"post_id", "user_id", "labels", "source", "split"}) {
            if (!j.contains(key) || !j[key].is_string()) {
                throw Error(ErrorKind::Parse, where + "missing string field '" + key + "'");
            }
        }
        LabeledExample r;
        r.post_id = j["post_id"].get<std::string>();
        r.user_id = j["user_id"].get<std::string>();
        auto bits = j["labels"].get<std::string>();
        if (width && *width != bits.size()) throw Error(ErrorKind::Parse, where + "label mask width changed");
        width = bits.size();
        try {
            r.labels = parse_mask(bits);
            r.sources = parse_sources(j["source"].get<std::string>());
        } catch (const Error& e) {
            throw Error(ErrorKind::Parse, where + e.what());
        }
        auto split = j["split"].get<std::string>();
        if (split == "train") ds.train.push_back(std::move(r));
        else if (split == "validation") ds.validation.push_back(std::move(r));
        else if (split == "test") ds.test.push_back(std::move(r));
        else throw Error(ErrorKind::Parse, where + "unknown split '" + split + "'");
    });
    auto classes = ClassSpace::standard(false);
    if (width && *width == classes.size() + 1) classes = ClassSpace::standard(true);
    else if (width && *width != classes.size()) {
        throw Error(ErrorKind::Parse, path.string() + ": label masks have " + std::to_string(*width) +
                                          " classes; expected 23 or 24");
    }
    return {std::move(ds), std::move(classes)};
}

std::string summary_csv(const SplitDataset& ds, const ClassSpace& classes) {
    std::string out = "class,split,positives,negatives\n";
    for (std::size_t c = 0; c < classes.size() && c < ds.class_counts.size(); ++c) {
        for (std::size_t s = 0; s < 3; ++s) {
            out += classes.name(c) + "," + std::string(split_name(kSplits[s])) + "," +
                   std::to_string(ds.class_counts[c].positives[s]) + "," +
                   std::to_string(ds.class_counts[c].negatives[s]) + "\n";
        }
    }
    return out;
}

}  // namespace affectfeed::dataset
