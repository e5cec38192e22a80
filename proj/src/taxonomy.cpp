#include "affectfeed/taxonomy.hpp"

#include <bit>

#include "affectfeed/error.hpp"

namespace affectfeed {
namespace {

constexpr std::array<std::string_view, kAffectSlots> kAffectNames = {
    "adoring",  "connected", "constructively_angered", "destructively_angered",
    "entertained", "excited", "grateful", "informed", "inspired", "neutral",
    "relaxed", "saddened", "scared", "surprised", "touched", "approving",
    "angered_unsplit",
};

constexpr std::array<std::string_view, kEventKindCount> kEventNames = {
    "like", "love", "care", "haha", "wow", "sad", "angry",
    "share", "outbound_click", "hide", "snooze", "unfollow", "report",
};

}  // namespace

const std::array<Affect, kTaxonomySize>& taxonomy_affects() {
    static const auto all = [] {
        std::array<Affect, kTaxonomySize> out{};
        for (std::size_t i = 0; i < kTaxonomySize; ++i) out[i] = static_cast<Affect>(i);
        return out;
    }();
    return all;
}

const std::vector<Affect>& care_affects() {
    static const std::vector<Affect> affects = {
        Affect::Adoring, Affect::Entertained, Affect::Excited,        Affect::Saddened,
        Affect::Scared,  Affect::Approving,   Affect::AngeredUnsplit,
    };
    return affects;
}

bool is_taxonomy(Affect a) { return static_cast<std::size_t>(a) < kTaxonomySize; }

bool is_negative(Affect a) {
    switch (a) {
        case Affect::ConstructivelyAngered:
        case Affect::DestructivelyAngered:
        case Affect::Saddened:
        case Affect::Scared:
        case Affect::AngeredUnsplit:
            return true;
        default:
            return false;
    }
}

bool excluded_from_training(Affect a) { return is_negative(a) || a == Affect::Neutral; }

std::string_view affect_name(Affect a) { return kAffectNames.at(static_cast<std::size_t>(a)); }

std::optional<Affect> parse_affect(std::string_view name) {
    for (std::size_t i = 0; i < kAffectNames.size(); ++i) {
        if (kAffectNames[i] == name) return static_cast<Affect>(i);
    }
    return std::nullopt;
}

AffectSet::AffectSet(std::initializer_list<Affect> affects) {
    for (Affect a : affects) insert(a);
}

std::size_t AffectSet::size() const { return static_cast<std::size_t>(std::popcount(bits_)); }

std::vector<Affect> AffectSet::to_vector() const {
    std::vector<Affect> out;
    for (std::size_t i = 0; i < kAffectSlots; ++i) {
        if (bits_ & (1u << i)) out.push_back(static_cast<Affect>(i));
    }
    return out;
}

std::string AffectSet::to_string() const {
    std::string out;
    for (Affect a : to_vector()) {
        if (!out.empty()) out += ',';
        out += affect_name(a);
    }
    return out;
}

AffectSet AffectSet::parse(std::string_view csv) {
    AffectSet s;
    while (!csv.empty()) {
        auto comma = csv.find(',');
        auto item = csv.substr(0, comma);
        auto a = parse_affect(item);
        if (!a) throw Error(ErrorKind::Parse, "unknown affect '" + std::string(item) + "'");
        s.insert(*a);
        if (comma == std::string_view::npos) break;
        csv.remove_prefix(comma + 1);
    }
    return s;
}

const std::array<EventKind, kEventKindCount>& all_event_kinds() {
    static const auto all = [] {
        std::array<EventKind, kEventKindCount> out{};
        for (std::size_t i = 0; i < kEventKindCount; ++i) out[i] = static_cast<EventKind>(i);
        return out;
    }();
    return all;
}

std::string_view event_kind_name(EventKind k) { return kEventNames.at(static_cast<std::size_t>(k)); }

std::optional<EventKind> parse_event_kind(std::string_view name) {
    for (std::size_t i = 0; i < kEventNames.size(); ++i) {
        if (kEventNames[i] == name) return static_cast<EventKind>(i);
    }
    return std::nullopt;
}

}  // namespace affectfeed
