#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace affectfeed {

// The fifteen response classes used for annotation, plus Approving, which
// only comment labeling produces. AngeredUnsplit is not a taxonomy member:
// comment labeling cannot tell constructive from destructive anger, so its
// angered keywords map here and the class never reaches training.
enum class Affect : std::uint8_t {
    Adoring,
    Connected,
    ConstructivelyAngered,
    DestructivelyAngered,
    Entertained,
    Excited,
    Grateful,
    Informed,
    Inspired,
    Neutral,
    Relaxed,
    Saddened,
    Scared,
    Surprised,
    Touched,
    Approving,
    AngeredUnsplit,
};

inline constexpr std::size_t kTaxonomySize = 16;
inline constexpr std::size_t kAffectSlots = 17;

// All taxonomy affects in declaration order (AngeredUnsplit excluded).
const std::array<Affect, kTaxonomySize>& taxonomy_affects();

// The affects comment labeling can emit.
const std::vector<Affect>& care_affects();

bool is_taxonomy(Affect a);
bool excluded_from_training(Affect a);
bool is_negative(Affect a);

std::string_view affect_name(Affect a);
std::optional<Affect> parse_affect(std::string_view name);

// Small value-type set over Affect, iterated in declaration order.
class AffectSet {
public:
    constexpr AffectSet() = default;
    AffectSet(std::initializer_list<Affect> affects);

    static constexpr AffectSet from_bits(std::uint32_t bits) {
        AffectSet s;
        s.bits_ = bits & ((1u << kAffectSlots) - 1);
        return s;
    }

    void insert(Affect a) { bits_ |= bit(a); }
    void erase(Affect a) { bits_ &= ~bit(a); }
    bool contains(Affect a) const { return (bits_ & bit(a)) != 0; }
    bool empty() const { return bits_ == 0; }
    std::size_t size() const;
    std::uint32_t bits() const { return bits_; }

    AffectSet& operator|=(AffectSet o) {
        bits_ |= o.bits_;
        return *this;
    }
    friend AffectSet operator|(AffectSet a, AffectSet b) { return from_bits(a.bits_ | b.bits_); }
    friend AffectSet operator&(AffectSet a, AffectSet b) { return from_bits(a.bits_ & b.bits_); }
    bool includes(AffectSet o) const { return (bits_ & o.bits_) == o.bits_; }
    bool intersects(AffectSet o) const { return (bits_ & o.bits_) != 0; }
    friend bool operator==(AffectSet, AffectSet) = default;

    std::vector<Affect> to_vector() const;
    // Comma-separated names, "" for the empty set.
    std::string to_string() const;
    static AffectSet parse(std::string_view csv);

private:
    static constexpr std::uint32_t bit(Affect a) { return 1u << static_cast<unsigned>(a); }
    std::uint32_t bits_ = 0;
};

enum class EventKind : std::uint8_t {
    Like,
    Love,
    Care,
    Haha,
    Wow,
    Sad,
    Angry,
    Share,
    OutboundClick,
    Hide,
    Snooze,
    Unfollow,
    Report,
};

inline constexpr std::size_t kEventKindCount = 13;

const std::array<EventKind, kEventKindCount>& all_event_kinds();
std::string_view event_kind_name(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view name);

}  // namespace affectfeed
