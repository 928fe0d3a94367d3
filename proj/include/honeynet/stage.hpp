#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace honeynet {

/// Attack phases, ordered along the exploitation chain.
enum class AttackStage : std::uint8_t {
  Reconnaissance = 0,
  InitialAccess = 1,
  UserDataExfil = 2,
  PrivEsc = 3,
  RootDataExfil = 4,
};

inline constexpr int kStageCount = 5;

inline constexpr std::array<AttackStage, kStageCount> kAllStages = {
    AttackStage::Reconnaissance, AttackStage::InitialAccess, AttackStage::UserDataExfil,
    AttackStage::PrivEsc, AttackStage::RootDataExfil};

constexpr int ordinal(AttackStage s) { return static_cast<int>(s); }

constexpr AttackStage stage_from_ordinal(int i) { return static_cast<AttackStage>(i); }

std::string_view to_string(AttackStage s);

/// Canonical name or common alias ("Initial Access", "priv_esc", "discovery", ...).
std::optional<AttackStage> parse_stage(std::string_view text);

/// Small value-type set of stages, one bit per ordinal.
class StageSet {
 public:
  constexpr StageSet() = default;
  constexpr StageSet(std::initializer_list<AttackStage> stages) {
    for (auto s : stages) insert(s);
  }

  static constexpr StageSet from_bits(std::uint8_t bits) {
    StageSet out;
    out.bits_ = bits & 0x1F;
    return out;
  }

  constexpr void insert(AttackStage s) { bits_ |= bit(s); }
  constexpr void erase(AttackStage s) { bits_ &= static_cast<std::uint8_t>(~bit(s)); }
  constexpr bool contains(AttackStage s) const { return (bits_ & bit(s)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }

  constexpr int size() const {
    int n = 0;
    for (auto b = bits_; b != 0; b &= static_cast<std::uint8_t>(b - 1)) ++n;
    return n;
  }

  /// Highest stage in the set, if any.
  constexpr std::optional<AttackStage> max() const {
    for (int i = kStageCount - 1; i >= 0; --i)
      if (contains(stage_from_ordinal(i))) return stage_from_ordinal(i);
    return std::nullopt;
  }

  constexpr bool is_subset_of(StageSet other) const { return (bits_ & ~other.bits_) == 0; }

  friend constexpr StageSet operator&(StageSet a, StageSet b) { return from_bits(a.bits_ & b.bits_); }
  friend constexpr StageSet operator|(StageSet a, StageSet b) { return from_bits(a.bits_ | b.bits_); }
  /// Set difference.
  friend constexpr StageSet operator-(StageSet a, StageSet b) {
    return from_bits(a.bits_ & static_cast<std::uint8_t>(~b.bits_));
  }
  friend constexpr bool operator==(StageSet, StageSet) = default;

  template <typename F>
  constexpr void for_each(F&& f) const {
    for (auto s : kAllStages)
      if (contains(s)) f(s);
  }

 private:
  static constexpr std::uint8_t bit(AttackStage s) {
    return static_cast<std::uint8_t>(1U << ordinal(s));
  }
  std::uint8_t bits_ = 0;
};

std::string to_string(StageSet set);

}  // namespace honeynet
