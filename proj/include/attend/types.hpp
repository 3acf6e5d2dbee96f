#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace attend {

enum class Gender { Male, Female };

/// Case-insensitive: male/m/erkek and female/f/kadin.
std::optional<Gender> parse_gender(std::string_view token);
char gender_letter(Gender g) noexcept;
std::string_view gender_name(Gender g) noexcept;

/// 4-byte MIFARE NUID rendered as 8 uppercase hex characters.
class CardUid {
 public:
  /// Throws Error(malformed_uid) unless `text` is exactly 8 chars of [0-9A-F].
  /// Lowercase hex is rejected so the textual form stays canonical.
  static CardUid parse(std::string_view text);
  static std::optional<CardUid> try_parse(std::string_view text) noexcept;
  static CardUid from_bytes(std::array<std::uint8_t, 4> bytes) noexcept;

  const std::string& str() const noexcept { return text_; }
  std::array<std::uint8_t, 4> bytes() const noexcept;

  friend bool operator==(const CardUid&, const CardUid&) = default;
  friend auto operator<=>(const CardUid&, const CardUid&) = default;

 private:
  explicit CardUid(std::string text) : text_(std::move(text)) {}
  std::string text_;
};

bool is_canonical_uid(std::string_view text) noexcept;

/// Classroom wall-clock time. Local time without offset.
using Timestamp = std::chrono::local_time<std::chrono::milliseconds>;

/// Virtual monotonic time used by the seat state machines.
using SteadyMillis = std::chrono::milliseconds;

/// `YYYY-MM-DDTHH:MM:SS` (seconds truncated).
std::string format_iso(Timestamp t);
/// Accepts `YYYY-MM-DDTHH:MM[:SS]`; throws Error(parse).
Timestamp parse_iso(std::string_view text);

}  // namespace attend

template <>
struct std::hash<attend::CardUid> {
  std::size_t operator()(const attend::CardUid& uid) const noexcept {
    return std::hash<std::string>{}(uid.str());
  }
};
