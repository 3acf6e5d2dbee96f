#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "attend/types.hpp"
#include "attend/verification.hpp"

/// Line protocol between the classroom device and the host. Every frame is
/// one ASCII line, `|`-separated, LF-terminated:
///
///   EV|SCAN|<uid>|<seq>          device -> host
///   EV|WT|<chair>|<grams>|<seq>  device -> host
///   CMD|LCD|<code>|<arg>         host -> device
///   CMD|TARE|<chair>             host -> device
///   OK|<seq>                     either way
///   ERR|<seq>|<reason>           either way
namespace attend::wire {

inline constexpr std::uint32_t kMaxGrams = 500000;
inline constexpr std::size_t kMaxLineBytes = 256;
inline constexpr std::size_t kMaxLcdArg = 16;
inline constexpr std::size_t kMaxChairId = 16;
inline constexpr std::size_t kMaxReason = 32;

struct ScanEvent {
  CardUid uid;
  std::uint32_t seq = 0;
  friend bool operator==(const ScanEvent&, const ScanEvent&) = default;
};

struct WeightEvent {
  std::string chair_id;
  std::uint32_t grams = 0;
  std::uint32_t seq = 0;
  friend bool operator==(const WeightEvent&, const WeightEvent&) = default;
};

struct LcdCommand {
  verify::LcdCode code = verify::LcdCode::SystemReady;
  std::string arg;
  friend bool operator==(const LcdCommand&, const LcdCommand&) = default;
};

struct TareCommand {
  std::string chair_id;
  friend bool operator==(const TareCommand&, const TareCommand&) = default;
};

struct Ack {
  std::uint32_t seq = 0;
  friend bool operator==(const Ack&, const Ack&) = default;
};

struct Nack {
  std::uint32_t seq = 0;
  std::string reason;
  friend bool operator==(const Nack&, const Nack&) = default;
};

using Frame = std::variant<ScanEvent, WeightEvent, LcdCommand, TareCommand, Ack, Nack>;

/// Throws Error(encode) when a field breaks the grammar (pipes, newlines,
/// charset, length, grams cap).
std::string encode(const Frame& frame);

/// Accepts one line with or without its trailing LF. Throws Error(protocol)
/// for anything that is not a valid frame.
Frame decode(std::string_view line);

/// Sequence number carried by device-originated frames and acks.
std::optional<std::uint32_t> seq_of(const Frame& frame) noexcept;

/// Checks that device frames arrive with strictly increasing sequence numbers.
class SequenceTracker {
 public:
  bool accept(std::uint32_t seq) noexcept;
  std::optional<std::uint32_t> last() const noexcept { return last_; }

 private:
  std::optional<std::uint32_t> last_;
};

struct SplitResult {
  std::vector<std::string> lines;  // without the LF
  std::string remainder;
  bool framing_error = false;
};

/// Splits on LF. A trailing partial line stays in `remainder` unless it grew
/// past 256 bytes, in which case it is dropped and `framing_error` is set.
SplitResult split_lines(std::string_view buffer);

/// Stateful splitter for a fragmented byte stream. After an oversize line it
/// discards input up to the next LF.
class LineSplitter {
 public:
  std::vector<std::string> feed(std::string_view chunk);
  std::size_t framing_errors() const noexcept { return framing_errors_; }
  std::size_t buffered() const noexcept { return partial_.size(); }

 private:
  std::string partial_;
  bool discarding_ = false;
  std::size_t framing_errors_ = 0;
};

/// Host-side status tokens, as they appear in the instructor's log.
enum class EventToken { YANLIS_SAAT, DERS_KAYIT, DERS_SILINDI, OGRENCI_BILGILERI_GUNCELLENDI, KATILDI };

std::string_view to_string(EventToken t) noexcept;
/// WRONG_TIME, COURSE_ENROLLMENT, COURSE_DELETED, STUDENT_INFORMATION_UPDATED, ATTENDED.
std::string_view english_alias(EventToken t) noexcept;
std::optional<EventToken> parse_event_token(std::string_view text) noexcept;

}  // namespace attend::wire
