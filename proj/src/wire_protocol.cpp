#include "attend/wire_protocol.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include <fmt/format.h>

#include "attend/error.hpp"

namespace attend::wire {

namespace {

bool is_token_char(char c) noexcept {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '-';
}

bool is_arg_char(char c) noexcept {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == ' ' || c == '_' || c == '.' ||
         c == '-';
}

bool valid_token(std::string_view s, std::size_t max_len) noexcept {
  return !s.empty() && s.size() <= max_len && std::all_of(s.begin(), s.end(), is_token_char);
}

bool valid_arg(std::string_view s) noexcept {
  return s.size() <= kMaxLcdArg && std::all_of(s.begin(), s.end(), is_arg_char);
}

void check_field(std::string_view field, bool ok, std::string_view what) {
  if (field.find_first_of("|\n\r") != std::string_view::npos) {
    throw Error(Errc::encode, fmt::format("{} contains a delimiter or newline", what));
  }
  if (!ok) throw Error(Errc::encode, fmt::format("{} '{}' is outside the allowed charset/length", what, field));
}

[[noreturn]] void protocol_error(std::string_view line, std::string_view why) {
  // Keep the echoed line printable and short.
  std::string shown;
  for (char c : line.substr(0, 48)) {
    shown.push_back(std::isprint(static_cast<unsigned char>(c)) ? c : '?');
  }
  throw Error(Errc::protocol, fmt::format("{}: '{}'", why, shown));
}

// Canonical unsigned decimal: no sign, no leading zeros.
std::optional<std::uint32_t> parse_u32(std::string_view s) noexcept {
  if (s.empty() || (s.size() > 1 && s.front() == '0')) return std::nullopt;
  if (!std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) return std::nullopt;
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto bar = line.find('|', start);
    if (bar == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, bar - start));
    start = bar + 1;
  }
}

struct TokenEntry {
  EventToken token;
  std::string_view name;
  std::string_view alias;
};

constexpr std::array<TokenEntry, 5> kTokens{{
    {EventToken::YANLIS_SAAT, "YANLIS_SAAT", "WRONG_TIME"},
    {EventToken::DERS_KAYIT, "DERS_KAYIT", "COURSE_ENROLLMENT"},
    {EventToken::DERS_SILINDI, "DERS_SILINDI", "COURSE_DELETED"},
    {EventToken::OGRENCI_BILGILERI_GUNCELLENDI, "OGRENCI_BILGILERI_GUNCELLENDI",
     "STUDENT_INFORMATION_UPDATED"},
    {EventToken::KATILDI, "KATILDI", "ATTENDED"},
}};

}  // namespace

std::string encode(const Frame& frame) {
  struct Visitor {
    std::string operator()(const ScanEvent& f) const {
      return fmt::format("EV|SCAN|{}|{}\n", f.uid.str(), f.seq);
    }
    std::string operator()(const WeightEvent& f) const {
      check_field(f.chair_id, valid_token(f.chair_id, kMaxChairId), "chair id");
      if (f.grams > kMaxGrams) throw Error(Errc::encode, fmt::format("grams {} above cap", f.grams));
      return fmt::format("EV|WT|{}|{}|{}\n", f.chair_id, f.grams, f.seq);
    }
    std::string operator()(const LcdCommand& f) const {
      check_field(f.arg, valid_arg(f.arg), "lcd argument");
      return fmt::format("CMD|LCD|{}|{}\n", verify::to_string(f.code), f.arg);
    }
    std::string operator()(const TareCommand& f) const {
      check_field(f.chair_id, valid_token(f.chair_id, kMaxChairId), "chair id");
      return fmt::format("CMD|TARE|{}\n", f.chair_id);
    }
    std::string operator()(const Ack& f) const { return fmt::format("OK|{}\n", f.seq); }
    std::string operator()(const Nack& f) const {
      check_field(f.reason, valid_token(f.reason, kMaxReason), "nack reason");
      return fmt::format("ERR|{}|{}\n", f.seq, f.reason);
    }
  };
  return std::visit(Visitor{}, frame);
}

Frame decode(std::string_view line) {
  const std::string_view original = line;
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (line.size() > kMaxLineBytes) protocol_error(original, "line too long");
  if (line.find('\n') != std::string_view::npos) protocol_error(original, "embedded newline");

  const auto f = split_fields(line);
  auto arity = [&](std::size_t n) {
    if (f.size() != n) protocol_error(original, fmt::format("expected {} fields, got {}", n, f.size()));
  };
  auto seq = [&](std::string_view s) {
    const auto v = parse_u32(s);
    if (!v) protocol_error(original, "bad sequence number");
    return *v;
  };

  if (f[0] == "EV" && f.size() >= 2) {
    if (f[1] == "SCAN") {
      arity(4);
      const auto uid = CardUid::try_parse(f[2]);
      if (!uid) protocol_error(original, "bad card uid");
      return ScanEvent{*uid, seq(f[3])};
    }
    if (f[1] == "WT") {
      arity(5);
      if (!valid_token(f[2], kMaxChairId)) protocol_error(original, "bad chair id");
      const auto grams = parse_u32(f[3]);
      if (!grams || *grams > kMaxGrams) protocol_error(original, "bad grams");
      return WeightEvent{std::string(f[2]), *grams, seq(f[4])};
    }
    protocol_error(original, "unknown event tag");
  }
  if (f[0] == "CMD" && f.size() >= 2) {
    if (f[1] == "LCD") {
      arity(4);
      const auto code = verify::parse_lcd_code(f[2]);
      if (!code) protocol_error(original, "unknown lcd code");
      if (!valid_arg(f[3])) protocol_error(original, "bad lcd argument");
      return LcdCommand{*code, std::string(f[3])};
    }
    if (f[1] == "TARE") {
      arity(3);
      if (!valid_token(f[2], kMaxChairId)) protocol_error(original, "bad chair id");
      return TareCommand{std::string(f[2])};
    }
    protocol_error(original, "unknown command tag");
  }
  if (f[0] == "OK") {
    arity(2);
    return Ack{seq(f[1])};
  }
  if (f[0] == "ERR") {
    arity(3);
    if (!valid_token(f[2], kMaxReason)) protocol_error(original, "bad nack reason");
    return Nack{seq(f[1]), std::string(f[2])};
  }
  protocol_error(original, "unknown tag");
}

std::optional<std::uint32_t> seq_of(const Frame& frame) noexcept {
  if (const auto* s = std::get_if<ScanEvent>(&frame)) return s->seq;
  if (const auto* w = std::get_if<WeightEvent>(&frame)) return w->seq;
  if (const auto* a = std::get_if<Ack>(&frame)) return a->seq;
  if (const auto* n = std::get_if<Nack>(&frame)) return n->seq;
  return std::nullopt;
}

bool SequenceTracker::accept(std::uint32_t seq) noexcept {
  if (last_ && seq <= *last_) return false;
  last_ = seq;
  return true;
}

SplitResult split_lines(std::string_view buffer) {
  SplitResult out;
  std::size_t start = 0;
  for (auto nl = buffer.find('\n'); nl != std::string_view::npos; nl = buffer.find('\n', start)) {
    out.lines.emplace_back(buffer.substr(start, nl - start));
    start = nl + 1;
  }
  const auto rest = buffer.substr(start);
  if (rest.size() > kMaxLineBytes) {
    out.framing_error = true;
  } else {
    out.remainder = std::string(rest);
  }
  return out;
}

std::vector<std::string> LineSplitter::feed(std::string_view chunk) {
  std::vector<std::string> lines;
  while (!chunk.empty()) {
    const auto nl = chunk.find('\n');
    const auto piece = chunk.substr(0, nl);
    if (!discarding_) {
      partial_.append(piece);
      if (partial_.size() > kMaxLineBytes) {
        partial_.clear();
        discarding_ = true;
        ++framing_errors_;
      }
    }
    if (nl == std::string_view::npos) break;
    if (!discarding_) lines.push_back(std::move(partial_));
    partial_.clear();
    discarding_ = false;
    chunk.remove_prefix(nl + 1);
  }
  return lines;
}

std::string_view to_string(EventToken t) noexcept { return kTokens[static_cast<std::size_t>(t)].name; }

std::string_view english_alias(EventToken t) noexcept {
  return kTokens[static_cast<std::size_t>(t)].alias;
}

std::optional<EventToken> parse_event_token(std::string_view text) noexcept {
  for (const auto& e : kTokens) {
    if (e.name == text || e.alias == text) return e.token;
  }
  return std::nullopt;
}

}  // namespace attend::wire
