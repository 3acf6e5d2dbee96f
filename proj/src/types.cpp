#include "attend/types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include <fmt/format.h>

#include "attend/error.hpp"

namespace attend {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::schema: return "schema";
    case Errc::row: return "row";
    case Errc::domain: return "domain";
    case Errc::conflict: return "conflict";
    case Errc::not_found: return "not_found";
    case Errc::malformed_uid: return "malformed_uid";
    case Errc::ambiguity: return "ambiguity";
    case Errc::calibration: return "calibration";
    case Errc::protocol: return "protocol";
    case Errc::framing: return "framing";
    case Errc::encode: return "encode";
    case Errc::parse: return "parse";
    case Errc::reference: return "reference";
    case Errc::validation: return "validation";
    case Errc::wrong_time: return "wrong_time";
    case Errc::state: return "state";
    case Errc::io: return "io";
  }
  return "unknown";
}

namespace {

std::string lower_trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_upper_hex(char c) noexcept { return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'F'); }

int hex_value(char c) noexcept { return c <= '9' ? c - '0' : c - 'A' + 10; }

}  // namespace

std::optional<Gender> parse_gender(std::string_view token) {
  const std::string t = lower_trimmed(token);
  if (t == "male" || t == "m" || t == "erkek") return Gender::Male;
  if (t == "female" || t == "f" || t == "kadin" || t == "kadın") return Gender::Female;
  return std::nullopt;
}

char gender_letter(Gender g) noexcept { return g == Gender::Male ? 'M' : 'F'; }

std::string_view gender_name(Gender g) noexcept { return g == Gender::Male ? "Male" : "Female"; }

bool is_canonical_uid(std::string_view text) noexcept {
  return text.size() == 8 && std::all_of(text.begin(), text.end(), is_upper_hex);
}

CardUid CardUid::parse(std::string_view text) {
  if (!is_canonical_uid(text)) {
    throw Error(Errc::malformed_uid, fmt::format("malformed card uid '{}'", text));
  }
  return CardUid(std::string(text));
}

std::optional<CardUid> CardUid::try_parse(std::string_view text) noexcept {
  if (!is_canonical_uid(text)) return std::nullopt;
  return CardUid(std::string(text));
}

CardUid CardUid::from_bytes(std::array<std::uint8_t, 4> bytes) noexcept {
  return CardUid(fmt::format("{:02X}{:02X}{:02X}{:02X}", bytes[0], bytes[1], bytes[2], bytes[3]));
}

std::array<std::uint8_t, 4> CardUid::bytes() const noexcept {
  std::array<std::uint8_t, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = static_cast<std::uint8_t>(hex_value(text_[2 * i]) * 16 + hex_value(text_[2 * i + 1]));
  }
  return out;
}

std::string format_iso(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{floor<seconds>(t - day)};
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

Timestamp parse_iso(std::string_view text) {
  auto fail = [&]() -> Error {
    return Error(Errc::parse, fmt::format("bad ISO-8601 local time '{}'", text));
  };
  auto number = [&](std::size_t pos, std::size_t len) {
    if (pos + len > text.size()) throw fail();
    int v = 0;
    const char* first = text.data() + pos;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) throw fail();
    return v;
  };
  auto expect = [&](std::size_t pos, char c) {
    if (pos >= text.size() || text[pos] != c) throw fail();
  };
  if (text.size() != 16 && text.size() != 19) throw fail();
  const int y = number(0, 4);
  expect(4, '-');
  const int mo = number(5, 2);
  expect(7, '-');
  const int d = number(8, 2);
  expect(10, 'T');
  const int h = number(11, 2);
  expect(13, ':');
  const int mi = number(14, 2);
  int s = 0;
  if (text.size() == 19) {
    expect(16, ':');
    s = number(17, 2);
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) throw fail();
  return local_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

}  // namespace attend
