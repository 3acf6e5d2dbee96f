#include "attend/classroom_sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <iterator>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "attend/error.hpp"

namespace attend::sim {

VirtualClock::VirtualClock(Timestamp wall_at_start, SteadyMillis tick)
    : tick_(tick), wall_base_(wall_at_start) {
  if (tick.count() <= 0) throw Error(Errc::domain, "clock tick must be positive");
}

void VirtualClock::set_wall(Timestamp wall, SteadyMillis at) noexcept {
  wall_base_ = wall;
  wall_set_at_ = at;
}

Timestamp VirtualClock::default_epoch() { return parse_iso("2000-01-03T08:00:00"); }

const ChairSpec* Scenario::find_chair(std::string_view id) const {
  auto it = std::find_if(chairs.begin(), chairs.end(), [&](const ChairSpec& c) { return c.id == id; });
  return it == chairs.end() ? nullptr : &*it;
}

namespace {

std::vector<std::string_view> words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

class LineParser {
 public:
  LineParser(std::size_t line, std::vector<std::string_view> w) : line_(line), w_(std::move(w)) {}

  [[noreturn]] void fail(std::string_view why) const {
    throw Error(Errc::parse, fmt::format("scenario line {}: {}", line_, why));
  }
  void arity(std::size_t n) const {
    if (w_.size() != n) fail(fmt::format("expected {} words, got {}", n, w_.size()));
  }
  void keyword(std::size_t i, std::string_view kw) const {
    if (i >= w_.size() || w_[i] != kw) fail(fmt::format("expected '{}'", kw));
  }
  template <typename T>
  T number(std::size_t i) const {
    if (i >= w_.size()) fail("missing number");
    T v{};
    const auto s = w_[i];
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) fail(fmt::format("bad number '{}'", s));
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(v)) fail(fmt::format("bad number '{}'", s));
    }
    return v;
  }
  CardUid uid(std::size_t i) const {
    if (i >= w_.size()) fail("missing card uid");
    auto u = CardUid::try_parse(w_[i]);
    if (!u) fail(fmt::format("malformed card uid '{}'", w_[i]));
    return *u;
  }
  std::string_view word(std::size_t i) const {
    if (i >= w_.size()) fail("missing word");
    return w_[i];
  }
  std::size_t size() const noexcept { return w_.size(); }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
  std::vector<std::string_view> w_;
};

bool valid_chair_id(std::string_view id) {
  return !id.empty() && id.size() <= wire::kMaxChairId &&
         std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '-'; });
}

}  // namespace

Scenario load_scenario(std::string_view text) {
  Scenario sc;
  bool seen_seed = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto w = words(line);
    if (w.empty()) {
      if (nl == text.size()) break;
      continue;
    }
    LineParser p(line_no, std::move(w));
    const auto head = p.word(0);
    if (head == "SEED") {
      p.arity(2);
      if (seen_seed) p.fail("duplicate SEED");
      sc.seed = p.number<std::uint64_t>(1);
      seen_seed = true;
    } else if (head == "CHAIR") {
      p.arity(8);
      p.keyword(2, "TARE");
      p.keyword(4, "SCALE");
      p.keyword(6, "NOISE");
      ChairSpec c{std::string(p.word(1)), p.number<seat::RawCounts>(3), p.number<double>(5),
                  p.number<double>(7)};
      if (!valid_chair_id(c.id)) p.fail(fmt::format("bad chair id '{}'", c.id));
      if (c.scale_counts_per_kg == 0.0) p.fail("SCALE must be non-zero");
      if (c.noise_kg < 0.0) p.fail("NOISE must be non-negative");
      if (sc.find_chair(c.id)) p.fail(fmt::format("duplicate chair '{}'", c.id));
      sc.chairs.push_back(std::move(c));
    } else if (head == "CARD") {
      if (p.size() != 2 && p.size() != 4) p.fail("expected CARD <uid> [STUDENT <uid>]");
      CardSpec card{p.uid(1), std::nullopt};
      if (p.size() == 4) {
        p.keyword(2, "STUDENT");
        card.student = p.uid(3);
      }
      if (std::any_of(sc.cards.begin(), sc.cards.end(), [&](const CardSpec& c) { return c.uid == card.uid; })) {
        p.fail(fmt::format("duplicate card '{}'", card.uid.str()));
      }
      sc.cards.push_back(std::move(card));
    } else if (head == "AT") {
      const auto t = p.number<std::int64_t>(1);
      if (t < 0) p.fail("negative time");
      Action a{SteadyMillis{t}, Stand{}, line_no};
      const auto verb = p.word(2);
      if (verb == "SIT") {
        p.arity(5);
        const double kg = p.number<double>(4);
        if (kg < 0) p.fail("negative weight");
        a.what = Sit{std::string(p.word(3)), kg};
      } else if (verb == "STAND") {
        p.arity(4);
        a.what = Stand{std::string(p.word(3))};
      } else if (verb == "SCAN") {
        if (p.size() != 4 && p.size() != 6) p.fail("expected SCAN <uid> [FAIL <n>]");
        ScanCard scan{p.uid(3), 0};
        if (p.size() == 6) {
          p.keyword(4, "FAIL");
          scan.failure_count = p.number<int>(5);
          if (scan.failure_count < 0) p.fail("negative FAIL count");
        }
        a.what = scan;
      } else if (verb == "CLOCK") {
        p.arity(4);
        try {
          a.what = SetTime{parse_iso(p.word(3))};
        } catch (const Error&) {
          p.fail(fmt::format("bad CLOCK value '{}'", p.word(3)));
        }
      } else {
        p.fail(fmt::format("unknown action '{}'", verb));
      }
      if (!sc.timeline.empty() && a.at < sc.timeline.back().at) {
        p.fail(fmt::format("timeline not sorted ({} ms after {} ms)", a.at.count(),
                           sc.timeline.back().at.count()));
      }
      sc.timeline.push_back(std::move(a));
    } else {
      p.fail(fmt::format("unknown directive '{}'", head));
    }
    if (nl == text.size()) break;
  }

  auto ref_error = [](std::size_t line, const std::string& why) {
    return Error(Errc::reference, fmt::format("scenario line {}: {}", line, why));
  };
  for (const auto& a : sc.timeline) {
    if (const auto* s = std::get_if<Sit>(&a.what); s && !sc.find_chair(s->chair)) {
      throw ref_error(a.line, fmt::format("undeclared chair '{}'", s->chair));
    }
    if (const auto* s = std::get_if<Stand>(&a.what); s && !sc.find_chair(s->chair)) {
      throw ref_error(a.line, fmt::format("undeclared chair '{}'", s->chair));
    }
    if (const auto* s = std::get_if<ScanCard>(&a.what)) {
      const bool known = std::any_of(sc.cards.begin(), sc.cards.end(),
                                     [&](const CardSpec& c) { return c.uid == s->uid; });
      if (!known) throw ref_error(a.line, fmt::format("undeclared card '{}'", s->uid.str()));
    }
  }
  return sc;
}

Scenario load_scenario(std::istream& in) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return load_scenario(std::string_view(text));
}

DeviceSim::DeviceSim(Scenario scenario, DeviceConfig cfg)
    : scenario_(std::move(scenario)), cfg_(cfg) {
  if (cfg_.retry_limit < 1) throw Error(Errc::domain, "retry limit must be at least 1");
  chairs_.reserve(scenario_.chairs.size());
  signals_.reserve(scenario_.chairs.size());
  for (std::size_t i = 0; i < scenario_.chairs.size(); ++i) {
    const auto& spec = scenario_.chairs[i];
    chairs_.emplace_back(spec.id, seat::LoadCellConfig{static_cast<double>(spec.tare_counts),
                                                       spec.scale_counts_per_kg, cfg_.deadband_kg});
    // Chair i draws from mt19937_64 seeded with {seed lo32, seed hi32, i}.
    std::seed_seq seq{static_cast<std::uint32_t>(scenario_.seed),
                      static_cast<std::uint32_t>(scenario_.seed >> 32), static_cast<std::uint32_t>(i)};
    signals_.push_back(ChairSignal{0.0, spec.noise_kg, spec.tare_counts, std::mt19937_64(seq)});
  }
}

const seat::Chair* DeviceSim::chair(std::string_view id) const {
  auto it = std::find_if(chairs_.begin(), chairs_.end(), [&](const seat::Chair& c) { return c.id() == id; });
  return it == chairs_.end() ? nullptr : &*it;
}

double DeviceSim::true_kg(std::string_view chair_id) const {
  for (std::size_t i = 0; i < chairs_.size(); ++i) {
    if (chairs_[i].id() == chair_id) return signals_[i].true_kg;
  }
  throw Error(Errc::not_found, fmt::format("no chair '{}'", chair_id));
}

void DeviceSim::apply(const Action& action) {
  auto chair_index = [&](const std::string& id) {
    for (std::size_t i = 0; i < chairs_.size(); ++i) {
      if (chairs_[i].id() == id) return i;
    }
    throw Error(Errc::reference, fmt::format("undeclared chair '{}'", id));
  };
  std::visit(
      [&](const auto& what) {
        using T = std::decay_t<decltype(what)>;
        if constexpr (std::is_same_v<T, Sit>) {
          signals_[chair_index(what.chair)].true_kg = what.kg;
        } else if constexpr (std::is_same_v<T, Stand>) {
          signals_[chair_index(what.chair)].true_kg = 0.0;
        } else if constexpr (std::is_same_v<T, ScanCard>) {
          scans_.push_back(PendingScan{what.uid, what.failure_count});
        } else if constexpr (std::is_same_v<T, SetTime>) {
          clock_.set_wall(what.wall, action.at);
        }
      },
      action.what);
}

// Four cells each carry a quarter of the load plus noise with std dev
// sigma/2, so the summed signal has std dev sigma.
seat::RawCounts DeviceSim::sample(std::size_t index) {
  auto& sig = signals_[index];
  double kg = 0.0;
  if (sig.noise_kg > 0.0) {
    std::normal_distribution<double> cell_noise(0.0, sig.noise_kg / 2.0);
    for (int c = 0; c < kCellsPerChair; ++c) kg += sig.true_kg / kCellsPerChair + cell_noise(sig.rng);
  } else {
    kg = sig.true_kg;
  }
  // The physical cells follow the scenario calibration; the chair's own
  // config only changes through a tare command.
  const auto& spec = scenario_.chairs[index];
  sig.last_raw = std::llround(static_cast<double>(spec.tare_counts) + spec.scale_counts_per_kg * kg);
  return sig.last_raw;
}

std::vector<wire::Frame> DeviceSim::tick() {
  std::vector<wire::Frame> out;
  clock_.advance();
  const auto now = clock_.steady();

  while (next_action_ < scenario_.timeline.size() && scenario_.timeline[next_action_].at <= now) {
    apply(scenario_.timeline[next_action_]);
    ++next_action_;
  }

  for (std::size_t i = 0; i < chairs_.size(); ++i) {
    const auto raw = sample(i);
    if (auto ev = chairs_[i].feed_raw(raw, now)) {
      const auto grams = static_cast<std::uint32_t>(
          std::clamp<long long>(std::llround(ev->kg * 1000.0), 0, wire::kMaxGrams));
      out.emplace_back(wire::WeightEvent{ev->chair_id, grams, next_seq()});
    }
  }

  if (!scans_.empty()) {
    auto& scan = scans_.front();
    ++scan.attempts;
    if (scan.failures_left > 0) {
      --scan.failures_left;
      if (scan.attempts >= cfg_.retry_limit) {
        scans_.pop_front();
        ++lapsed_scans_;
        lcd_code_ = verify::LcdCode::SystemReady;
        lcd_arg_.clear();
      }
    } else {
      out.emplace_back(wire::ScanEvent{scan.uid, next_seq()});
      scans_.pop_front();
    }
  }
  return out;
}

std::vector<wire::Frame> DeviceSim::run_to(SteadyMillis t) {
  std::vector<wire::Frame> out;
  while (clock_.steady() < t) {
    auto frames = tick();
    out.insert(out.end(), std::make_move_iterator(frames.begin()), std::make_move_iterator(frames.end()));
  }
  return out;
}

void DeviceSim::deliver(const wire::Frame& frame) {
  if (const auto* lcd = std::get_if<wire::LcdCommand>(&frame)) {
    lcd_code_ = lcd->code;
    lcd_arg_ = lcd->arg;
  } else if (const auto* tare = std::get_if<wire::TareCommand>(&frame)) {
    for (std::size_t i = 0; i < chairs_.size(); ++i) {
      if (chairs_[i].id() == tare->chair_id) chairs_[i].tare(signals_[i].last_raw);
    }
  }
}

}  // namespace attend::sim
