#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "attend/error.hpp"
#include "attend/transport.hpp"
#include "attend/wire_protocol.hpp"
#include "support/test_support.hpp"

using namespace attend;
using namespace attend::wire;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::io;
}

TEST(Encode, GrammarExamples) {
  EXPECT_EQ(encode(ScanEvent{CardUid::parse("04A1B2C3"), 7}), "EV|SCAN|04A1B2C3|7\n");
  EXPECT_EQ(encode(WeightEvent{"C1", 71250, 8}), "EV|WT|C1|71250|8\n");
  EXPECT_EQ(encode(LcdCommand{verify::LcdCode::Welcome, "AYSE YILMAZ"}), "CMD|LCD|WELCOME|AYSE YILMAZ\n");
  EXPECT_EQ(encode(LcdCommand{verify::LcdCode::SystemReady, ""}), "CMD|LCD|SYSTEM_READY|\n");
  EXPECT_EQ(encode(TareCommand{"C2"}), "CMD|TARE|C2\n");
  EXPECT_EQ(encode(Ack{9}), "OK|9\n");
  EXPECT_EQ(encode(Nack{9, "bad_frame"}), "ERR|9|bad_frame\n");
}

TEST(Encode, RejectsInvalidFields) {
  EXPECT_EQ(code_of([] { encode(LcdCommand{verify::LcdCode::Welcome, "A|B"}); }), Errc::encode);
  EXPECT_EQ(code_of([] { encode(LcdCommand{verify::LcdCode::Welcome, "A\nB"}); }), Errc::encode);
  EXPECT_EQ(code_of([] { encode(LcdCommand{verify::LcdCode::Welcome, "lower"}); }), Errc::encode);
  EXPECT_EQ(code_of([] { encode(LcdCommand{verify::LcdCode::Welcome, "SEVENTEEN CHARS!!"}); }), Errc::encode);
  EXPECT_EQ(code_of([] { encode(WeightEvent{"C|1", 1, 1}); }), Errc::encode);
  EXPECT_EQ(code_of([] { encode(WeightEvent{"", 1, 1}); }), Errc::encode);
  EXPECT_EQ(code_of([] { encode(WeightEvent{"C1", kMaxGrams + 1, 1}); }), Errc::encode);
  EXPECT_EQ(code_of([] { encode(Nack{1, "has space"}); }), Errc::encode);
}

TEST(Decode, Examples) {
  EXPECT_EQ(decode("EV|SCAN|04A1B2C3|7\n"), Frame(ScanEvent{CardUid::parse("04A1B2C3"), 7}));
  EXPECT_EQ(decode("EV|WT|C1|71250|8"), Frame(WeightEvent{"C1", 71250, 8}));
  for (const char* bad : {"EV|SCAN|XYZ|7\n", "EV|WT|C1|71250\n", "", "\n", "EV|SCAN|04A1B2C3|7\n\n",
                          "EV|SCAN|04A1B2C3|07", "EV|SCAN|04A1B2C3|-1", "EV|SCAN|04A1B2C3|4294967296",
                          "EV|WT|C1|500001|1", "EV|SCAN|04a1b2c3|1", "NOPE|1", "OK|", "OK|1|2",
                          "CMD|LCD|SHOUT|HI", "CMD|TARE|", "ev|scan|04A1B2C3|7"}) {
    EXPECT_EQ(code_of([&] { decode(bad); }), Errc::protocol) << bad;
  }
}

TEST(RoundTrip, RandomFrames) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20000; ++i) {
    const auto f = testsupport::random_frame(rng);
    const auto line = encode(f);
    ASSERT_LE(line.size(), kMaxLineBytes);
    ASSERT_EQ(decode(line), f) << line;
  }
}

TEST(Fuzz, DecodeNeverCrashes) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> len(0, 256), byte(0, 255), mode(0, 2);
  const std::string alphabet = "EV|SCANWTCMDLCTREOKR0123456789ABCDEF\n ";
  std::size_t ok = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string line;
    const int n = len(rng);
    const int m = mode(rng);
    for (int k = 0; k < n; ++k) {
      line.push_back(m == 0 ? static_cast<char>(byte(rng)) : alphabet[byte(rng) % alphabet.size()]);
    }
    if (m == 2 && n > 0) line.replace(0, std::min<std::size_t>(3, line.size()), "EV|");
    try {
      decode(line);
      ++ok;
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), Errc::protocol);
    }
  }
  SUCCEED() << ok << " accidental valid lines";
}

TEST(Split, Examples) {
  auto r = split_lines("OK|1\nEV|SC");
  EXPECT_EQ(r.lines, std::vector<std::string>{"OK|1"});
  EXPECT_EQ(r.remainder, "EV|SC");
  EXPECT_FALSE(r.framing_error);

  r = split_lines("");
  EXPECT_TRUE(r.lines.empty());
  EXPECT_EQ(r.remainder, "");

  r = split_lines(std::string(300, 'A'));
  EXPECT_TRUE(r.framing_error);
  EXPECT_EQ(r.remainder, "");
}

TEST(Split, StatefulSplitterRecoversAfterOverflow) {
  LineSplitter s;
  EXPECT_TRUE(s.feed(std::string(200, 'X')).empty());
  EXPECT_TRUE(s.feed(std::string(100, 'X')).empty());
  EXPECT_EQ(s.framing_errors(), 1u);
  EXPECT_EQ(s.buffered(), 0u);
  auto lines = s.feed("tail of junk\nOK|3\n");
  EXPECT_EQ(lines, std::vector<std::string>{"OK|3"});
}

TEST(Split, ChunkBoundaryReassembly) {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 20; ++round) {
    std::vector<Frame> frames;
    std::string stream;
    for (int i = 0; i < 1000; ++i) {
      frames.push_back(testsupport::random_frame(rng));
      stream += encode(frames.back());
    }
    LineSplitter splitter;
    std::vector<Frame> got;
    std::uniform_int_distribution<std::size_t> cut(1, 64);
    for (std::size_t pos = 0; pos < stream.size();) {
      const auto n = std::min(cut(rng), stream.size() - pos);
      for (const auto& line : splitter.feed(std::string_view(stream).substr(pos, n))) got.push_back(decode(line));
      pos += n;
    }
    ASSERT_EQ(got, frames);
    EXPECT_EQ(splitter.buffered(), 0u);
    EXPECT_EQ(splitter.framing_errors(), 0u);
  }
}

TEST(Sequence, StrictlyIncreasing) {
  SequenceTracker t;
  EXPECT_TRUE(t.accept(1));
  EXPECT_TRUE(t.accept(5));
  EXPECT_FALSE(t.accept(5));
  EXPECT_FALSE(t.accept(4));
  EXPECT_TRUE(t.accept(6));
  EXPECT_EQ(t.last(), 6u);
  EXPECT_EQ(seq_of(ScanEvent{CardUid::parse("04A1B2C3"), 7}), 7u);
  EXPECT_FALSE(seq_of(TareCommand{"C1"}));
}

TEST(Tokens, ClosedSetWithAliases) {
  const std::vector<std::pair<EventToken, std::string>> want{
      {EventToken::YANLIS_SAAT, "WRONG_TIME"},
      {EventToken::DERS_KAYIT, "COURSE_ENROLLMENT"},
      {EventToken::DERS_SILINDI, "COURSE_DELETED"},
      {EventToken::OGRENCI_BILGILERI_GUNCELLENDI, "STUDENT_INFORMATION_UPDATED"},
      {EventToken::KATILDI, "ATTENDED"}};
  for (const auto& [tok, alias] : want) {
    EXPECT_EQ(english_alias(tok), alias);
    EXPECT_EQ(parse_event_token(to_string(tok)), tok);
  }
  EXPECT_FALSE(parse_event_token("ATTENDED_LATE"));
}

TEST(Transport, FragmentsButPreservesBytes) {
  ByteChannel ch;
  ch.write("EV|SCAN|04A1B2C3|1\n");
  EXPECT_EQ(ch.available(), 19u);
  EXPECT_EQ(ch.read_some(5), "EV|SC");
  EXPECT_EQ(ch.read_some(100), "AN|04A1B2C3|1\n");
  EXPECT_EQ(ch.read_some(100), "");
}

TEST(Transport, WaitingReadSeesLaterWrite) {
  ByteChannel ch;
  std::thread writer([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    ch.write("OK|1\n");
  });
  const auto got = ch.read_some_wait(64, std::chrono::seconds(5));
  writer.join();
  EXPECT_FALSE(got.empty());
}

TEST(Transport, PortIsExclusive) {
  auto port = SerialPort::create(std::make_shared<DuplexLink>());
  {
    auto monitor = port->open("serial-monitor");
    EXPECT_EQ(port->holder(), "serial-monitor");
    try {
      port->open("attendance-service");
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::conflict);
      EXPECT_NE(std::string(e.what()).find("serial-monitor"), std::string::npos);
    }
  }
  EXPECT_FALSE(port->holder());
  auto svc = port->open("attendance-service");
  auto moved = std::move(svc);
  EXPECT_EQ(port->holder(), "attendance-service");
  port->link().to_host.write("OK|1\n");
  EXPECT_EQ(moved.read_some(64), "OK|1\n");
  moved.write("CMD|TARE|C1\n");
  EXPECT_EQ(port->link().to_device.read_some(64), "CMD|TARE|C1\n");
}

}  // namespace
