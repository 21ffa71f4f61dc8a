// Copyright 2026 The bb84lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Classical messages, their binary encoding, abort reasons and transcripts.

#ifndef BB84LAB_PROTOCOL_MESSAGE_HPP_
#define BB84LAB_PROTOCOL_MESSAGE_HPP_

#include <bit>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bb84lab/gf2.hpp"

namespace bb84lab::protocol {

using gf2::BitVec;
using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint16_t kProtocolVersion = 1;

enum class Tag : std::uint8_t {
  HELLO = 1,
  QSIGNAL = 2,
  BASES_B = 3,
  BASES_A_AND_R = 4,
  SUBSET_S = 5,
  TEST_BITS = 6,
  DELTA_DECISION = 7,
  PERM = 8,
  CODE = 9,
  SYNDROME_ENC = 10,
  KEY_CONFIRM = 11,
  ABORT = 12,
  DONE = 13,
};

inline constexpr Tag kFirstTag = Tag::HELLO;
inline constexpr Tag kLastTag = Tag::DONE;

inline bool valid_tag(std::uint8_t t) {
  return t >= static_cast<std::uint8_t>(kFirstTag) && t <= static_cast<std::uint8_t>(kLastTag);
}

inline const char* tag_name(Tag t) {
  switch (t) {
    case Tag::HELLO: return "HELLO";
    case Tag::QSIGNAL: return "QSIGNAL";
    case Tag::BASES_B: return "BASES_B";
    case Tag::BASES_A_AND_R: return "BASES_A_AND_R";
    case Tag::SUBSET_S: return "SUBSET_S";
    case Tag::TEST_BITS: return "TEST_BITS";
    case Tag::DELTA_DECISION: return "DELTA_DECISION";
    case Tag::PERM: return "PERM";
    case Tag::CODE: return "CODE";
    case Tag::SYNDROME_ENC: return "SYNDROME_ENC";
    case Tag::KEY_CONFIRM: return "KEY_CONFIRM";
    case Tag::ABORT: return "ABORT";
    case Tag::DONE: return "DONE";
  }
  return "UNKNOWN";
}

// Step of Protocol 1 in which each announcement is made (0 = session setup).
inline int tag_step(Tag t) {
  switch (t) {
    case Tag::HELLO: return 0;
    case Tag::QSIGNAL: return 3;
    case Tag::BASES_B:
    case Tag::BASES_A_AND_R:
    case Tag::SUBSET_S: return 5;
    case Tag::TEST_BITS:
    case Tag::DELTA_DECISION: return 6;
    case Tag::PERM:
    case Tag::CODE: return 7;
    default: return 9;
  }
}

// Reconciliation subtypes carried in SYNDROME_ENC payloads.
enum class SyndromeKind : std::uint8_t {
  PASS_START = 0x01,
  PARITY_REQUEST = 0x02,
  PARITY_REPLY = 0x03,
  HAMMING_SYNDROME = 0x04,
};

enum class AbortReason : std::uint8_t {
  none = 0,
  insufficient_test_set = 1,
  subset_unavailable = 2,
  delta_exceeded = 3,
  no_key_length = 4,
  pool_exhausted = 5,
  confirmation_mismatch = 6,
  transport_failure = 7,
  framing_error = 8,
  phase_order = 9,
  version_mismatch = 10,
  config_mismatch = 11,
};

inline const char* abort_reason_name(AbortReason r) {
  switch (r) {
    case AbortReason::none: return "";
    case AbortReason::insufficient_test_set: return "insufficient_test_set";
    case AbortReason::subset_unavailable: return "subset_unavailable";
    case AbortReason::delta_exceeded: return "delta_exceeded";
    case AbortReason::no_key_length: return "no_key_length";
    case AbortReason::pool_exhausted: return "pool_exhausted";
    case AbortReason::confirmation_mismatch: return "confirmation_mismatch";
    case AbortReason::transport_failure: return "transport_failure";
    case AbortReason::framing_error: return "framing_error";
    case AbortReason::phase_order: return "phase_order";
    case AbortReason::version_mismatch: return "version_mismatch";
    case AbortReason::config_mismatch: return "config_mismatch";
  }
  return "unknown";
}

class FramingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Party : std::uint8_t { alice = 0, bob = 1 };

inline const char* party_name(Party p) { return p == Party::alice ? "alice" : "bob"; }

struct Message {
  Tag tag = Tag::HELLO;
  Bytes payload;
  bool operator==(const Message&) const = default;
};

// Big-endian writer.
class ByteWriter {
 public:
  ByteWriter& u8(std::uint8_t v) {
    out_.push_back(v);
    return *this;
  }
  ByteWriter& u16(std::uint16_t v) { return be(v, 2); }
  ByteWriter& u32(std::uint32_t v) { return be(v, 4); }
  ByteWriter& u64(std::uint64_t v) { return be(v, 8); }
  ByteWriter& f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }
  ByteWriter& raw(const Bytes& b) {
    out_.insert(out_.end(), b.begin(), b.end());
    return *this;
  }
  // u32 bit length, then the packed bytes.
  ByteWriter& bits(const BitVec& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    return raw(v.to_bytes());
  }
  ByteWriter& str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
    return *this;
  }
  ByteWriter& indices(const std::vector<std::uint32_t>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (auto x : v) u32(x);
    return *this;
  }
  Bytes take() { return std::move(out_); }

 private:
  ByteWriter& be(std::uint64_t v, int n) {
    for (int i = n - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(const Bytes& b) : b_(b) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
  std::uint64_t u64() { return be(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  BitVec bits(std::size_t max_bits = std::size_t{1} << 26) {
    const std::uint32_t n = u32();
    if (n > max_bits) throw FramingError("bit vector too long");
    const std::size_t nbytes = (n + 7) / 8;
    need(nbytes);
    Bytes raw(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.begin() + static_cast<std::ptrdiff_t>(pos_ + nbytes));
    pos_ += nbytes;
    try {
      return BitVec::from_bytes(raw, n);
    } catch (const std::exception& e) {
      throw FramingError(e.what());
    }
  }
  std::string str(std::size_t max_len = 1 << 16) {
    const std::uint32_t n = u32();
    if (n > max_len) throw FramingError("string too long");
    need(n);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::vector<std::uint32_t> indices(std::size_t max_count = std::size_t{1} << 24) {
    const std::uint32_t n = u32();
    if (n > max_count) throw FramingError("index list too long");
    need(std::size_t{4} * n);
    std::vector<std::uint32_t> v(n);
    for (auto& x : v) x = u32();
    return v;
  }
  bool done() const { return pos_ == b_.size(); }
  void expect_done() const {
    if (!done()) throw FramingError("trailing bytes in payload");
  }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FramingError("payload truncated");
  }
  std::uint64_t be(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | b_[pos_++];
    return v;
  }
  const Bytes& b_;
  std::size_t pos_ = 0;
};

inline std::string to_hex(const Bytes& b) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * b.size());
  for (auto x : b) {
    s.push_back(kDigits[x >> 4]);
    s.push_back(kDigits[x & 15]);
  }
  return s;
}

inline Bytes from_hex(std::string_view s) {
  if (s.size() % 2) throw FramingError("odd-length hex");
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw FramingError("bad hex digit");
  };
  Bytes b(s.size() / 2);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<std::uint8_t>(nib(s[2 * i]) << 4 | nib(s[2 * i + 1]));
  return b;
}

struct TranscriptRecord {
  int step = 0;
  Party sender = Party::alice;
  Message message;
  bool operator==(const TranscriptRecord&) const = default;
};

// Every classical announcement in order; QSIGNALs are not recorded.
class Transcript {
 public:
  static constexpr std::string_view kHeader = "# bb84lab transcript v1";

  void record(Party sender, const Message& m) {
    if (m.tag == Tag::QSIGNAL) return;
    records_.push_back({tag_step(m.tag), sender, m});
  }
  const std::vector<TranscriptRecord>& records() const { return records_; }
  bool operator==(const Transcript&) const = default;

  // Header line, then one "step<TAB>sender<TAB>TAG<TAB>hex" line per record.
  std::string serialize() const {
    std::ostringstream os;
    os << kHeader << '\n';
    for (const auto& r : records_) {
      os << r.step << '\t' << party_name(r.sender) << '\t' << tag_name(r.message.tag) << '\t'
         << to_hex(r.message.payload) << '\n';
    }
    return os.str();
  }

  static Transcript parse(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kHeader) throw FramingError("transcript: missing header");
    Transcript t;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string step, sender, tag, hex;
      std::getline(ls, step, '\t');
      std::getline(ls, sender, '\t');
      std::getline(ls, tag, '\t');
      std::getline(ls, hex);
      TranscriptRecord r;
      try {
        r.step = std::stoi(step);
      } catch (const std::exception&) {
        throw FramingError("transcript: bad step");
      }
      if (sender != "alice" && sender != "bob") throw FramingError("transcript: bad sender");
      r.sender = sender == "alice" ? Party::alice : Party::bob;
      std::optional<Tag> found;
      for (auto v = static_cast<std::uint8_t>(kFirstTag); v <= static_cast<std::uint8_t>(kLastTag); ++v) {
        if (tag == tag_name(static_cast<Tag>(v))) found = static_cast<Tag>(v);
      }
      if (!found) throw FramingError("transcript: unknown tag " + tag);
      r.message = {*found, from_hex(hex)};
      t.records_.push_back(std::move(r));
    }
    return t;
  }

 private:
  std::vector<TranscriptRecord> records_;
};

}  // namespace bb84lab::protocol

#endif  // BB84LAB_PROTOCOL_MESSAGE_HPP_
