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

// Packed linear algebra over GF(2).
//
// Bit order: index i lives in word i / 64 at bit position i % 64 (LSB first).
// Hex serialization groups the bits into bytes the same way (byte k holds
// indices 8k..8k+7, index 8k in the least significant bit) and writes the
// bytes in increasing k, two lowercase hex digits per byte, high nibble
// first. The length is carried out of band. Unused tail bits are always 0.

#ifndef BB84LAB_GF2_HPP_
#define BB84LAB_GF2_HPP_

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bb84lab/rng.hpp"

namespace bb84lab::gf2 {

class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t len) : len_(len), words_((len + 63) / 64, 0) {}

  // "1011": character i is bit i.
  static BitVec from_string(std::string_view bits) {
    BitVec v(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] == '1') {
        v.set(i, true);
      } else if (bits[i] != '0') {
        throw std::invalid_argument("BitVec::from_string: expected '0' or '1'");
      }
    }
    return v;
  }

  // Bit i of the result is bit i of value.
  static BitVec from_uint(std::uint64_t value, std::size_t len) {
    if (len > 64) throw std::invalid_argument("BitVec::from_uint: len > 64");
    BitVec v(len);
    if (len > 0) v.words_[0] = len == 64 ? value : value & ((std::uint64_t{1} << len) - 1);
    return v;
  }

  static BitVec from_hex(std::string_view hex, std::size_t len) {
    const std::size_t nbytes = (len + 7) / 8;
    if (hex.size() != 2 * nbytes) throw std::invalid_argument("BitVec::from_hex: length mismatch");
    BitVec v(len);
    for (std::size_t k = 0; k < nbytes; ++k) {
      const std::uint64_t byte = (nibble(hex[2 * k]) << 4) | nibble(hex[2 * k + 1]);
      v.words_[k / 8] |= byte << (8 * (k % 8));
    }
    if (!v.tail_clear()) throw std::invalid_argument("BitVec::from_hex: nonzero padding bits");
    return v;
  }

  static BitVec from_bytes(std::span<const std::uint8_t> bytes, std::size_t len) {
    if (bytes.size() != (len + 7) / 8) throw std::invalid_argument("BitVec::from_bytes: length mismatch");
    BitVec v(len);
    for (std::size_t k = 0; k < bytes.size(); ++k) {
      v.words_[k / 8] |= std::uint64_t{bytes[k]} << (8 * (k % 8));
    }
    if (!v.tail_clear()) throw std::invalid_argument("BitVec::from_bytes: nonzero padding bits");
    return v;
  }

  static BitVec random(std::size_t len, Rng& rng) {
    BitVec v(len);
    for (auto& w : v.words_) w = rng.next();
    v.clear_tail();
    return v;
  }

  std::size_t size() const { return len_; }
  bool empty() const { return len_ == 0; }

  bool operator[](std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  bool get(std::size_t i) const {
    check_index(i);
    return (*this)[i];
  }
  void set(std::size_t i, bool value) {
    check_index(i);
    const std::uint64_t mask = std::uint64_t{1} << (i % 64);
    if (value) {
      words_[i / 64] |= mask;
    } else {
      words_[i / 64] &= ~mask;
    }
  }
  void flip(std::size_t i) {
    check_index(i);
    words_[i / 64] ^= std::uint64_t{1} << (i % 64);
  }

  BitVec& operator+=(const BitVec& other) {
    check_same_length(other);
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] ^= other.words_[k];
    return *this;
  }
  friend BitVec operator+(BitVec a, const BitVec& b) { return a += b; }

  friend bool dot(const BitVec& a, const BitVec& b) {
    a.check_same_length(b);
    std::uint64_t acc = 0;
    for (std::size_t k = 0; k < a.words_.size(); ++k) acc ^= a.words_[k] & b.words_[k];
    return (std::popcount(acc) & 1) != 0;
  }

  std::size_t weight() const {
    std::size_t w = 0;
    for (auto word : words_) w += static_cast<std::size_t>(std::popcount(word));
    return w;
  }
  bool is_zero() const {
    for (auto word : words_) {
      if (word != 0) return false;
    }
    return true;
  }

  std::uint64_t to_uint() const {
    if (len_ > 64) throw std::length_error("BitVec::to_uint: len > 64");
    return words_.empty() ? 0 : words_[0];
  }

  // Bits at the given positions, in the given order.
  BitVec select(std::span<const std::uint32_t> positions) const {
    BitVec out(positions.size());
    for (std::size_t k = 0; k < positions.size(); ++k) {
      if (get(positions[k])) out.words_[k / 64] |= std::uint64_t{1} << (k % 64);
    }
    return out;
  }

  std::string to_string() const {
    std::string s(len_, '0');
    for (std::size_t i = 0; i < len_; ++i) {
      if ((*this)[i]) s[i] = '1';
    }
    return s;
  }

  std::string to_hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    const std::size_t nbytes = (len_ + 7) / 8;
    std::string s;
    s.reserve(2 * nbytes);
    for (std::size_t k = 0; k < nbytes; ++k) {
      const auto byte = static_cast<unsigned>((words_[k / 8] >> (8 * (k % 8))) & 0xffu);
      s.push_back(kDigits[byte >> 4]);
      s.push_back(kDigits[byte & 0xf]);
    }
    return s;
  }

  std::vector<std::uint8_t> to_bytes() const {
    std::vector<std::uint8_t> out((len_ + 7) / 8);
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] = static_cast<std::uint8_t>(words_[k / 8] >> (8 * (k % 8)));
    }
    return out;
  }

  std::span<const std::uint64_t> words() const { return words_; }

  friend bool operator==(const BitVec&, const BitVec&) = default;

  // Lexicographic on the bit string (index 0 compared first, 0 < 1).
  friend bool lex_less(const BitVec& a, const BitVec& b) {
    const std::size_t n = std::min(a.len_, b.len_);
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] != b[i]) return b[i];
    }
    return a.len_ < b.len_;
  }

 private:
  static std::uint64_t nibble(char c) {
    if (c >= '0' && c <= '9') return static_cast<std::uint64_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint64_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint64_t>(c - 'A' + 10);
    throw std::invalid_argument("BitVec::from_hex: bad hex digit");
  }
  void check_index(std::size_t i) const {
    if (i >= len_) throw std::out_of_range("BitVec: index out of range");
  }
  void check_same_length(const BitVec& other) const {
    if (other.len_ != len_) throw std::invalid_argument("BitVec: length mismatch");
  }
  bool tail_clear() const {
    if (len_ % 64 == 0) return true;
    return (words_.back() >> (len_ % 64)) == 0;
  }
  void clear_tail() {
    if (len_ % 64 != 0) words_.back() &= (std::uint64_t{1} << (len_ % 64)) - 1;
  }

  std::size_t len_ = 0;
  std::vector<std::uint64_t> words_;
};

// Dense rows x cols matrix over GF(2), stored as packed rows.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows, BitVec(cols)) {}

  static BitMatrix identity(std::size_t n) {
    BitMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, true);
    return m;
  }

  // {"110", "011"} is the 2x3 matrix with those rows.
  static BitMatrix from_rows(std::initializer_list<std::string_view> rows) {
    std::vector<BitVec> v;
    for (auto r : rows) v.push_back(BitVec::from_string(r));
    return from_rows(v);
  }
  static BitMatrix from_rows(const std::vector<BitVec>& rows) {
    if (rows.empty()) return {};
    BitMatrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols_) throw std::invalid_argument("BitMatrix: ragged rows");
      m.data_[i] = rows[i];
    }
    return m;
  }
  static BitMatrix from_columns(const std::vector<BitVec>& cols, std::size_t rows) {
    BitMatrix m(rows, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j].size() != rows) throw std::invalid_argument("BitMatrix: column length mismatch");
      for (std::size_t i = 0; i < rows; ++i) {
        if (cols[j][i]) m.set(i, j, true);
      }
    }
    return m;
  }
  static BitMatrix random(std::size_t rows, std::size_t cols, Rng& rng) {
    BitMatrix m(rows, cols);
    for (auto& r : m.data_) r = BitVec::random(cols, rng);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  bool get(std::size_t i, std::size_t j) const { return data_.at(i).get(j); }
  void set(std::size_t i, std::size_t j, bool v) { data_.at(i).set(j, v); }
  const BitVec& row(std::size_t i) const { return data_.at(i); }

  BitVec column(std::size_t j) const {
    BitVec c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      if (data_[i].get(j)) c.set(i, true);
    }
    return c;
  }

  BitVec apply(const BitVec& x) const {
    if (x.size() != cols_) throw std::invalid_argument("BitMatrix::apply: dimension mismatch");
    BitVec out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      if (dot(data_[i], x)) out.set(i, true);
    }
    return out;
  }

  BitMatrix transpose() const {
    BitMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      const auto words = data_[i].words();
      for (std::size_t w = 0; w < words.size(); ++w) {
        std::uint64_t bits = words[w];
        while (bits != 0) {
          const std::size_t j = 64 * w + static_cast<std::size_t>(std::countr_zero(bits));
          t.data_[j].set(i, true);
          bits &= bits - 1;
        }
      }
    }
    return t;
  }

  std::size_t rank() const { return reduced().pivots.size(); }

  // Basis of {x : apply(x) = 0}. One vector per free column of the reduced
  // row echelon form, in increasing column order; pivots are chosen at the
  // lowest available row so the output is reproducible.
  std::vector<BitVec> kernel_basis() const {
    const Reduced red = reduced();
    std::vector<bool> is_pivot(cols_, false);
    for (auto p : red.pivots) is_pivot[p] = true;
    std::vector<BitVec> basis;
    for (std::size_t f = 0; f < cols_; ++f) {
      if (is_pivot[f]) continue;
      BitVec v(cols_);
      v.set(f, true);
      for (std::size_t r = 0; r < red.pivots.size(); ++r) {
        if (red.rows[r][f]) v.set(red.pivots[r], true);
      }
      basis.push_back(std::move(v));
    }
    return basis;
  }

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  struct Reduced {
    std::vector<BitVec> rows;
    std::vector<std::size_t> pivots;  // pivots[r] is the pivot column of rows[r]
  };

  Reduced reduced() const {
    Reduced red{data_, {}};
    std::size_t next = 0;
    for (std::size_t col = 0; col < cols_ && next < rows_; ++col) {
      std::size_t pivot = next;
      while (pivot < rows_ && !red.rows[pivot][col]) ++pivot;
      if (pivot == rows_) continue;
      std::swap(red.rows[next], red.rows[pivot]);
      for (std::size_t r = 0; r < rows_; ++r) {
        if (r != next && red.rows[r][col]) red.rows[r] += red.rows[next];
      }
      red.pivots.push_back(col);
      ++next;
    }
    red.rows.resize(red.pivots.size());
    return red;
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<BitVec> data_;
};

}  // namespace bb84lab::gf2

#endif  // BB84LAB_GF2_HPP_
