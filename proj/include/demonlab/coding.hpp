#pragma once

// Two-part enumerative code for binary outcome records: the count of ones,
// then the rank of the record among all records with that count.
// Records are ordered lexicographically with 1 sorting before 0.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

#include "demonlab/errors.hpp"

namespace demonlab::coding {

class RecordTape {
 public:
  RecordTape() = default;

  explicit RecordTape(std::vector<bool> bits) : bits_(std::move(bits)) {
    ones_ = static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
  }

  static RecordTape from_string(std::string_view s) {
    std::vector<bool> b;
    b.reserve(s.size());
    for (char c : s) {
      if (c != '0' && c != '1') throw InvalidInput("tape string must contain only 0 and 1");
      b.push_back(c == '1');
    }
    return RecordTape(std::move(b));
  }

  std::size_t size() const noexcept { return bits_.size(); }
  std::size_t ones() const noexcept { return ones_; }
  bool empty() const noexcept { return bits_.empty(); }
  bool operator[](std::size_t i) const { return bits_[i]; }
  const std::vector<bool>& bits() const noexcept { return bits_; }

  void push_back(bool b) {
    bits_.push_back(b);
    ones_ += b ? 1 : 0;
  }

  void clear() noexcept {
    bits_.clear();
    ones_ = 0;
  }

  std::string to_string() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i]) s[i] = '1';
    return s;
  }

  friend bool operator==(const RecordTape& a, const RecordTape& b) { return a.bits_ == b.bits_; }

 private:
  std::vector<bool> bits_;
  std::size_t ones_ = 0;
};

struct Codeword {
  std::vector<bool> payload;
  std::uint64_t declared_n = 0;

  std::size_t length() const noexcept { return payload.size(); }
  friend bool operator==(const Codeword&, const Codeword&) = default;
};

inline mpz_class binomial(std::uint64_t n, std::uint64_t k) {
  mpz_class c;
  if (k > n) return c;
  mpz_bin_uiui(c.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return c;
}

/// ceil(lg(n+1)): width of the count field.
inline std::size_t count_bits(std::uint64_t n) { return static_cast<std::size_t>(std::bit_width(n)); }

/// ceil(lg C(n,k)): width of the rank field, 0 when only one record exists.
inline std::size_t rank_bits(std::uint64_t n, std::uint64_t k) {
  mpz_class c = binomial(n, k);
  if (c <= 1) return 0;
  c -= 1;
  return mpz_sizeinbase(c.get_mpz_t(), 2);
}

inline std::size_t codeword_length(std::uint64_t n, std::uint64_t k) { return count_bits(n) + rank_bits(n, k); }

namespace detail {

inline constexpr std::size_t kBlock = 4096;
inline constexpr std::size_t kLeaf = 64;

// For positions [lo, hi) entered with m positions and r ones remaining:
//   pm = prod m_i, pa = prod a_i,  w = sum_i u_i * prod_{t<i} a_t * prod_{t>i} m_t
// where a_i = r_i for a one, m_i - r_i for a zero, and u_i = r_i for a zero
// (the count of records that sort before it), 0 for a one.
// With J = C(m, r) the block adds J*w/pm to the rank and leaves J*pa/pm.
struct Summary {
  mpz_class pm, pa, w;
};

inline Summary summarize(const std::vector<bool>& bits, std::size_t lo, std::size_t hi, std::uint64_t m,
                         std::uint64_t r) {
  Summary s;
  if (hi - lo <= kLeaf) {
    s.pm = 1;
    s.pa = 1;
    s.w = 0;
    for (std::size_t i = lo; i < hi; ++i, --m) {
      const bool one = bits[i];
      mpz_mul_ui(s.w.get_mpz_t(), s.w.get_mpz_t(), m);
      if (!one && r > 0) mpz_addmul_ui(s.w.get_mpz_t(), s.pa.get_mpz_t(), r);
      mpz_mul_ui(s.pm.get_mpz_t(), s.pm.get_mpz_t(), m);
      mpz_mul_ui(s.pa.get_mpz_t(), s.pa.get_mpz_t(), one ? r : m - r);
      if (one) --r;
    }
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  const auto left_ones = static_cast<std::uint64_t>(std::count(bits.begin() + static_cast<std::ptrdiff_t>(lo),
                                                               bits.begin() + static_cast<std::ptrdiff_t>(mid), true));
  Summary a = summarize(bits, lo, mid, m, r);
  Summary b = summarize(bits, mid, hi, m - (mid - lo), r - left_ones);
  s.w = a.w * b.pm;
  mpz_addmul(s.w.get_mpz_t(), a.pa.get_mpz_t(), b.w.get_mpz_t());
  s.pm = a.pm * b.pm;
  s.pa = a.pa * b.pa;
  return s;
}

// Adds the block's rank contribution to x and advances j to C(m', r').
inline void apply_block(const Summary& s, mpz_class& x, mpz_class& j) {
  mpz_class t = j * s.w;
  mpz_divexact(t.get_mpz_t(), t.get_mpz_t(), s.pm.get_mpz_t());
  x += t;
  j *= s.pa;
  mpz_divexact(j.get_mpz_t(), j.get_mpz_t(), s.pm.get_mpz_t());
}

inline void check_tape_size(std::size_t n) {
  if (n > 0xFFFFFFFFull) throw InvalidInput("tape longer than 2^32 - 1 bits");
}

}  // namespace detail

/// Rank of the tape among records of the same length and weight.
inline mpz_class enumerative_rank(const RecordTape& tape) {
  const std::size_t n = tape.size();
  detail::check_tape_size(n);
  mpz_class x = 0;
  mpz_class j = binomial(n, tape.ones());
  std::uint64_t m = n, r = tape.ones();
  for (std::size_t lo = 0; lo < n && r > 0 && r < m; lo += detail::kBlock) {
    const std::size_t hi = std::min(n, lo + detail::kBlock);
    const detail::Summary s = detail::summarize(tape.bits(), lo, hi, m, r);
    detail::apply_block(s, x, j);
    r -= static_cast<std::uint64_t>(std::count(tape.bits().begin() + static_cast<std::ptrdiff_t>(lo),
                                               tape.bits().begin() + static_cast<std::ptrdiff_t>(hi), true));
    m -= hi - lo;
  }
  return x;
}

inline Codeword enumerative_encode(const RecordTape& tape) {
  const std::uint64_t n = tape.size(), k = tape.ones();
  Codeword cw;
  cw.declared_n = n;
  const std::size_t kb = count_bits(n), rb = rank_bits(n, k);
  cw.payload.reserve(kb + rb);
  for (std::size_t i = kb; i-- > 0;) cw.payload.push_back(((k >> i) & 1u) != 0);
  if (rb > 0) {
    const mpz_class x = enumerative_rank(tape);
    const std::string digits = x.get_str(2);
    cw.payload.insert(cw.payload.end(), rb - digits.size(), false);
    for (char c : digits) cw.payload.push_back(c == '1');
  }
  return cw;
}

inline RecordTape enumerative_decode(const Codeword& cw) {
  const std::uint64_t n = cw.declared_n;
  detail::check_tape_size(n);
  const std::size_t kb = count_bits(n);
  if (cw.payload.size() < kb) throw CorruptCodeword("payload shorter than the count field");
  std::uint64_t k = 0;
  for (std::size_t i = 0; i < kb; ++i) k = (k << 1) | (cw.payload[i] ? 1u : 0u);
  if (k > n) throw CorruptCodeword("count field exceeds declared length");
  const mpz_class total = binomial(n, k);
  const std::size_t rb = rank_bits(n, k);
  if (cw.payload.size() != kb + rb) throw CorruptCodeword("payload length does not match its count field");

  mpz_class x = 0;
  if (rb > 0) {
    std::string digits(rb, '0');
    for (std::size_t i = 0; i < rb; ++i)
      if (cw.payload[kb + i]) digits[i] = '1';
    x.set_str(digits, 2);
  }
  if (x >= total) throw CorruptCodeword("rank field not below C(N,k)");

  std::vector<bool> bits(n, false);
  mpz_class j = total;
  std::uint64_t m = n, r = k;
  mpz_class xt, jt, z;
  for (std::size_t lo = 0; lo < n; lo += detail::kBlock) {
    if (r == 0) break;
    if (r == m) {
      std::fill(bits.begin() + static_cast<std::ptrdiff_t>(lo), bits.end(), true);
      break;
    }
    const std::size_t hi = std::min<std::size_t>(n, lo + detail::kBlock);
    const std::size_t jbits = mpz_sizeinbase(j.get_mpz_t(), 2);
    std::size_t guard = 64;
    for (;;) {
      // Guess the block from the leading bits of x and J, then verify exactly.
      const std::size_t need = (jbits * (hi - lo) + m - 1) / m + guard;
      const std::size_t shift = need + 2 >= jbits ? 0 : jbits - need;
      mpz_fdiv_q_2exp(xt.get_mpz_t(), x.get_mpz_t(), shift);
      mpz_fdiv_q_2exp(jt.get_mpz_t(), j.get_mpz_t(), shift);
      std::uint64_t mm = m, rr = r;
      for (std::size_t i = lo; i < hi; ++i, --mm) {
        if (rr == 0) {
          bits[i] = false;
          continue;
        }
        if (rr == mm) {
          bits[i] = true;
          --rr;
          continue;
        }
        mpz_mul_ui(z.get_mpz_t(), jt.get_mpz_t(), rr);
        mpz_tdiv_q_ui(z.get_mpz_t(), z.get_mpz_t(), mm);
        if (xt < z) {
          bits[i] = true;
          jt = z;
          --rr;
        } else {
          bits[i] = false;
          xt -= z;
          jt -= z;
        }
      }
      const detail::Summary s = detail::summarize(bits, lo, hi, m, r);
      mpz_class contrib = j * s.w;
      mpz_divexact(contrib.get_mpz_t(), contrib.get_mpz_t(), s.pm.get_mpz_t());
      mpz_class jend = j * s.pa;
      mpz_divexact(jend.get_mpz_t(), jend.get_mpz_t(), s.pm.get_mpz_t());
      if (contrib <= x) {
        mpz_class rest = x - contrib;
        if (rest < jend) {
          x = std::move(rest);
          j = std::move(jend);
          r = rr;
          m = mm;
          break;
        }
      }
      if (shift == 0) throw std::logic_error("enumerative_decode: exact block verification failed");
      guard *= 8;
    }
  }
  return RecordTape(std::move(bits));
}

/// Length in bits of the tape's codeword, computed without encoding it.
inline std::uint64_t k_estimate(const RecordTape& tape) { return codeword_length(tape.size(), tape.ones()); }

/// N * h(p), the per-record information rate of a Bernoulli(p) source.
inline double asymptotic_k(std::uint64_t n, double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("asymptotic_k: p must lie in (0,1)");
  const double h = -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
  return static_cast<double>(n) * h;
}

/// Noiseless-coding lower bound: no code is shorter on average than the
/// entropy it removes.
inline bool coding_bound_check(double delta_h, double mean_code_length) {
  if (!(delta_h >= 0.0)) throw InvalidInput("coding_bound_check: delta_H must be non-negative");
  return delta_h <= mean_code_length;
}

/// File form: declared N as 8 little-endian bytes, then payload bits packed
/// most significant first, last byte zero padded.
inline std::vector<std::uint8_t> serialize(const Codeword& cw) {
  std::vector<std::uint8_t> out(8 + (cw.payload.size() + 7) / 8, 0);
  for (int i = 0; i < 8; ++i) out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(cw.declared_n >> (8 * i));
  for (std::size_t i = 0; i < cw.payload.size(); ++i)
    if (cw.payload[i]) out[8 + i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  return out;
}

inline Codeword deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw CorruptCodeword("missing length header");
  Codeword cw;
  for (int i = 0; i < 8; ++i) cw.declared_n |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(i)]) << (8 * i);
  const std::size_t avail = (bytes.size() - 8) * 8;
  auto bit = [&](std::size_t i) { return (bytes[8 + i / 8] & (0x80u >> (i % 8))) != 0; };
  const std::size_t kb = count_bits(cw.declared_n);
  if (avail < kb) throw CorruptCodeword("payload shorter than the count field");
  std::uint64_t k = 0;
  for (std::size_t i = 0; i < kb; ++i) k = (k << 1) | (bit(i) ? 1u : 0u);
  if (k > cw.declared_n) throw CorruptCodeword("count field exceeds declared length");
  const std::size_t len = kb + rank_bits(cw.declared_n, k);
  if ((len + 7) / 8 != bytes.size() - 8) throw CorruptCodeword("byte count does not match payload length");
  for (std::size_t i = len; i < avail; ++i)
    if (bit(i)) throw CorruptCodeword("non-zero padding");
  cw.payload.resize(len);
  for (std::size_t i = 0; i < len; ++i) cw.payload[i] = bit(i);
  return cw;
}

}  // namespace demonlab::coding
