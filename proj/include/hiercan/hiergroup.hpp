#pragma once
// The hierarchical group Omega_N: sequences of digits in {0..N-1} with
// finitely many nonzero entries, per-digit addition mod N, ultrametric
// distance d(a,b) = min{k : a,b agree at every position >= k}. Tree
// addresses name the blocks (balls) of the group at each height.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"

namespace hiercan {

struct HierAddress {
  int N = 2;
  std::vector<std::uint8_t> digits;  // canonical: no trailing zeros

  HierAddress() = default;
  HierAddress(int order, std::vector<std::uint8_t> d) : N(order), digits(std::move(d)) {
    if (N < 2 || N > 255) throw std::invalid_argument("order must be in [2,255]");
    for (auto x : digits)
      if (x >= N) throw std::invalid_argument("digit out of range");
    canonicalize();
  }

  static HierAddress zero(int order) { return HierAddress(order, {}); }

  void canonicalize() {
    while (!digits.empty() && digits.back() == 0) digits.pop_back();
  }

  std::uint8_t digit(std::size_t i) const { return i < digits.size() ? digits[i] : 0; }

  bool operator==(const HierAddress& o) const { return N == o.N && digits == o.digits; }
  bool operator!=(const HierAddress& o) const { return !(*this == o); }
};

inline void require_same_order(const HierAddress& a, const HierAddress& b) {
  if (a.N != b.N) throw std::invalid_argument("addresses from different groups");
}

inline int distance(const HierAddress& a, const HierAddress& b) {
  require_same_order(a, b);
  std::size_t top = std::max(a.digits.size(), b.digits.size());
  for (std::size_t i = top; i > 0; --i)
    if (a.digit(i - 1) != b.digit(i - 1)) return (int)i;
  return 0;
}

inline HierAddress add(const HierAddress& a, const HierAddress& b) {
  require_same_order(a, b);
  std::size_t top = std::max(a.digits.size(), b.digits.size());
  std::vector<std::uint8_t> d(top);
  for (std::size_t i = 0; i < top; ++i)
    d[i] = (std::uint8_t)((a.digit(i) + b.digit(i)) % a.N);
  return HierAddress(a.N, std::move(d));
}

inline HierAddress neg(const HierAddress& a) {
  std::vector<std::uint8_t> d(a.digits.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = (std::uint8_t)(a.digits[i] == 0 ? 0 : a.N - a.digits[i]);
  return HierAddress(a.N, std::move(d));
}

inline HierAddress sub(const HierAddress& a, const HierAddress& b) { return add(a, neg(b)); }

// "2,0,1" = digit 0 is 2, digit 1 is 0, digit 2 is 1; "" is the origin
inline std::string serialize(const HierAddress& a) {
  std::string s;
  for (std::size_t i = 0; i < a.digits.size(); ++i) {
    if (i) s += ',';
    s += std::to_string((int)a.digits[i]);
  }
  return s;
}

inline HierAddress parse_address(int order, const std::string& s) {
  std::vector<std::uint8_t> d;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    int v = std::stoi(s.substr(pos, next - pos));
    if (v < 0 || v >= order) throw std::invalid_argument("digit out of range: " + s);
    d.push_back((std::uint8_t)v);
    pos = next + 1;
  }
  return HierAddress(order, std::move(d));
}

// A vertex of the tree over Omega_N: the block of all leaves agreeing with
// `base` from `height` upward. Digits of base below height are zeroed.
struct TreeAddress {
  HierAddress base;
  int height = 0;

  TreeAddress() = default;
  TreeAddress(HierAddress b, int h) : base(std::move(b)), height(h) {
    if (h < 0) throw std::invalid_argument("height must be >= 0");
    for (int i = 0; i < h && i < (int)base.digits.size(); ++i) base.digits[i] = 0;
    base.canonicalize();
  }

  bool operator==(const TreeAddress& o) const { return height == o.height && base == o.base; }
  bool operator!=(const TreeAddress& o) const { return !(*this == o); }
};

inline std::string serialize(const TreeAddress& t) {
  return serialize(t.base) + "@" + std::to_string(t.height);
}

inline TreeAddress parse_tree_address(int order, const std::string& s) {
  auto at = s.rfind('@');
  if (at == std::string::npos) throw std::invalid_argument("missing @height: " + s);
  return TreeAddress(parse_address(order, s.substr(0, at)), std::stoi(s.substr(at + 1)));
}

// the height-k vertex above a
inline TreeAddress ancestor(const HierAddress& a, int k) {
  if (k < 0) throw std::invalid_argument("ancestor height must be >= 0");
  return TreeAddress(a, k);
}

inline bool contains(const TreeAddress& t, const HierAddress& a) {
  return ancestor(a, t.height) == t;
}

// max of the two graph distances to the closest common ancestor
inline int tree_distance(const TreeAddress& s, const TreeAddress& t) {
  require_same_order(s.base, t.base);
  int join = std::max({s.height, t.height, distance(s.base, t.base)});
  return std::max(join - s.height, join - t.height);
}

// Lazy walk over the N^k leaves of a block; odometer over the low digits.
class BlockRange {
 public:
  explicit BlockRange(TreeAddress t) : root_(std::move(t)) {}

  class iterator {
   public:
    iterator() = default;  // end
    explicit iterator(const TreeAddress* root)
        : root_(root), low_(root->height, 0), done_(false) {}

    HierAddress operator*() const {
      HierAddress a = root_->base;
      if ((int)a.digits.size() < root_->height) a.digits.resize(root_->height, 0);
      for (int i = 0; i < root_->height; ++i) a.digits[i] = low_[i];
      a.canonicalize();
      return a;
    }

    iterator& operator++() {
      int i = 0;
      for (; i < root_->height; ++i) {
        if (++low_[i] < root_->base.N) break;
        low_[i] = 0;
      }
      if (i == root_->height) done_ = true;
      return *this;
    }

    bool operator!=(const iterator& o) const {
      bool ae = done_ || !root_, be = o.done_ || !o.root_;
      return ae != be;  // only meaningful for the range-for begin/end pattern
    }

   private:
    const TreeAddress* root_ = nullptr;
    std::vector<std::uint8_t> low_;
    bool done_ = true;
  };

  iterator begin() const { return iterator(&root_); }
  iterator end() const { return iterator(); }

 private:
  TreeAddress root_;
};

inline BlockRange block_members(const TreeAddress& t) { return BlockRange(t); }

// uniform leaf of the block around `center` at height k
inline HierAddress uniform_in_block(const HierAddress& center, int k, Rng& rng) {
  HierAddress a = center;
  if ((int)a.digits.size() < k) a.digits.resize(k, 0);
  for (int i = 0; i < k; ++i) a.digits[i] = (std::uint8_t)rng.below(a.N);
  a.canonicalize();
  return a;
}

// number of leaves at distance exactly k from a fixed leaf
inline double sphere_size(int N, int k) {
  if (k == 0) return 1.0;
  return std::pow((double)N, k) - std::pow((double)N, k - 1);
}

}  // namespace hiercan
