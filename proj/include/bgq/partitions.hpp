#pragma once

// Set partitions of {0,...,n}: plain, marked, reduced and ordered variants
// together with the reduction/splitting bijections between them.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bgq/errors.hpp"

namespace bgq {

using Block = std::vector<int>;

enum class Family { All, Circ, CircNC, Baro, BaroNC };
enum class MarkedClass { All, Reduced, ReducedDiag, ReducedOff };

inline constexpr std::size_t kDefaultEnumerationCap = 10'000'000;

inline bool is_nc_family(Family f) { return f == Family::CircNC || f == Family::BaroNC; }

// Blocks in a caller-defined order. Each block is stored sorted; the listed
// order of the blocks is part of the value.
class OrderedPartition {
 public:
  OrderedPartition() = default;

  explicit OrderedPartition(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw InvalidInput("partition needs at least one block");
    int total = 0, mx = -1;
    for (auto& b : blocks_) {
      if (b.empty()) throw InvalidInput("empty block");
      std::sort(b.begin(), b.end());
      total += static_cast<int>(b.size());
      mx = std::max(mx, b.back());
      if (b.front() < 0) throw InvalidInput("negative element");
    }
    n_ = mx;
    if (total != n_ + 1) throw InvalidInput("blocks do not cover {0..n} exactly once");
    block_of_.assign(static_cast<std::size_t>(n_) + 1, -1);
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      for (int j : blocks_[i]) {
        if (block_of_[static_cast<std::size_t>(j)] != -1) throw InvalidInput("blocks overlap");
        block_of_[static_cast<std::size_t>(j)] = static_cast<int>(i);
      }
  }

  int n() const { return n_; }
  int k() const { return static_cast<int>(blocks_.size()); }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(int i) const { return blocks_.at(static_cast<std::size_t>(i)); }
  int block_of(int j) const { return block_of_.at(static_cast<std::size_t>(j)); }
  bool together(int a, int b) const { return block_of(a) == block_of(b); }

  bool non_consecutive() const {
    for (int j = 1; j <= n_; ++j)
      if (together(j - 1, j)) return false;
    return true;
  }

  // Family membership of the underlying set partition (order ignored).
  bool in_family(Family f) const {
    const bool circ = together(0, n_);
    switch (f) {
      case Family::All: return true;
      case Family::Circ: return circ;
      case Family::CircNC: return circ && non_consecutive();
      case Family::Baro: return !circ;
      case Family::BaroNC: return !circ && non_consecutive();
    }
    return false;
  }

  // Ordering convention of the ordered families: 0 in F_1, and for the
  // barred families additionally n in F_k.
  bool follows_convention(Family f) const {
    if (!in_family(f)) return false;
    if (f == Family::All) return true;
    if (block_of(0) != 0) return false;
    if (f == Family::Baro || f == Family::BaroNC) return block_of(n_) == k() - 1;
    return true;
  }

  bool is_canonical() const {
    for (std::size_t i = 1; i < blocks_.size(); ++i)
      if (blocks_[i].front() < blocks_[i - 1].front()) return false;
    return true;
  }

  OrderedPartition canonical() const {
    auto b = blocks_;
    std::sort(b.begin(), b.end(), [](const Block& x, const Block& y) { return x.front() < y.front(); });
    return OrderedPartition(std::move(b));
  }

  // Restricted-growth string of the canonical form.
  std::vector<int> rgs() const {
    const auto c = canonical();
    std::vector<int> s(static_cast<std::size_t>(n_) + 1);
    for (int j = 0; j <= n_; ++j) s[static_cast<std::size_t>(j)] = c.block_of(j);
    return s;
  }

  std::string str(char open = '<', char close = '>') const {
    std::ostringstream os;
    os << open;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      if (i) os << ',';
      os << '{';
      for (std::size_t j = 0; j < blocks_[i].size(); ++j) os << (j ? "," : "") << blocks_[i][j];
      os << '}';
    }
    os << close;
    return os.str();
  }

  friend bool operator==(const OrderedPartition& a, const OrderedPartition& b) {
    return a.blocks_ == b.blocks_;
  }
  friend bool operator<(const OrderedPartition& a, const OrderedPartition& b) {
    return a.blocks_ < b.blocks_;
  }

 private:
  int n_ = -1;
  std::vector<Block> blocks_;
  std::vector<int> block_of_;
};

// Unordered set partition, always held in canonical order.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<Block> blocks, Family family = Family::All)
      : rep_(OrderedPartition(std::move(blocks)).canonical()), family_(family) {
    if (!rep_.in_family(family)) throw InvalidInput("partition violates its family tag");
  }
  Partition(const OrderedPartition& p, Family family) : Partition(p.blocks(), family) {}

  int n() const { return rep_.n(); }
  int k() const { return rep_.k(); }
  Family family() const { return family_; }
  const std::vector<Block>& blocks() const { return rep_.blocks(); }
  int block_of(int j) const { return rep_.block_of(j); }
  const OrderedPartition& as_ordered() const { return rep_; }
  bool in_family(Family f) const { return rep_.in_family(f); }
  std::string str() const { return rep_.str('[', ']'); }

  friend bool operator==(const Partition& a, const Partition& b) { return a.rep_ == b.rep_; }

 private:
  OrderedPartition rep_;
  Family family_ = Family::All;
};

// F finer than G: every block of F lies inside a block of G.
inline bool refines(const OrderedPartition& f, const OrderedPartition& g) {
  if (f.n() != g.n()) return false;
  for (const auto& b : f.blocks())
    for (int j : b)
      if (g.block_of(j) != g.block_of(b.front())) return false;
  return true;
}

namespace detail {

inline void check_cap(std::size_t count, std::size_t cap) {
  if (count > cap) throw CapacityError("enumeration exceeds cap of " + std::to_string(cap) + " items");
}

// Restricted-growth strings a_0..a_n with exactly k distinct values,
// pruned by family constraints. Calls visit(a) in lexicographic order.
inline void visit_rgs(int n, int k, Family fam, const std::function<void(const std::vector<int>&)>& visit) {
  if (n < 0 || k < 1 || k > n + 1) return;
  const bool nc = is_nc_family(fam);
  const bool circ = fam == Family::Circ || fam == Family::CircNC;
  const bool baro = fam == Family::Baro || fam == Family::BaroNC;
  std::vector<int> a(static_cast<std::size_t>(n) + 1, 0);
  std::function<void(int, int)> rec = [&](int pos, int used) {
    if (pos > n) {
      if (used == k) visit(a);
      return;
    }
    const int hi = std::min(used, k - 1);
    for (int v = 0; v <= hi; ++v) {
      const int nused = std::max(used, v + 1);
      if (nused + (n - pos) < k) continue;
      if (nc && a[static_cast<std::size_t>(pos - 1)] == v) continue;
      if (pos == n && circ && v != 0) continue;
      if (pos == n && baro && v == 0) continue;
      a[static_cast<std::size_t>(pos)] = v;
      rec(pos + 1, nused);
    }
  };
  if (n == 0) {
    if (k == 1 && !baro) visit(a);
    return;
  }
  rec(1, 1);
}

inline OrderedPartition from_rgs(const std::vector<int>& a, int k) {
  std::vector<Block> b(static_cast<std::size_t>(k));
  for (std::size_t j = 0; j < a.size(); ++j) b[static_cast<std::size_t>(a[j])].push_back(static_cast<int>(j));
  return OrderedPartition(std::move(b));
}

// All block orders of a canonical partition with the given positions pinned:
// `first` (or -1) is placed first and `last` (or -1) last. Lexicographic order.
inline void visit_orders(const OrderedPartition& p, int first, int last,
                         const std::function<void(const OrderedPartition&)>& visit) {
  std::vector<int> free;
  for (int i = 0; i < p.k(); ++i)
    if (i != first && i != last) free.push_back(i);
  do {
    std::vector<Block> b;
    if (first >= 0) b.push_back(p.block(first));
    for (int i : free) b.push_back(p.block(i));
    if (last >= 0) b.push_back(p.block(last));
    visit(OrderedPartition(std::move(b)));
  } while (std::next_permutation(free.begin(), free.end()));
}

}  // namespace detail

// Visits canonical partitions of {0..n} into k blocks of the given family.
inline void for_each_partition(int n, int k, Family fam, const std::function<void(const OrderedPartition&)>& visit) {
  detail::visit_rgs(n, k, fam, [&](const std::vector<int>& a) { visit(detail::from_rgs(a, k)); });
}

// Visits ordered partitions following the family's ordering convention.
inline void for_each_ordered_partition(int n, int k, Family fam,
                                       const std::function<void(const OrderedPartition&)>& visit) {
  for_each_partition(n, k, fam, [&](const OrderedPartition& p) {
    switch (fam) {
      case Family::All: detail::visit_orders(p, -1, -1, visit); break;
      case Family::Circ:
      case Family::CircNC: detail::visit_orders(p, 0, -1, visit); break;
      case Family::Baro:
      case Family::BaroNC: detail::visit_orders(p, 0, p.block_of(p.n()), visit); break;
    }
  });
}

inline std::vector<Partition> enumerate(int n, int k, Family fam, std::size_t cap = kDefaultEnumerationCap) {
  if (k < 0 || k > n + 1) throw InvalidInput("need 0 <= k <= n+1");
  std::vector<Partition> out;
  for_each_partition(n, k, fam, [&](const OrderedPartition& p) {
    detail::check_cap(out.size() + 1, cap);
    out.emplace_back(p, fam);
  });
  // lexicographic by canonical block lists
  std::sort(out.begin(), out.end(), [](const Partition& a, const Partition& b) { return a.as_ordered() < b.as_ordered(); });
  return out;
}

inline std::vector<OrderedPartition> enumerate_ordered(int n, int k, Family fam,
                                                       std::size_t cap = kDefaultEnumerationCap) {
  if (k < 0 || k > n + 1) throw InvalidInput("need 0 <= k <= n+1");
  std::vector<OrderedPartition> out;
  for_each_ordered_partition(n, k, fam, [&](const OrderedPartition& p) {
    detail::check_cap(out.size() + 1, cap);
    out.push_back(p);
  });
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Marked partitions

class MarkedPartition {
 public:
  MarkedPartition() = default;
  MarkedPartition(int mark, OrderedPartition blocks, bool ordered = false)
      : mark_(mark), blocks_(ordered ? std::move(blocks) : blocks.canonical()), ordered_(ordered) {
    if (mark_ < 0 || mark_ > blocks_.n()) throw InvalidInput("mark outside {0..n}");
  }
  MarkedPartition(int mark, std::vector<Block> blocks, bool ordered = false)
      : MarkedPartition(mark, OrderedPartition(std::move(blocks)), ordered) {}

  int mark() const { return mark_; }
  int n() const { return blocks_.n(); }
  int k() const { return blocks_.k(); }
  bool ordered() const { return ordered_; }
  const OrderedPartition& partition() const { return blocks_; }
  const Block& block(int i) const { return blocks_.block(i); }
  int mark_block() const { return blocks_.block_of(mark_); }

  // mu_i = |F_i ∩ [0,l]| - 1 and nu_i = |F_i ∩ [l,n]| - 1.
  int mu(int i) const {
    const auto& b = block(i);
    return static_cast<int>(std::upper_bound(b.begin(), b.end(), mark_) - b.begin()) - 1;
  }
  int nu(int i) const {
    const auto& b = block(i);
    return static_cast<int>(b.end() - std::lower_bound(b.begin(), b.end(), mark_)) - 1;
  }

  // Membership in Omega(n,k): 0 and n together, and every block without the
  // mark is a singleton or straddles it.
  bool in_omega() const {
    if (!blocks_.together(0, n())) return false;
    for (int i = 0; i < k(); ++i) {
      if (i == mark_block()) continue;
      const auto& b = block(i);
      if (b.size() == 1) continue;
      if (!(b.front() < mark_ && b.back() > mark_)) return false;
    }
    return true;
  }

  bool is_reduced() const {
    if (!in_omega()) return false;
    for (int i = 0; i < k(); ++i)
      if (i != mark_block() && block(i).size() == 1) return false;
    return true;
  }

  bool is_diagonal() const { return blocks_.together(0, mark_) && blocks_.together(0, n()); }

  std::string str() const {
    return "(" + std::to_string(mark_) + ", " + (ordered_ ? blocks_.str() : blocks_.str('[', ']')) + ")";
  }

  friend bool operator==(const MarkedPartition& a, const MarkedPartition& b) {
    return a.mark_ == b.mark_ && a.blocks_ == b.blocks_ && a.ordered_ == b.ordered_;
  }

 private:
  int mark_ = 0;
  OrderedPartition blocks_;
  bool ordered_ = false;
};

inline bool in_class(const MarkedPartition& m, MarkedClass c) {
  switch (c) {
    case MarkedClass::All: return m.in_omega();
    case MarkedClass::Reduced: return m.is_reduced();
    case MarkedClass::ReducedDiag: return m.is_reduced() && m.is_diagonal();
    case MarkedClass::ReducedOff: return m.is_reduced() && !m.is_diagonal();
  }
  return false;
}

inline std::vector<MarkedPartition> enumerate_marked(int n, int k, MarkedClass cls, bool ordered,
                                                     std::size_t cap = kDefaultEnumerationCap) {
  if (k < 1 || k > n + 1) throw InvalidInput("need 1 <= k <= n+1");
  if (cls == MarkedClass::ReducedOff && k < 2) throw InvalidInput("off-diagonal class needs k >= 2");
  std::vector<MarkedPartition> out;
  auto push = [&](MarkedPartition m) {
    detail::check_cap(out.size() + 1, cap);
    out.push_back(std::move(m));
  };
  for_each_partition(n, k, Family::Circ, [&](const OrderedPartition& p) {
    for (int l = 0; l <= n; ++l) {
      MarkedPartition m(l, p, false);
      if (!in_class(m, cls)) continue;
      if (!ordered) {
        push(std::move(m));
        continue;
      }
      const int lb = p.block_of(l);
      if (cls == MarkedClass::ReducedOff) {
        detail::visit_orders(p, 0, lb, [&](const OrderedPartition& q) { push(MarkedPartition(l, q, true)); });
      } else {
        detail::visit_orders(p, 0, -1, [&](const OrderedPartition& q) { push(MarkedPartition(l, q, true)); });
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Removal of singleton blocks

struct ReducedMarked {
  MarkedPartition reduced;
  std::vector<int> m;  // m_i = number of singletons between survivors i and i+1
};

inline ReducedMarked reduce_marked(const MarkedPartition& mp) {
  if (!mp.in_omega()) throw InvalidInput("marked partition is not in Omega(n,k)");
  const auto& p = mp.partition();
  const int lb = mp.mark_block();
  auto singleton = [&](int j) { return p.block_of(j) != lb && p.block(p.block_of(j)).size() == 1; };
  std::vector<int> keep, relabel(static_cast<std::size_t>(p.n()) + 1, -1);
  for (int j = 0; j <= p.n(); ++j)
    if (!singleton(j)) {
      relabel[static_cast<std::size_t>(j)] = static_cast<int>(keep.size());
      keep.push_back(j);
    }
  std::vector<int> gaps;
  for (std::size_t i = 0; i + 1 < keep.size(); ++i) gaps.push_back(keep[i + 1] - keep[i] - 1);
  std::vector<Block> blocks;
  for (const auto& b : p.blocks()) {
    if (p.block_of(b.front()) != lb && b.size() == 1) continue;
    Block nb;
    for (int j : b) nb.push_back(relabel[static_cast<std::size_t>(j)]);
    blocks.push_back(std::move(nb));
  }
  return {MarkedPartition(relabel[static_cast<std::size_t>(mp.mark())], OrderedPartition(std::move(blocks)),
                          mp.ordered()),
          std::move(gaps)};
}

// Inverse of reduce_marked; reinserted singletons make the result canonical.
inline MarkedPartition expand_marked(const MarkedPartition& reduced, const std::vector<int>& m) {
  if (static_cast<int>(m.size()) != reduced.n()) throw InvalidInput("m-vector length must equal n of the reduced partition");
  std::vector<int> pos(static_cast<std::size_t>(reduced.n()) + 1);
  int cur = 0;
  std::vector<Block> blocks;
  for (int j = 0; j <= reduced.n(); ++j) {
    pos[static_cast<std::size_t>(j)] = cur;
    if (j < reduced.n()) {
      if (m[static_cast<std::size_t>(j)] < 0) throw InvalidInput("negative multiplicity");
      for (int s = 1; s <= m[static_cast<std::size_t>(j)]; ++s) blocks.push_back({cur + s});
      cur += m[static_cast<std::size_t>(j)] + 1;
    }
  }
  for (const auto& b : reduced.partition().blocks()) {
    Block nb;
    for (int j : b) nb.push_back(pos[static_cast<std::size_t>(j)]);
    blocks.push_back(std::move(nb));
  }
  return MarkedPartition(pos[static_cast<std::size_t>(reduced.mark())], OrderedPartition(std::move(blocks)), false);
}

// ---------------------------------------------------------------------------
// Splitting at the mark: F+_i = F_i ∩ [0,l], F-_i = n - (F_i ∩ [l,n]).

struct SplitPair {
  OrderedPartition plus, minus;
};

inline SplitPair split_plus_minus(const MarkedPartition& mp) {
  if (!mp.is_reduced()) throw InvalidInput("split_plus_minus needs a reduced marked partition");
  const int l = mp.mark(), n = mp.n();
  std::vector<Block> plus, minus;
  for (const auto& b : mp.partition().blocks()) {
    Block bp, bm;
    for (int j : b) {
      if (j <= l) bp.push_back(j);
      if (j >= l) bm.push_back(n - j);
    }
    plus.push_back(std::move(bp));
    minus.push_back(std::move(bm));
  }
  return {OrderedPartition(std::move(plus)), OrderedPartition(std::move(minus))};
}

inline MarkedPartition merge_plus_minus(const OrderedPartition& plus, const OrderedPartition& minus, bool ordered = true) {
  if (plus.k() != minus.k()) throw InvalidInput("halves must have equal block counts");
  const int l = plus.n(), n = l + minus.n();
  if (plus.block_of(l) != minus.block_of(minus.n())) throw InvalidInput("halves disagree on the block of the mark");
  std::vector<Block> blocks(static_cast<std::size_t>(plus.k()));
  for (int i = 0; i < plus.k(); ++i) {
    auto& b = blocks[static_cast<std::size_t>(i)];
    b = plus.block(i);
    for (int j : minus.block(i))
      if (n - j != l) b.push_back(n - j);
  }
  return MarkedPartition(l, OrderedPartition(std::move(blocks)), ordered);
}

// ---------------------------------------------------------------------------
// Collapse of runs of consecutive integers sharing a block.

struct NcReduced {
  OrderedPartition reduced;
  std::vector<int> m;  // m_s = extra run length after run start j_s, s = 0..n'
};

inline NcReduced nc_reduce(const OrderedPartition& f) {
  if (f.block_of(0) != 0) throw InvalidInput("ordered partition must have 0 in its first block");
  std::vector<int> starts{0};
  for (int j = 1; j <= f.n(); ++j)
    if (!f.together(j - 1, j)) starts.push_back(j);
  std::vector<Block> blocks(static_cast<std::size_t>(f.k()));
  std::vector<int> m;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const int end = s + 1 < starts.size() ? starts[s + 1] : f.n() + 1;
    m.push_back(end - starts[s] - 1);
    blocks[static_cast<std::size_t>(f.block_of(starts[s]))].push_back(static_cast<int>(s));
  }
  return {OrderedPartition(std::move(blocks)), std::move(m)};
}

inline OrderedPartition nc_expand(const OrderedPartition& f, const std::vector<int>& m) {
  if (static_cast<int>(m.size()) != f.n() + 1) throw InvalidInput("m-vector length must be n'+1");
  if (!f.non_consecutive()) throw InvalidInput("nc_expand needs a non-consecutive partition");
  std::vector<Block> blocks(static_cast<std::size_t>(f.k()));
  int cur = 0;
  for (int s = 0; s <= f.n(); ++s) {
    if (m[static_cast<std::size_t>(s)] < 0) throw InvalidInput("negative run length");
    auto& b = blocks[static_cast<std::size_t>(f.block_of(s))];
    for (int r = 0; r <= m[static_cast<std::size_t>(s)]; ++r) b.push_back(cur++);
  }
  return OrderedPartition(std::move(blocks));
}

// ---------------------------------------------------------------------------
// Embedding: position j receives values[i] iff j ∈ F_i.

template <class T>
std::vector<T> iota_embed(const OrderedPartition& f, std::span<const T> values) {
  if (static_cast<int>(values.size()) != f.k()) throw InvalidInput("iota_embed: arity mismatch");
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(f.n()) + 1);
  for (int j = 0; j <= f.n(); ++j) out.push_back(values[static_cast<std::size_t>(f.block_of(j))]);
  return out;
}

template <class T>
std::vector<T> iota_embed(const OrderedPartition& f, const std::vector<T>& values) {
  return iota_embed(f, std::span<const T>(values.data(), values.size()));
}

template <class T>
std::vector<T> iota_embed(const Partition& f, const std::vector<T>& values) {
  return iota_embed(f.as_ordered(), values);
}

// ---------------------------------------------------------------------------
// Plot-ready description of a (marked) partition diagram.

struct Diagram {
  struct Arc {
    std::vector<int> elements;
    int depth;  // 1-based block position
  };
  int n = 0;
  int mark = -1;          // -1 if unmarked
  std::vector<Arc> arcs;  // blocks with >= 2 elements
  std::vector<int> ticks; // singleton elements
};

inline Diagram diagram(const OrderedPartition& p, int mark = -1) {
  Diagram d;
  d.n = p.n();
  d.mark = mark;
  for (int i = 0; i < p.k(); ++i) {
    if (p.block(i).size() == 1) d.ticks.push_back(p.block(i).front());
    else d.arcs.push_back({p.block(i), i + 1});
  }
  return d;
}

inline Diagram diagram(const MarkedPartition& m) { return diagram(m.partition(), m.mark()); }

}  // namespace bgq
