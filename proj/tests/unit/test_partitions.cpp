#include <gtest/gtest.h>

#include <set>

#include "bgq/numeric.hpp"
#include "bgq/partitions.hpp"

using namespace bgq;

namespace {

// Bell triangle
std::vector<long long> bell_numbers(int count) {
  std::vector<long long> bell{1};
  std::vector<long long> row{1};
  for (int i = 1; i < count; ++i) {
    std::vector<long long> next{row.back()};
    for (long long v : row) next.push_back(next.back() + v);
    row = next;
    bell.push_back(row.front());
  }
  return bell;
}

long long stirling2(int n, int k) {
  std::vector<std::vector<long long>> s(static_cast<std::size_t>(n) + 1, std::vector<long long>(static_cast<std::size_t>(n) + 1, 0));
  s[0][0] = 1;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= i; ++j) s[i][j] = j * s[i - 1][j] + s[i - 1][j - 1];
  return k <= n ? s[n][k] : 0;
}

}  // namespace

TEST(Partitions, SmallCountIsThree) { EXPECT_EQ(enumerate(2, 2, Family::All).size(), 3u); }

TEST(Partitions, BellNumbersAcrossBlockCounts) {
  const auto bell = bell_numbers(10);
  for (int n = 0; n <= 8; ++n) {
    std::size_t total = 0;
    for (int k = 1; k <= n + 1; ++k) {
      const auto v = enumerate(n, k, Family::All);
      EXPECT_EQ(static_cast<long long>(v.size()), stirling2(n + 1, k)) << "n=" << n << " k=" << k;
      total += v.size();
    }
    EXPECT_EQ(static_cast<long long>(total), bell[static_cast<std::size_t>(n) + 1]) << "n=" << n;
  }
}

TEST(Partitions, FamiliesSplitTheWhole) {
  for (int n = 1; n <= 7; ++n)
    for (int k = 1; k <= n + 1; ++k) {
      const auto all = enumerate(n, k, Family::All).size();
      EXPECT_EQ(enumerate(n, k, Family::Circ).size() + enumerate(n, k, Family::Baro).size(), all);
      for (const auto& p : enumerate(n, k, Family::CircNC)) {
        EXPECT_TRUE(p.as_ordered().non_consecutive());
        EXPECT_TRUE(p.as_ordered().together(0, n));
      }
    }
}

TEST(Partitions, EvenCircNcWithTwoBlocksIsUnique) {
  const auto v = enumerate(4, 2, Family::CircNC);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].blocks(), (std::vector<Block>{{0, 2, 4}, {1, 3}}));
}

TEST(Partitions, OddBaroNcWithTwoBlocksIsUnique) {
  const auto v = enumerate_ordered(3, 2, Family::BaroNC);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].blocks(), (std::vector<Block>{{0, 2}, {1, 3}}));
}

TEST(Partitions, DeterministicDuplicateFreeOrder) {
  const auto a = enumerate(6, 3, Family::All);
  const auto b = enumerate(6, 3, Family::All);
  ASSERT_EQ(a.size(), b.size());
  std::set<std::vector<Block>> seen;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_TRUE(seen.insert(a[i].blocks()).second);
    if (i) EXPECT_LT(a[i - 1].as_ordered(), a[i].as_ordered());
  }
}

TEST(Partitions, CapacityAndPreconditions) {
  EXPECT_THROW(enumerate(9, 4, Family::All, 100), CapacityError);
  EXPECT_THROW(enumerate(3, 5, Family::All), InvalidInput);
  EXPECT_THROW(OrderedPartition({{0, 1}, {1, 2}}), InvalidInput);
  EXPECT_THROW(OrderedPartition({{0}, {2}}), InvalidInput);
  EXPECT_THROW(Partition({{0, 2}, {1}}, Family::Baro), InvalidInput);
}

TEST(MarkedPartitions, SingleBlockReducedDiagonal) {
  // every mark in {0..n} qualifies for the single block, including the interior one
  const auto v = enumerate_marked(2, 1, MarkedClass::ReducedDiag, false);
  ASSERT_EQ(v.size(), 3u);
  for (int l = 0; l <= 2; ++l) {
    EXPECT_EQ(v[static_cast<std::size_t>(l)].mark(), l);
    EXPECT_EQ(v[static_cast<std::size_t>(l)].partition().blocks(), (std::vector<Block>{{0, 1, 2}}));
  }
}

TEST(MarkedPartitions, OffDiagonalNeedsRoom) {
  EXPECT_TRUE(enumerate_marked(1, 2, MarkedClass::ReducedOff, false).empty());
  EXPECT_THROW(enumerate_marked(3, 1, MarkedClass::ReducedOff, false), InvalidInput);
}

TEST(MarkedPartitions, OrderedCountRatios) {
  for (int n = 2; n <= 8; ++n)
    for (int k = 1; k <= 4 && k <= n + 1; ++k) {
      const double fd = factorial(k - 1);
      EXPECT_EQ(static_cast<double>(enumerate_marked(n, k, MarkedClass::ReducedDiag, true).size()),
                fd * static_cast<double>(enumerate_marked(n, k, MarkedClass::ReducedDiag, false).size()));
      if (k >= 2) {
        const double fo = factorial(k - 2);
        EXPECT_EQ(static_cast<double>(enumerate_marked(n, k, MarkedClass::ReducedOff, true).size()),
                  fo * static_cast<double>(enumerate_marked(n, k, MarkedClass::ReducedOff, false).size()));
      }
    }
}

TEST(MarkedPartitions, ReductionWorkedExample) {
  const MarkedPartition m(6, std::vector<Block>{{0, 5, 11}, {1}, {2, 7}, {3, 8, 10}, {4}, {6}, {9}});
  ASSERT_TRUE(m.in_omega());
  const auto r = reduce_marked(m);
  EXPECT_EQ(r.reduced, MarkedPartition(4, std::vector<Block>{{0, 3, 8}, {1, 5}, {2, 6, 7}, {4}}));
  EXPECT_EQ(expand_marked(r.reduced, r.m), m);
}

TEST(MarkedPartitions, ReducedInputIsFixed) {
  for (const auto& m : enumerate_marked(6, 3, MarkedClass::Reduced, false)) {
    const auto r = reduce_marked(m);
    EXPECT_EQ(r.reduced, m);
    for (int x : r.m) EXPECT_EQ(x, 0);
  }
}

TEST(MarkedPartitions, ReductionRoundTrips) {
  for (int n = 0; n <= 6; ++n)
    for (int k = 1; k <= n + 1; ++k)
      for (const auto& m : enumerate_marked(n, k, MarkedClass::All, false)) {
        const auto r = reduce_marked(m);
        EXPECT_TRUE(r.reduced.is_reduced());
        EXPECT_EQ(expand_marked(r.reduced, r.m), m);
      }
  EXPECT_THROW(reduce_marked(MarkedPartition(1, std::vector<Block>{{0, 1}, {2}})), InvalidInput);
}

TEST(MarkedPartitions, SplitSingleBlock) {
  const MarkedPartition m(1, OrderedPartition({{0, 1, 2}}), true);
  const auto s = split_plus_minus(m);
  EXPECT_EQ(s.plus, OrderedPartition({{0, 1}}));
  EXPECT_EQ(s.minus, OrderedPartition({{0, 1}}));
  EXPECT_EQ(merge_plus_minus(s.plus, s.minus), m);
}

TEST(MarkedPartitions, SplitFamiliesAndRoundTrip) {
  for (int n = 1; n <= 7; ++n)
    for (int k = 1; k <= 4 && k <= n + 1; ++k) {
      for (const auto& m : enumerate_marked(n, k, MarkedClass::ReducedDiag, true)) {
        const auto s = split_plus_minus(m);
        EXPECT_TRUE(s.plus.in_family(Family::Circ));
        EXPECT_TRUE(s.minus.in_family(Family::Circ));
        EXPECT_EQ(merge_plus_minus(s.plus, s.minus), m);
      }
      if (k >= 2)
        for (const auto& m : enumerate_marked(n, k, MarkedClass::ReducedOff, true)) {
          const auto s = split_plus_minus(m);
          EXPECT_TRUE(s.plus.in_family(Family::Baro));
          EXPECT_TRUE(s.minus.in_family(Family::Baro));
          EXPECT_EQ(merge_plus_minus(s.plus, s.minus), m);
        }
    }
}

TEST(MarkedPartitions, SplitRejectsUnreduced) {
  EXPECT_THROW(split_plus_minus(MarkedPartition(1, OrderedPartition({{0, 2}, {1}, {3}}), true)), InvalidInput);
}

TEST(NcReduce, CollapsesRuns) {
  const auto r = nc_reduce(OrderedPartition({{0, 1, 2}}));
  EXPECT_EQ(r.reduced, OrderedPartition(std::vector<Block>{{0}}));
  EXPECT_EQ(r.m, std::vector<int>{2});
}

TEST(NcReduce, NonConsecutiveInputIsFixed) {
  for (const auto& f : enumerate_ordered(6, 3, Family::CircNC)) {
    const auto r = nc_reduce(f);
    EXPECT_EQ(r.reduced, f);
    EXPECT_EQ(r.m, std::vector<int>(7, 0));
  }
}

TEST(NcReduce, RoundTrips) {
  for (int n = 0; n <= 7; ++n)
    for (int k = 1; k <= 4 && k <= n + 1; ++k)
      for (Family fam : {Family::Circ, Family::Baro})
        for (const auto& f : enumerate_ordered(n, k, fam)) {
          const auto r = nc_reduce(f);
          EXPECT_TRUE(r.reduced.non_consecutive());
          int total = r.reduced.n();
          for (int x : r.m) total += x;
          EXPECT_EQ(total, n);
          EXPECT_EQ(nc_expand(r.reduced, r.m), f);
        }
}

TEST(IotaEmbed, Examples) {
  EXPECT_EQ(iota_embed(OrderedPartition({{0, 2}, {1}}), std::vector<char>{'a', 'b'}), (std::vector<char>{'a', 'b', 'a'}));
  EXPECT_EQ(iota_embed(OrderedPartition({{0}, {1}, {2}}), std::vector<int>{7, 8, 9}), (std::vector<int>{7, 8, 9}));
  EXPECT_THROW(iota_embed(OrderedPartition({{0, 2}, {1}}), std::vector<int>{1}), InvalidInput);
  // unordered input uses the canonical order
  EXPECT_EQ(iota_embed(Partition({{1}, {0, 2}}), std::vector<int>{4, 5}), (std::vector<int>{4, 5, 4}));
}

TEST(IotaEmbed, SplitHalvesAgreeBeforeTheMark) {
  for (int n = 1; n <= 6; ++n)
    for (int k = 1; k <= 3 && k <= n + 1; ++k)
      for (const auto& m : enumerate_marked(n, k, MarkedClass::ReducedDiag, true)) {
        std::vector<int> vals(static_cast<std::size_t>(k));
        std::iota(vals.begin(), vals.end(), 10);
        const auto whole = iota_embed(m.partition(), vals);
        const auto plus = iota_embed(split_plus_minus(m).plus, vals);
        for (int j = 0; j <= m.mark(); ++j) EXPECT_EQ(plus[static_cast<std::size_t>(j)], whole[static_cast<std::size_t>(j)]);
      }
}

TEST(Diagram, ArcsAndTicks) {
  const auto d = diagram(MarkedPartition(2, OrderedPartition({{0, 2, 4}, {1, 3}, {5}}), true));
  EXPECT_EQ(d.n, 5);
  EXPECT_EQ(d.mark, 2);
  ASSERT_EQ(d.arcs.size(), 2u);
  EXPECT_EQ(d.arcs[1].elements, (std::vector<int>{1, 3}));
  EXPECT_EQ(d.arcs[1].depth, 2);
  EXPECT_EQ(d.ticks, std::vector<int>{5});
}
