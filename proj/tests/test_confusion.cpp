#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "seqcal/alignment.hpp"
#include "seqcal/confusion.hpp"

using namespace seqcal;

namespace {

AlignedPair aligned_of(std::vector<ClassId> ref, std::vector<ClassId> pred,
                       std::vector<EditOp> ops) {
  return AlignedPair{std::move(ref), std::move(pred), std::move(ops)};
}

}  // namespace

TEST_SUITE("confusion") {

TEST_CASE("accumulate attributes counts to the previous reference token") {
  Alphabet a(4);  // classes 0..3, blank 4, sos 5
  ContextConfusionStats stats(a);
  // ref = [0, 1], pred = [0, 1]
  stats.accumulate(aligned_of({0, 1}, {0, 1}, {EditOp::Match, EditOp::Match}));

  REQUIRE(stats.context(a.sos_id()) != nullptr);
  CHECK(stats.context(a.sos_id())->counts(0, 0) == 1);
  REQUIRE(stats.context(0) != nullptr);
  CHECK(stats.context(0)->counts(1, 1) == 1);
  CHECK(stats.global().counts(0, 0) == 1);
  CHECK(stats.global().counts(1, 1) == 1);
  CHECK(stats.global().total() == 2);
}

TEST_CASE("accumulate places insertions on the blank-reference row and skips blanks as context") {
  Alphabet a(26);
  const ClassId c = 2, at = 0, t = 19;
  ContextConfusionStats stats(a);
  // ref = [c, a, _, t], pred = [c, a, a, t]
  stats.accumulate(aligned_of({c, at, a.blank_id(), t}, {c, at, at, t},
                              {EditOp::Match, EditOp::Match, EditOp::Insert, EditOp::Match}));

  CHECK(stats.context(a.sos_id())->counts(c, c) == 1);
  CHECK(stats.context(c)->counts(at, at) == 1);
  CHECK(stats.context(at)->counts(a.blank_id(), at) == 1);
  CHECK(stats.context(at)->counts(t, t) == 1);  // context skips the blank
  CHECK(stats.global().total() == 4);
}

TEST_CASE("accumulating the same pair twice doubles every count") {
  Alphabet a(4);
  const auto pair = aligned_of({0, 1}, {0, 2}, {EditOp::Match, EditOp::Substitute});
  ContextConfusionStats once(a), twice(a);
  once.accumulate(pair);
  twice.accumulate(pair);
  twice.accumulate(pair);
  for (const auto& [key, count] : testutil::stats_triples(once)) {
    const auto& [context, ref, pred] = key;
    const ConfusionMatrix* matrix = twice.context(context);
    REQUIRE(matrix != nullptr);
    CHECK(matrix->counts(ref, pred) == 2 * count);
  }
  CHECK(twice.global().total() == 2 * once.global().total());
}

TEST_CASE("accumulate agrees with the counting oracle on random alignments") {
  std::mt19937 rng(555);
  Alphabet alphabet(6);
  for (int iter = 0; iter < 200; ++iter) {
    const auto ref = testutil::random_sequence(rng, 10, 6, 1);
    const auto pred = testutil::random_sequence(rng, 10, 6);
    const AlignedPair aligned = align(ref, pred, alphabet);

    ContextConfusionStats stats(alphabet);
    stats.accumulate(aligned);
    CHECK(testutil::stats_triples(stats) == testutil::count_oracle(aligned, alphabet));
    CHECK(stats.global().total() == aligned.size());
  }
}

TEST_CASE("per-context matrices marginalize to the global matrix") {
  std::mt19937 rng(556);
  Alphabet alphabet(5);
  ContextConfusionStats stats(alphabet);
  for (int iter = 0; iter < 100; ++iter) {
    const auto ref = testutil::random_sequence(rng, 8, 5, 1);
    const auto pred = testutil::random_sequence(rng, 8, 5);
    stats.accumulate(align(ref, pred, alphabet));
  }
  ConfusionMatrix sum(alphabet.k_total());
  for (const auto& [context, matrix] : stats.per_context()) sum.merge_from(matrix);
  CHECK(sum == stats.global());
}

TEST_CASE("merge is commutative with the empty stats as identity") {
  Alphabet a(4);
  ContextConfusionStats s(a), empty(a);
  s.accumulate(aligned_of({0, 1}, {0, 2}, {EditOp::Match, EditOp::Substitute}));
  s.accumulate(aligned_of({2}, {2}, {EditOp::Match}));

  const auto with_empty = merge(s, empty);
  CHECK(testutil::stats_triples(with_empty) == testutil::stats_triples(s));

  ContextConfusionStats other(a);
  other.accumulate(aligned_of({3, 0}, {3, 0}, {EditOp::Match, EditOp::Match}));
  CHECK(testutil::stats_triples(merge(s, other)) == testutil::stats_triples(merge(other, s)));
}

TEST_CASE("merge rejects stats over different alphabets") {
  ContextConfusionStats a{Alphabet(4)}, b{Alphabet(5)};
  try {
    merge(a, b);
    FAIL("expected AlphabetMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AlphabetMismatch);
  }
}

TEST_CASE("three-way sharded accumulation merges to the single-pass result") {
  std::mt19937 rng(557);
  Alphabet alphabet(6);
  std::vector<AlignedPair> pairs;
  for (int i = 0; i < 90; ++i) {
    const auto ref = testutil::random_sequence(rng, 9, 6, 1);
    const auto pred = testutil::random_sequence(rng, 9, 6);
    pairs.push_back(align(ref, pred, alphabet));
  }

  ContextConfusionStats single(alphabet);
  for (const auto& pair : pairs) single.accumulate(pair);

  ContextConfusionStats shard0(alphabet), shard1(alphabet), shard2(alphabet);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    (i % 3 == 0 ? shard0 : i % 3 == 1 ? shard1 : shard2).accumulate(pairs[i]);
  }
  const auto merged = merge(merge(shard0, shard1), shard2);

  CHECK(testutil::stats_triples(merged) == testutil::stats_triples(single));
  CHECK(stats_to_json(merged) == stats_to_json(single));
}

TEST_CASE("error_prone_sets applies the strict threshold per row") {
  Alphabet a(3);  // classes 0..2, blank 3, sos 4
  ContextConfusionStats stats(a);
  // class 0 row: [8, 1, 1] -> error rate 0.2; class 1 row: [2, 2, 6] -> 0.6
  for (int i = 0; i < 8; ++i) stats.add_count(a.sos_id(), 0, 0);
  stats.add_count(a.sos_id(), 0, 1);
  stats.add_count(a.sos_id(), 0, 2);
  stats.add_count(a.sos_id(), 1, 0);
  stats.add_count(a.sos_id(), 1, 0);
  stats.add_count(a.sos_id(), 1, 1);
  stats.add_count(a.sos_id(), 1, 1);
  for (int i = 0; i < 6; ++i) stats.add_count(a.sos_id(), 1, 2);

  const ErrorProneSets sets = error_prone_sets(stats, 0.5);
  CHECK(sets.global_set == std::set<ClassId>{1});
  CHECK(sets.context_contains(a.sos_id(), 1));
  CHECK_FALSE(sets.context_contains(a.sos_id(), 0));
}

TEST_CASE("a zero-error row is excluded even at threshold zero") {
  Alphabet a(3);
  ContextConfusionStats stats(a);
  for (int i = 0; i < 5; ++i) stats.add_count(0, 2, 2);  // row [.., 5 diagonal], no errors
  const ErrorProneSets sets = error_prone_sets(stats, 0.0);
  CHECK(sets.global_set.empty());
  CHECK(sets.per_context.empty());
}

TEST_CASE("empty stats produce empty sets") {
  ContextConfusionStats stats{Alphabet(4)};
  const ErrorProneSets sets = error_prone_sets(stats, 0.0);
  CHECK(sets.global_set.empty());
  CHECK(sets.per_context.empty());
}

TEST_CASE("error-prone sets shrink monotonically in the threshold") {
  std::mt19937 rng(558);
  Alphabet alphabet(6);
  ContextConfusionStats stats(alphabet);
  for (int i = 0; i < 200; ++i) {
    const auto ref = testutil::random_sequence(rng, 8, 6, 1);
    const auto pred = testutil::random_sequence(rng, 8, 6);
    stats.accumulate(align(ref, pred, alphabet));
  }
  const double thresholds[] = {0.0, 0.1, 0.3, 0.5, 0.7, 0.9};
  for (std::size_t i = 1; i < std::size(thresholds); ++i) {
    const auto lower = error_prone_sets(stats, thresholds[i - 1]);
    const auto higher = error_prone_sets(stats, thresholds[i]);
    for (ClassId c : higher.global_set) CHECK(lower.global_set.count(c) == 1);
    for (const auto& [context, set] : higher.per_context)
      for (ClassId c : set) CHECK(lower.context_contains(context, c));
  }
}

TEST_CASE("stats serialize to sparse JSON and parse back") {
  Alphabet a(4);
  ContextConfusionStats stats(a);
  stats.accumulate(aligned_of({0, 1}, {0, 2}, {EditOp::Match, EditOp::Substitute}));
  stats.accumulate(aligned_of({1}, {1}, {EditOp::Match}));

  const std::string json = stats_to_json(stats);
  const ContextConfusionStats back = stats_from_json(json);
  CHECK(back.alphabet().k_total() == a.k_total());
  CHECK(testutil::stats_triples(back) == testutil::stats_triples(stats));
  CHECK(back.global() == stats.global());
  CHECK(stats_to_json(back) == json);
}

}  // TEST_SUITE
