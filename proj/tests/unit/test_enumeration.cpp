#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "oracle.hpp"
#include "polyads/enumeration.hpp"

using namespace polyads;
using testutil::ei;

namespace {

std::set<oracle::PolyadTuple> to_tuple_set(
    const std::vector<ActivePolyadRecord>& records) {
  std::set<oracle::PolyadTuple> out;
  for (const auto& r : records) out.insert(testutil::to_tuple(r.polyad));
  return out;
}

oracle::Coords coords_of(const EdgeIndex& e) {
  oracle::Coords c;
  for (int d = 0; d < e.dims(); ++d) c.push_back(e[d]);
  return c;
}

}  // namespace

TEST_SUITE("enumeration") {
  TEST_CASE("two diagonal edges give one active polyad") {
    SparseCountGraph g({2, 2}, {{ei({1, 1}), 1}, {ei({2, 2}), 1}});
    EnumerationResult res = enumerate_active_structural(g);
    REQUIRE(res.records.size() == 1);
    const auto& r = res.records[0];
    CHECK(r.polyad == Polyad(ei({1, 1}), ei({2, 2})));
    CHECK(r.m == 1);
    CHECK(r.M == 0);
    CHECK(r.edge_counts == std::vector<int64_t>{1, 0, 0, 1});
    CHECK(res.n_active == 4);  // canonical count times 2^D permutations
  }

  TEST_CASE("single edge stays inert") {
    SparseCountGraph g({3, 3}, {{ei({1, 1}), 7}});
    EnumerationResult res = enumerate_active_structural(g);
    CHECK(res.records.empty());
    CHECK(res.n_active == 0);
  }

  TEST_CASE("canonical records are sorted and unique") {
    testutil::Rng rng(101);
    for (int trial = 0; trial < 30; ++trial) {
      auto inst = testutil::random_instance(rng, 2 + static_cast<int>(rng() % 2),
                                            4, 3, 1);
      EnumerationResult res = enumerate_active_structural(*inst.graph);
      for (size_t i = 0; i + 1 < res.records.size(); ++i) {
        const Polyad& a = res.records[i].polyad;
        const Polyad& b = res.records[i + 1].polyad;
        CHECK(a < b);
      }
      for (const auto& r : res.records) {
        CHECK(r.m >= 1);
        CHECK(r.m + r.M >= 1);
        int D = r.dims();
        for (int d = 1; d < D; ++d)
          CHECK(r.polyad.top()[static_cast<size_t>(d)] <
                r.polyad.bottom()[static_cast<size_t>(d)]);
        if (r.M > 0) CHECK(r.polyad.top()[0] < r.polyad.bottom()[0]);
        // stored per-edge counts match the graph
        for (uint32_t s = 0; s < (1u << D); ++s)
          CHECK(r.edge_counts[s] == inst.graph->count(r.polyad.edge(s)));
      }
    }
  }

  TEST_CASE("matches exhaustive scan") {
    testutil::Rng rng(113);
    for (int trial = 0; trial < 40; ++trial) {
      int D = 2 + static_cast<int>(rng() % 3);
      auto inst = testutil::random_instance(rng, D, D == 4 ? 3 : 4, 4, 1);
      EnumerationResult res = enumerate_active_structural(*inst.graph);
      std::set<oracle::PolyadTuple> brute =
          oracle::brute_active_polyads(inst.counts, inst.sizes);
      CHECK(to_tuple_set(res.records) == brute);
      CHECK(res.n_active == brute.size() << D);
    }
  }

  TEST_CASE("inner loop count stays quadratic in the edge count") {
    testutil::Rng rng(127);
    for (int trial = 0; trial < 10; ++trial) {
      auto inst = testutil::random_instance(rng, 3, 5, 3, 1, 0.35);
      EnumerationResult res = enumerate_active_structural(*inst.graph);
      uint64_t e = static_cast<uint64_t>(inst.graph->num_edges());
      CHECK(res.inner_loop_count <= 4 * e * e + 4);
    }
  }

  TEST_CASE("record cap raises the resource guard") {
    testutil::Rng rng(131);
    auto inst = testutil::random_instance(rng, 2, 6, 3, 1, 0.8);
    EnumerationOptions opt;
    opt.max_records = 2;
    CHECK_THROWS_AS(enumerate_active_structural(*inst.graph, opt),
                    ResourceGuardError);
  }

  TEST_CASE("covariate features match the polyad contrast") {
    testutil::Rng rng(137);
    for (int trial = 0; trial < 10; ++trial) {
      auto inst = testutil::random_instance(rng, 2 + static_cast<int>(rng() % 2),
                                            4, 3, 2);
      EnumerationResult res = enumerate_active(*inst.graph, *inst.cov);
      for (const auto& r : res.records) {
        Eigen::VectorXd x = did_feature(r.polyad, *inst.cov);
        CHECK((r.did - x).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
      }
    }
  }

  TEST_CASE("missing covariates are reported with edges named") {
    SparseCountGraph g({2, 2}, {{ei({1, 1}), 1}, {ei({2, 2}), 1}});
    MapCovariates cov(2, 1);
    cov.put(ei({1, 1}), {1.0});
    cov.put(ei({2, 2}), {1.0});
    // off-support corners absent
    try {
      enumerate_active(g, cov);
      FAIL("expected MissingCovariateError");
    } catch (const MissingCovariateError& e) {
      std::string msg = e.what();
      CHECK(msg.find("(1,2)") != std::string::npos);
      CHECK(msg.find("(2,1)") != std::string::npos);
      CHECK(e.missing().size() == 2);
    }
  }

  TEST_CASE("missing covariate listing truncates at one hundred") {
    // diagonal support: every ordered pair of levels forms an active block,
    // so the distinct corner set covers the whole 12x12 grid
    std::vector<std::pair<EdgeIndex, int64_t>> diag;
    for (int32_t i = 1; i <= 12; ++i) diag.push_back({ei({i, i}), 1});
    SparseCountGraph g({12, 12}, diag);
    MapCovariates empty_cov(2, 1);
    try {
      enumerate_active(g, empty_cov);
      FAIL("expected MissingCovariateError");
    } catch (const MissingCovariateError& e) {
      REQUIRE(e.missing().size() > 100);
      std::string msg = e.what();
      size_t shown = 0;
      for (size_t pos = msg.find(" ("); pos != std::string::npos;
           pos = msg.find(" (", pos + 1))
        ++shown;
      CHECK(shown == 100);
      CHECK(msg.find("...") != std::string::npos);
      CHECK(msg.find(std::to_string(e.missing().size())) != std::string::npos);
    }
  }

  TEST_CASE("worker count leaves the result identical") {
    testutil::Rng rng(149);
    auto inst = testutil::random_instance(rng, 3, 5, 3, 2, 0.4);
    EnumerationOptions one, four;
    one.workers = 1;
    four.workers = 4;
    EnumerationResult a = enumerate_active(*inst.graph, *inst.cov, one);
    EnumerationResult b = enumerate_active(*inst.graph, *inst.cov, four);
    REQUIRE(a.records.size() == b.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].polyad == b.records[i].polyad);
      CHECK(a.records[i].m == b.records[i].m);
      CHECK(a.records[i].M == b.records[i].M);
      CHECK(a.records[i].did == b.records[i].did);
    }
    CHECK(a.n_active == b.n_active);
  }
}

TEST_SUITE("incidence") {
  TEST_CASE("one active polyad in two dimensions") {
    SparseCountGraph g({2, 2}, {{ei({1, 1}), 1}, {ei({2, 2}), 1}});
    EnumerationResult res = enumerate_active_structural(g);
    PolyadIncidence inc = build_incidence(res.records);
    CHECK(inc.num_keys() == 4);
    // every corner of the 2x2 block appears, each with one partner row
    for (const EdgeIndex& key :
         {ei({1, 1}), ei({1, 2}), ei({2, 1}), ei({2, 2})}) {
      auto it = inc.by_edge.find(key);
      REQUIRE(it != inc.by_edge.end());
      CHECK(it->second.size() == 1);
      CHECK(it->second[0].record == 0);
    }
    // partner of (1,1) is the opposite corner's row (2,2)
    CHECK(inc.by_edge.at(ei({1, 1}))[0].partner == ei({2, 2}));
    CHECK(inc.by_edge.at(ei({1, 2}))[0].partner == ei({2, 1}));
  }

  TEST_CASE("disjoint polyads do not share keys") {
    SparseCountGraph g({4, 4}, {{ei({1, 1}), 1},
                                {ei({2, 2}), 1},
                                {ei({3, 3}), 1},
                                {ei({4, 4}), 1}});
    // 2x2 blocks {1,2} and {3,4} are active; {1,3} etc. also pair up
    EnumerationResult res = enumerate_active_structural(g);
    // restrict to two records with disjoint corners
    std::vector<ActivePolyadRecord> disjoint;
    for (const auto& r : res.records) {
      bool overlap = false;
      for (const auto& d : disjoint)
        for (uint32_t s = 0; s < 4; ++s)
          for (uint32_t t = 0; t < 4; ++t)
            if (r.polyad.edge(s) == d.polyad.edge(t)) overlap = true;
      if (!overlap) disjoint.push_back(r);
    }
    REQUIRE(disjoint.size() >= 2);
    disjoint.erase(disjoint.begin() + 2, disjoint.end());
    PolyadIncidence sub = build_incidence(disjoint);
    CHECK(sub.num_keys() == 8);
    for (const auto& [key, partners] : sub.by_edge)
      CHECK(partners.size() == 1);
  }

  TEST_CASE("matches brute expansion with overlap") {
    testutil::Rng rng(151);
    for (int trial = 0; trial < 25; ++trial) {
      int D = 2 + static_cast<int>(rng() % 2);
      auto inst = testutil::random_instance(rng, D, 4, 3, 1);
      EnumerationResult res = enumerate_active_structural(*inst.graph);
      PolyadIncidence inc = build_incidence(res.records);

      std::vector<oracle::PolyadTuple> tuples;
      for (const auto& r : res.records)
        tuples.push_back(testutil::to_tuple(r.polyad));
      auto brute = oracle::brute_incidence(tuples);

      REQUIRE(inc.num_keys() == brute.size());
      CHECK(std::is_sorted(inc.sorted_keys.begin(), inc.sorted_keys.end()));
      for (const EdgeIndex& key : inc.sorted_keys) {
        auto bit = brute.find(coords_of(key));
        REQUIRE(bit != brute.end());
        // partner multisets agree
        std::multiset<oracle::Coords> got, want;
        for (const auto& p : inc.by_edge.at(key))
          got.insert(coords_of(p.partner));
        for (const auto& c : bit->second) want.insert(c);
        CHECK(got == want);
        // record back-references point at a polyad owning this key
        for (const auto& p : inc.by_edge.at(key)) {
          REQUIRE(p.record < res.records.size());
          const Polyad& owner = res.records[p.record].polyad;
          bool found = false;
          for (uint32_t mask = 0; mask < (1u << D); ++mask) {
            Polyad perm = owner.permutation(mask);
            for (uint32_t s = 0; s < (1u << D); ++s)
              if (perm.edge(s) == key) found = true;
          }
          CHECK(found);
        }
      }
    }
  }
}
