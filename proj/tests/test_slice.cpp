#include "slicesim/slice.hpp"

#include <string>

#include "doctest.h"
#include "slicesim/errors.hpp"
#include "slicesim/rng.hpp"

using namespace slicesim;

TEST_CASE("generated slice respects configured ranges and shape") {
  SliceGenParams p;
  p.id = "probe";
  Rng rng(42);
  SliceRequest s = generate_slice(rng, p);

  CHECK(s.id == "probe");
  CHECK(s.vnfs.size() == 10);
  CHECK(s.vlinks.size() == 9);  // linear chain
  CHECK_NOTHROW(validate_slice(s));

  for (const auto& v : s.vnfs) {
    CHECK(v.cpu_demand_ghz >= 0.55);
    CHECK(v.cpu_demand_ghz <= 1.6);
    CHECK(v.proc_delay_ms >= 0.2);
    CHECK(v.proc_delay_ms <= 0.6);
  }
  for (const auto& l : s.vlinks) {
    CHECK(l.bw_demand_mbps >= 40.0);
    CHECK(l.bw_demand_mbps <= 60.0);
  }

  // First half control, second half data; chain in index order.
  for (int i = 0; i < 10; ++i) {
    CHECK(s.vnfs[static_cast<std::size_t>(i)].plane ==
          (i < 5 ? Plane::control : Plane::data));
  }
  for (int i = 0; i < 9; ++i) {
    CHECK(s.vlinks[static_cast<std::size_t>(i)].src ==
          "v" + std::to_string(i));
    CHECK(s.vlinks[static_cast<std::size_t>(i)].dst ==
          "v" + std::to_string(i + 1));
  }
}

TEST_CASE("ranges hold across many seeds (property)") {
  SliceGenParams p;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(seed);
    SliceRequest s = generate_slice(rng, p);
    CHECK_NOTHROW(validate_slice(s));
    for (const auto& v : s.vnfs) {
      REQUIRE(v.cpu_demand_ghz >= 0.55);
      REQUIRE(v.cpu_demand_ghz <= 1.6);
    }
    for (const auto& l : s.vlinks) {
      REQUIRE(l.bw_demand_mbps >= 40.0);
      REQUIRE(l.bw_demand_mbps <= 60.0);
    }
  }
}

TEST_CASE("single-VNF slice is valid and linkless") {
  SliceGenParams p;
  p.vnf_count = 1;
  Rng rng(1);
  SliceRequest s = generate_slice(rng, p);
  CHECK(s.vnfs.size() == 1);
  CHECK(s.vlinks.empty());
  CHECK_NOTHROW(validate_slice(s));
}

TEST_CASE("generation is a pure function of seed and params") {
  SliceGenParams p;
  Rng a(777), b(777);
  CHECK(slice_to_json(generate_slice(a, p)) ==
        slice_to_json(generate_slice(b, p)));

  Rng c(778);
  CHECK(slice_to_json(generate_slice(c, p)) !=
        slice_to_json([] {
          Rng d(777);
          SliceGenParams q;
          return generate_slice(d, q);
        }()));
}

TEST_CASE("random DAG shape stays weakly connected across seeds") {
  SliceGenParams p;
  p.shape = VlinkShape::random_dag;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    SliceRequest s = generate_slice(rng, p);
    CHECK(s.vlinks.size() == 9);
    CHECK_NOTHROW(validate_slice(s));
  }
}

TEST_CASE("generator rejects bad parameters") {
  Rng rng(1);
  SliceGenParams p;
  p.vnf_count = 0;
  CHECK_THROWS_AS(generate_slice(rng, p), ValidationError);

  p = {};
  p.cpu_demand_min_ghz = 2.0;
  p.cpu_demand_max_ghz = 1.0;
  CHECK_THROWS_AS(generate_slice(rng, p), ValidationError);

  p = {};
  p.k_rel_control = 0;
  CHECK_THROWS_AS(generate_slice(rng, p), ValidationError);
}

TEST_CASE("total_cpu_demand sums the VNF demands") {
  SliceRequest s;
  s.id = "t";
  s.delay_budget_ms = 15.0;
  for (int i = 0; i < 10; ++i) {
    s.vnfs.push_back({"v" + std::to_string(i), Plane::control, 1.0, 0.3});
  }
  CHECK(total_cpu_demand(s) == doctest::Approx(10.0));

  SliceRequest single;
  single.id = "u";
  single.delay_budget_ms = 15.0;
  single.vnfs.push_back({"v0", Plane::data, 0.55, 0.2});
  CHECK(total_cpu_demand(single) == doctest::Approx(0.55));
}

TEST_CASE("mean total demand approaches 10.75 GHz across seeds") {
  SliceGenParams p;
  double sum = 0.0;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    Rng rng(static_cast<std::uint64_t>(i) + 10000);
    sum += total_cpu_demand(generate_slice(rng, p));
  }
  // 10 draws uniform on [0.55, 1.6]: mean 10 * 1.075.
  CHECK(sum / n == doctest::Approx(10.75).epsilon(0.02));
}

TEST_CASE("attacker batches are attacker-kind and reproducible") {
  SliceGenParams p;
  p.id = "atk";
  Rng a(99);
  auto batch = generate_attacker_batch(a, 500, p);
  REQUIRE(batch.size() == 500);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(batch[i].kind == SliceKind::attacker);
    CHECK(batch[i].id == "atk-" + std::to_string(i));
    for (const auto& v : batch[i].vnfs) {
      REQUIRE(v.cpu_demand_ghz >= 0.55);
      REQUIRE(v.cpu_demand_ghz <= 1.6);
    }
  }

  Rng b(99);
  auto again = generate_attacker_batch(b, 500, p);
  bool identical = true;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    identical = identical &&
                (slice_to_json(batch[i]) == slice_to_json(again[i]));
  }
  CHECK(identical);

  Rng c(99);
  auto one = generate_attacker_batch(c, 1, p);
  CHECK(one.size() == 1);
}

TEST_CASE("slice validation flags structural defects") {
  SliceRequest s;
  s.id = "bad";
  s.delay_budget_ms = 15.0;
  CHECK_THROWS_AS(validate_slice(s), ValidationError);  // no VNFs

  s.vnfs.push_back({"v0", Plane::control, 1.0, 0.2});
  s.vnfs.push_back({"v0", Plane::data, 1.0, 0.2});
  CHECK_THROWS_WITH_AS(validate_slice(s), doctest::Contains("duplicate"),
                       ValidationError);

  s.vnfs[1].id = "v1";
  s.vlinks.push_back({"v0", "nope", 50.0});
  CHECK_THROWS_WITH_AS(validate_slice(s), doctest::Contains("nope"),
                       ValidationError);

  s.vlinks[0] = {"v0", "v1", -5.0};
  CHECK_THROWS_AS(validate_slice(s), ValidationError);

  s.vlinks[0] = {"v0", "v1", 50.0};
  CHECK_NOTHROW(validate_slice(s));

  s.vnfs.push_back({"v2", Plane::data, 1.0, 0.2});  // detached
  CHECK_THROWS_WITH_AS(validate_slice(s), doctest::Contains("v2"),
                       ValidationError);
}

TEST_CASE("slice JSON round-trip is identity") {
  SliceGenParams p;
  p.id = "rt";
  p.kind = SliceKind::target;
  p.k_rel_control = 3;
  p.k_rel_data = 2;
  Rng rng(4242);
  SliceRequest s = generate_slice(rng, p);

  SliceRequest back = slice_from_json(slice_to_json(s));
  CHECK(slice_to_json(back) == slice_to_json(s));
  CHECK(back.kind == SliceKind::target);
  CHECK(back.k_rel_control == 3);

  auto path = std::filesystem::temp_directory_path() / "slicesim_slice.json";
  save_slice(s, path);
  CHECK(slice_to_json(load_slice(path)) == slice_to_json(s));
  std::filesystem::remove(path);
}
