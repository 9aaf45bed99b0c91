#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "slicefi/dynslice.hpp"
#include "support/testkit.hpp"

using namespace slicefi;
using hdl::StmtId;

namespace {

struct Setup {
  hdl::Design design;
  sim::Stimulus stimulus;
  deps::DependencyGraph graph;
  deps::StaticSlice slice;
  sim::SimResult golden;
  dynslice::DynamicSliceSet dyn;
};

Setup setup(hdl::Design d, sim::Stimulus stim, const std::string& point) {
  Setup s{std::move(d), std::move(stim), {}, {}, {}, {}};
  s.graph = deps::build_graph(s.design);
  s.slice = deps::static_slice(s.graph, s.design, point);
  s.golden = sim::simulate(s.design, s.stimulus, {point});
  s.dyn = dynslice::dynamic_slices(s.slice, s.golden.coverage, s.design.statements.size());
  return s;
}

std::set<std::uint32_t> critical_cycles(const std::vector<dynslice::CriticalFaultTarget>& list, const std::string& reg) {
  std::set<std::uint32_t> out;
  for (const auto& c : list) {
    if (c.reg == reg) out.insert(c.cycle);
  }
  return out;
}

bool detected(const Setup& s, const FaultDescriptor& f, const std::string& point) {
  const auto golden = testkit::reference_simulate(s.design, s.stimulus, {point});
  const auto run = testkit::reference_simulate(s.design, s.stimulus, {point}, f);
  for (std::uint32_t t = f.cycle; t < s.stimulus.length(); ++t) {
    if (run.observations[t] != golden.observations[t]) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("dynslice") {
  TEST_CASE("chop reference stimulus: FF leaves the dynamic slice") {
    auto d = testkit::load_fixture("chop.mhdl");
    auto stim = testkit::load_fixture_stimulus(d, "chop_ref.csv");
    const auto s = setup(std::move(d), std::move(stim), "TAR_F");
    REQUIRE(s.dyn.length() == 5);
    CHECK(s.dyn.per_cycle[0] == std::vector<StmtId>{0, 1, 3, 4});
    CHECK(s.dyn.per_cycle[2] == std::vector<StmtId>{0, 1, 3});
    CHECK(s.dyn.per_cycle[3] == std::vector<StmtId>{0, 3, 4});
    CHECK(s.dyn.per_cycle[4] == std::vector<StmtId>{0, 3});
  }

  TEST_CASE("chop reference stimulus: critical cycles and their brute-force confirmation") {
    auto d = testkit::load_fixture("chop.mhdl");
    auto stim = testkit::load_fixture_stimulus(d, "chop_ref.csv");
    const auto s = setup(std::move(d), std::move(stim), "TAR_F");
    const auto critical = dynslice::critical_fault_list(s.dyn, s.design, s.graph, {0, 5});
    // TAR_F reads FF in cycles 0, 1, 3; FF is rewritten in cycle 2 and never after.
    CHECK(critical_cycles(critical, "FF") == std::set<std::uint32_t>{0, 1, 3});
    CHECK(critical_cycles(critical, "H0").empty());
    for (const auto& c : critical) CHECK(c.first_consumer_cycle == c.cycle);
    CHECK_FALSE(detected(s, {"FF", 0, 2}, "TAR_F"));
    CHECK_FALSE(detected(s, {"FF", 0, 4}, "TAR_F"));

    const auto universe = dynslice::fault_universe(s.design, {0, 5});
    CHECK(universe.size() == 10);
    const auto collapsed = dynslice::collapse_report(universe, critical);
    CHECK(collapsed.size() == universe.size() - critical.size());
    for (const auto& f : collapsed) CHECK_FALSE(detected(s, f, "TAR_F"));
  }

  TEST_CASE("register rewritten every cycle with no consumer at t is not critical") {
    auto d = testkit::parse_text(
        "design d; in a : 1; in en : 1; reg q : 1 = 1'b0; out o : 1; always { q <= a; } "
        "comb { if (en) { o = q; } } end");
    auto stim = sim::make_stimulus(d, {{"a", {1, 0, 1, 1}}, {"en", {1, 0, 1, 0}}});
    const auto s = setup(std::move(d), std::move(stim), "o");
    const auto critical = dynslice::critical_fault_list(s.dyn, s.design, s.graph, {0, 4});
    CHECK(critical_cycles(critical, "q") == std::set<std::uint32_t>{0, 2});
  }

  TEST_CASE("persistence: a consumer two cycles later keeps the fault critical") {
    auto d = testkit::parse_text(
        "design d; in we : 1; in re : 1; in a : 2; reg q : 2 = 2'b01; out o : 2; "
        "always { if (we) { q <= a; } } comb { if (re) { o = q; } } end");
    auto stim = sim::make_stimulus(d, {{"we", {0, 0, 0, 1, 0}}, {"re", {0, 0, 1, 0, 0}}, {"a", {0, 0, 0, 3, 0}}});
    const auto s = setup(std::move(d), std::move(stim), "o");
    const auto critical = dynslice::critical_fault_list(s.dyn, s.design, s.graph, {0, 5});
    CHECK(critical_cycles(critical, "q") == std::set<std::uint32_t>{0, 1, 2});
    for (const auto& c : critical) {
      CHECK(c.first_consumer_cycle == 2);
      CHECK(detected(s, c.descriptor(), "o"));
    }
    CHECK(critical.size() == 6);  // both bits share the verdict
    CHECK_FALSE(detected(s, {"q", 0, 3}, "o"));
  }

  TEST_CASE("observed register is consumed in every cycle") {
    auto d = testkit::load_fixture("toy2.mhdl");
    auto stim = testkit::load_fixture_stimulus(d, "toy2.csv");
    const auto s = setup(std::move(d), std::move(stim), "b");
    const auto critical = dynslice::critical_fault_list(s.dyn, s.design, s.graph, {0, 3});
    CHECK(critical_cycles(critical, "b") == std::set<std::uint32_t>{0, 1, 2});
    // a feeds b's assignment, which runs every cycle
    CHECK(critical_cycles(critical, "a") == std::set<std::uint32_t>{0, 1, 2});
  }

  TEST_CASE("degenerate slices") {
    auto d = testkit::load_fixture("toy2.mhdl");
    auto stim = testkit::load_fixture_stimulus(d, "toy2.csv");
    const auto input = setup(d, stim, "d");
    for (const auto& c : input.dyn.per_cycle) CHECK(c.empty());
    CHECK(dynslice::critical_fault_list(input.dyn, input.design, input.graph, {0, 3}).empty());
    const auto full = setup(d, stim, "q");
    for (const auto& c : full.dyn.per_cycle) CHECK(c == full.slice.members);
  }

  TEST_CASE("errors") {
    auto d = testkit::load_fixture("toy2.mhdl");
    auto stim = testkit::load_fixture_stimulus(d, "toy2.csv");
    const auto s = setup(d, stim, "q");
    CHECK_THROWS_AS(dynslice::critical_fault_list(s.dyn, s.design, s.graph, {1, 1}), dynslice::SliceError);
    CHECK_THROWS_AS(dynslice::critical_fault_list(s.dyn, s.design, s.graph, {0, 4}), dynslice::SliceError);
    CHECK_THROWS_AS(dynslice::dynamic_slices(s.slice, s.golden.coverage, 1), dynslice::SliceError);
    const auto other = deps::build_graph(testkit::load_fixture("chop.mhdl"));
    CHECK_THROWS_AS(dynslice::critical_fault_list(s.dyn, s.design, other, {0, 3}), dynslice::SliceError);
  }

  TEST_CASE("collapse report complements the critical list") {
    const auto d = testkit::load_fixture("toy2.mhdl");
    const auto universe = dynslice::fault_universe(d, {0, 3});
    CHECK(universe.size() == 6);
    CHECK(dynslice::collapse_report(universe, {}) == universe);
    std::vector<dynslice::CriticalFaultTarget> all;
    for (const auto& f : universe) all.push_back({f.reg, f.bit, f.cycle, f.cycle});
    CHECK(dynslice::collapse_report(universe, all).empty());
  }

  TEST_CASE("merging keeps one entry per descriptor with the earliest consumer") {
    const std::vector<dynslice::CriticalFaultTarget> a = {{"FF", 0, 1, 3}, {"H0", 0, 0, 0}};
    const std::vector<dynslice::CriticalFaultTarget> b = {{"FF", 0, 1, 2}};
    const auto merged = dynslice::merge_critical({a, b});
    REQUIRE(merged.size() == 2);
    CHECK(merged[0] == dynslice::CriticalFaultTarget{"FF", 0, 1, 2});
    CHECK(merged[1] == dynslice::CriticalFaultTarget{"H0", 0, 0, 0});
  }

  TEST_CASE("CSV exports") {
    std::ostringstream crit, coll;
    dynslice::write_critical_csv(crit, {{"FF", 0, 1, 3}});
    CHECK(crit.str() == "register,bit,cycle,first_consumer_cycle\nFF,0,1,3\n");
    dynslice::write_collapsed_csv(coll, {{"H0", 0, 4}});
    CHECK(coll.str() == "register,bit,cycle,first_consumer_cycle,verdict\nH0,0,4,,undetected_collapsed\n");
  }

  TEST_CASE("generated designs: subset chain, soundness of collapsing") {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 80; ++i) {
      const auto text = testkit::random_design_source(rng);
      CAPTURE(text);
      auto d = testkit::parse_text(text);
      auto stim = testkit::random_stimulus(d, 10, rng);
      const std::string point = d.signal(d.outputs().front()).name;
      const auto s = setup(std::move(d), std::move(stim), point);
      for (std::uint32_t t = 0; t < s.dyn.length(); ++t) {
        const auto& c = s.dyn.per_cycle[t];
        CHECK(std::includes(s.slice.members.begin(), s.slice.members.end(), c.begin(), c.end()));
        const auto& cov = s.golden.coverage.per_cycle[t];
        CHECK(std::includes(cov.begin(), cov.end(), c.begin(), c.end()));
      }
      const CycleWindow window{0, s.stimulus.length()};
      const auto critical = dynslice::critical_fault_list(s.dyn, s.design, s.graph, window);
      const auto regs = deps::slice_registers(s.slice, s.design);
      for (const auto& c : critical) CHECK(std::find(regs.begin(), regs.end(), c.reg) != regs.end());
      const auto truth = testkit::brute_force_detected(s.design, s.stimulus, {point}, window);
      std::set<FaultDescriptor> crit;
      for (const auto& c : critical) crit.insert(c.descriptor());
      for (const auto& f : truth) CHECK(crit.count(f) == 1);
    }
  }
}
