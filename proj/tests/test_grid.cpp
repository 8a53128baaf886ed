#include <doctest.h>

#include "grid.hpp"
#include "helpers.hpp"
#include "rng.hpp"

using namespace hcf;

TEST_CASE("parses the minimal 2-bus CSV case") {
  GridCase grid = testutil::load_fixture("case2.case.csv");
  REQUIRE(grid.buses.size() == 2);
  REQUIRE(grid.lines.size() == 1);
  CHECK(grid.buses[0].id == 1);
  CHECK(grid.buses[0].generation == doctest::Approx(1.0));
  CHECK(grid.buses[1].demand == doctest::Approx(1.0));
  CHECK(grid.lines[0].from == 1);
  CHECK(grid.lines[0].to == 2);
  CHECK(grid.lines[0].susceptance == doctest::Approx(1.0));
  CHECK(grid.lines[0].capacity == doctest::Approx(2.0));
  CHECK(grid.lines[0].in_service);
}

TEST_CASE("rejects a line referencing a missing bus") {
  std::string text =
      "#buses\n1,0.0\n2,1.0\n#gens\n1,1.0\n#lines\n1,1,3,1.0,2.0,1\n";
  CHECK_THROWS_WITH_AS(parse_grid_case(text, GridFormat::case_csv),
                       doctest::Contains("missing bus 3"), Error);
}

TEST_CASE("rejects non-positive susceptance and capacity with the line named") {
  std::string bad_susceptance =
      "#buses\n1,0.0\n2,1.0\n#gens\n1,1.0\n#lines\n7,1,2,0.0,2.0,1\n";
  CHECK_THROWS_WITH_AS(parse_grid_case(bad_susceptance, GridFormat::case_csv),
                       doctest::Contains("line 7"), Error);
  std::string bad_capacity =
      "#buses\n1,0.0\n2,1.0\n#gens\n1,1.0\n#lines\n9,1,2,1.0,-1.0,1\n";
  CHECK_THROWS_WITH_AS(parse_grid_case(bad_capacity, GridFormat::case_csv),
                       doctest::Contains("line 9"), Error);
}

TEST_CASE("rejects duplicate ids and empty input") {
  CHECK_THROWS_AS(parse_grid_case("", GridFormat::case_csv), Error);
  CHECK_THROWS_AS(parse_grid_case("  \n \n", GridFormat::case_csv), Error);
  std::string dup =
      "#buses\n1,0.0\n1,1.0\n#lines\n1,1,1,1.0,1.0,1\n";
  CHECK_THROWS_WITH_AS(parse_grid_case(dup, GridFormat::case_csv),
                       doctest::Contains("duplicate bus id 1"), Error);
}

TEST_CASE("reports syntax errors with line and field") {
  std::string text = "#buses\n1,0.0\n2,oops\n";
  CHECK_THROWS_WITH_AS(parse_grid_case(text, GridFormat::case_csv),
                       doctest::Contains("line 3"), Error);
}

TEST_CASE("parses the 4-bus matpower fixture field by field") {
  GridCase grid = testutil::load_fixture("case4.m");
  REQUIRE(grid.buses.size() == 4);
  REQUIRE(grid.lines.size() == 4);

  // Hand transcription of tests/data/case4.m.
  CHECK(grid.buses[0].demand == doctest::Approx(0.0));
  CHECK(grid.buses[0].generation == doctest::Approx(1.2));
  CHECK(grid.buses[1].demand == doctest::Approx(0.9));
  CHECK(grid.buses[2].generation == doctest::Approx(0.8));
  CHECK(grid.buses[3].demand == doctest::Approx(1.1));

  struct Expected {
    LineId id;
    BusId from, to;
    double susceptance, capacity;
  };
  const Expected expected[] = {
      {1, 1, 2, 1.0 / 0.1, 2.5},
      {2, 2, 3, 1.0 / 0.25, 1.5},
      {3, 3, 4, 1.0 / 0.2, 2.0},
      {4, 4, 1, 1.0 / 0.5, 1.0},
  };
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(grid.lines[i].id == expected[i].id);
    CHECK(grid.lines[i].from == expected[i].from);
    CHECK(grid.lines[i].to == expected[i].to);
    CHECK(grid.lines[i].susceptance == doctest::Approx(expected[i].susceptance));
    CHECK(grid.lines[i].capacity == doctest::Approx(expected[i].capacity));
    CHECK(grid.lines[i].in_service);
  }
}

TEST_CASE("matpower parser rejects non-positive reactance") {
  std::string text = testutil::read_file(testutil::fixture_path("case4.m"));
  auto pos = text.find("0.01\t0.1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 8, "0.01\t0.0");
  CHECK_THROWS_WITH_AS(parse_grid_case(text, GridFormat::matpower),
                       doctest::Contains("non-positive reactance"), Error);
}

TEST_CASE("parser edge cases") {
  SUBCASE("gen rows referencing missing buses are rejected") {
    std::string text = "#buses\n1,0.0\n#gens\n9,1.0\n#lines\n";
    CHECK_THROWS_WITH_AS(parse_grid_case(text, GridFormat::case_csv),
                         doctest::Contains("missing bus 9"), Error);
  }
  SUBCASE("self-loop lines are rejected") {
    std::string text = "#buses\n1,0.0\n2,1.0\n#gens\n1,1.0\n#lines\n1,1,1,1.0,1.0,1\n";
    CHECK_THROWS_WITH_AS(parse_grid_case(text, GridFormat::case_csv),
                         doctest::Contains("self-loop"), Error);
  }
  SUBCASE("wrong field counts name the line") {
    std::string text = "#buses\n1,0.0,9,9\n";
    CHECK_THROWS_WITH_AS(parse_grid_case(text, GridFormat::case_csv),
                         doctest::Contains("line 2"), Error);
  }
  SUBCASE("multiple generators at one bus accumulate") {
    std::string text =
        "#buses\n1,0.0\n2,1.0\n#gens\n1,0.4\n1,0.6\n#lines\n1,1,2,1.0,2.0,1\n";
    GridCase grid = parse_grid_case(text, GridFormat::case_csv);
    CHECK(grid.buses[0].generation == doctest::Approx(1.0));
  }
  SUBCASE("out-of-service lines may omit susceptance positivity") {
    std::string text =
        "#buses\n1,0.0\n2,1.0\n#gens\n1,1.0\n"
        "#lines\n1,1,2,1.0,2.0,1\n2,1,2,0.5,1.0,0\n";
    GridCase grid = parse_grid_case(text, GridFormat::case_csv);
    CHECK_FALSE(grid.lines[1].in_service);
  }
  SUBCASE("matpower case without a gen table parses") {
    std::string text =
        "mpc.bus = [\n1 3 0.0 0;\n2 1 0.0 0;\n];\n"
        "mpc.branch = [\n1 2 0.01 0.1 0 2.5;\n];\n";
    GridCase grid = parse_grid_case(text, GridFormat::matpower);
    CHECK(grid.buses.size() == 2);
    CHECK(grid.lines.size() == 1);
  }
  SUBCASE("matpower case without branches is rejected") {
    CHECK_THROWS_AS(parse_grid_case("mpc.bus = [\n1 3 0 0;\n];\n", GridFormat::matpower),
                    Error);
  }
}

TEST_CASE("balance report") {
  GridCase grid = testutil::load_fixture("case2.case.csv");
  SUBCASE("balanced fixture") {
    BalanceReport rep = validate_balance(grid);
    CHECK(rep.surplus == doctest::Approx(0.0));
    CHECK(rep.balanced);
  }
  SUBCASE("surplus is generation minus demand") {
    grid.buses[1].demand = 0.8;
    BalanceReport rep = validate_balance(grid);
    CHECK(rep.surplus == doctest::Approx(0.2));
    CHECK_FALSE(rep.balanced);
  }
}

TEST_CASE("scaling demand by 1.5 flags a deficit of half the original demand") {
  GridCase grid = testutil::load_fixture("case4.m");
  const double original_demand = grid.total_demand();
  GridCase scaled = scale_demand(grid, 1.5, /*scale_generation=*/false);
  BalanceReport rep = validate_balance(scaled);
  CHECK(rep.surplus == doctest::Approx(-0.5 * original_demand));
  CHECK_FALSE(rep.balanced);
}

TEST_CASE("parse -> serialize -> parse round-trips exactly") {
  Rng rng(20240817);
  for (int trial = 0; trial < 25; ++trial) {
    GridCase grid = testutil::random_grid(rng);
    std::string text = serialize_grid_case(grid);
    GridCase again = parse_grid_case(text, GridFormat::case_csv);
    REQUIRE(again.buses.size() == grid.buses.size());
    REQUIRE(again.lines.size() == grid.lines.size());
    for (std::size_t i = 0; i < grid.buses.size(); ++i) {
      CHECK(again.buses[i].id == grid.buses[i].id);
      CHECK(again.buses[i].demand == grid.buses[i].demand);
      CHECK(again.buses[i].generation == grid.buses[i].generation);
    }
    for (std::size_t i = 0; i < grid.lines.size(); ++i) {
      CHECK(again.lines[i].id == grid.lines[i].id);
      CHECK(again.lines[i].from == grid.lines[i].from);
      CHECK(again.lines[i].to == grid.lines[i].to);
      CHECK(again.lines[i].susceptance == grid.lines[i].susceptance);
      CHECK(again.lines[i].capacity == grid.lines[i].capacity);
      CHECK(again.lines[i].in_service == grid.lines[i].in_service);
    }
    CHECK(serialize_grid_case(again) == text);
  }
}

TEST_CASE("double_capacities touches exactly the named lines") {
  GridCase grid = testutil::load_fixture("case4.m");
  GridCase doubled = double_capacities(grid, {2, 4});
  CHECK(doubled.lines[0].capacity == grid.lines[0].capacity);
  CHECK(doubled.lines[1].capacity == doctest::Approx(2.0 * grid.lines[1].capacity));
  CHECK(doubled.lines[2].capacity == grid.lines[2].capacity);
  CHECK(doubled.lines[3].capacity == doctest::Approx(2.0 * grid.lines[3].capacity));
  CHECK_THROWS_AS(double_capacities(grid, {99}), Error);
}
