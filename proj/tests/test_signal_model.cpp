#include <doctest.h>

#include <cmath>

#include "sigdet/measures.hpp"
#include "sigdet/signal_model.hpp"

using namespace sigdet;

TEST_CASE("index enumeration") {
  CHECK(enumerate_index(IndexSet::integers(), 5) == std::vector<std::int64_t>{0, 1, -1, 2, -2});
  CHECK(enumerate_index(IndexSet::naturals(), 3) == std::vector<std::int64_t>{1, 2, 3});
  CHECK(enumerate_index(IndexSet::tree_edges(2), 6) == std::vector<std::int64_t>{0, 1, 2, 3, 4, 5});
  CHECK_THROWS_AS(enumerate_index(IndexSet::tree_edges(2), 7), SizeError);
  CHECK(enumerate_index(IndexSet::integers(), 0).empty());
  CHECK(tree_edge_count(0) == 0);
  CHECK(tree_edge_count(2) == 6);
  CHECK(tree_edge_count(16) == 131070);
  CHECK(tree_edge_level(0) == 1);
  CHECK(tree_edge_level(1) == 1);
  CHECK(tree_edge_level(2) == 2);
  CHECK(tree_edge_level(5) == 2);
  CHECK(tree_edge_level(6) == 3);
  CHECK(tree_edge_level(13) == 3);
}

TEST_CASE("amplitudes") {
  const auto p = Amplitude::power_law(2.0, 0.5, 1.0);
  CHECK(p(3) == doctest::Approx(1.0));
  CHECK(p(-3) == doctest::Approx(1.0));
  CHECK(Amplitude::constant(0.7)(12345) == 0.7);
  const auto l = Amplitude::explicit_list({1.0, 2.0, 3.0});
  CHECK(l(2) == 2.0);
  CHECK_THROWS_AS(l(4), SizeError);
  CHECK(l.max_index() == 3);
  CHECK_THROWS_AS(Amplitude::power_law(1.0, 0.5)(0), SizeError);
}

TEST_CASE("generate_signal examples") {
  SUBCASE("rademacher") {
    const SpaceDescriptor d{space::Rademacher{Amplitude::constant(1.0)}};
    const auto x = generate_signal(d, SignalParams{params::Signs{{1, -1, 1}}}, 3);
    CHECK(x.values == std::vector<cplx>{1.0, -1.0, 1.0});
    CHECK(x.field == ScalarField::real);
    CHECK_THROWS_AS(generate_signal(d, SignalParams{params::Signs{{1, -1}}}, 3), ParameterError);
    CHECK_THROWS_AS(generate_signal(d, SignalParams{params::Rotation{0.1}}, 3), ParameterError);
  }
  SUBCASE("walsh character property") {
    const SpaceDescriptor d{space::Walsh{Amplitude::constant(1.0)}};
    const std::vector<int> eps{-1, 1, -1, -1};
    const auto x = generate_signal(d, SignalParams{params::WalshSigns{eps}}, 16);
    CHECK(x.values[3] == cplx(eps[0] * eps[1]));
    CHECK(x.values[0] == cplx(1.0));
    for (int n = 0; n < 16; ++n)
      for (int m = 0; m < 16; ++m)
        CHECK(x.values[n] * x.values[m] == x.values[n ^ m]);
  }
  SUBCASE("trigonometric") {
    const auto sigma = Amplitude::power_law(1.0, 0.5, 1.0);
    const SpaceDescriptor d{space::Trigonometric{sigma}};
    const auto x0 = generate_signal(d, SignalParams{params::Rotation{0.0}}, 9);
    for (std::size_t i = 0; i < 9; ++i)
      CHECK(x0.values[i] == cplx(sigma(integer_at(i))));
    const double t = 0.1234;
    const auto x = generate_signal(d, SignalParams{params::Rotation{t}}, 9);
    for (std::size_t i = 0; i < 9; ++i) {
      const auto n = integer_at(i);
      CHECK(std::abs(x.values[i]) == doctest::Approx(sigma(n)).epsilon(1e-15));
      CHECK(std::abs(x.values[i] - sigma(n) * std::polar(1.0, 2.0 * M_PI * n * t)) < 1e-12);
    }
  }
  SUBCASE("lacunary") {
    const SpaceDescriptor d{space::Lacunary{Amplitude::constant(1.0)}};
    const double t = 0.3;
    const auto x = generate_signal(d, SignalParams{params::Rotation{t}}, 20);
    for (int n = 1; n <= 20; ++n) {
      // 2^n t mod 1 evaluated exactly for t = 3/10: (3 * 2^n mod 10) / 10
      const double frac = static_cast<double>((3ULL << n) % 10) / 10.0;
      CHECK(std::abs(x.values[n - 1] - std::polar(1.0, 2.0 * M_PI * frac)) < 1e-9);
      CHECK(std::abs(x.values[n - 1]) == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
  SUBCASE("tree trail") {
    const SpaceDescriptor d{space::TreeTrail{2.0, 2}};
    const auto x = generate_signal(d, SignalParams{params::TreePath{{0, 0}}}, 6);
    CHECK(x.values == std::vector<cplx>{2.0, 0.0, 2.0, 0.0, 0.0, 0.0});
    const SpaceDescriptor d5{space::TreeTrail{1.5, 5}};
    const auto y = generate_signal(d5, SignalParams{params::TreePath{{1, 0, 1, 1, 0}}}, tree_edge_count(5));
    int nonzero = 0;
    std::vector<int> per_level(6, 0);
    for (std::size_t e = 0; e < y.size(); ++e)
      if (y.values[e] != cplx(0.0)) {
        ++nonzero;
        ++per_level[tree_edge_level(e)];
        CHECK(y.values[e] == cplx(1.5));
        // the parent edge also lies on the path
        if (e >= 2)
          CHECK(y.values[(e - 2) / 2] == cplx(1.5));
      }
    CHECK(nonzero == 5);
    for (int l = 1; l <= 5; ++l)
      CHECK(per_level[l] == 1);
  }
  SUBCASE("periodic, scaled, union") {
    const SpaceDescriptor per{space::Periodic{3, ScalarField::real}};
    const auto x = generate_signal(per, SignalParams{params::PeriodVector{{1.0, 2.0}}}, 5);
    CHECK(x.values == std::vector<cplx>{1.0, 2.0, 1.0, 2.0, 1.0});
    CHECK_THROWS_AS(generate_signal(per, SignalParams{params::PeriodVector{{1, 2, 3, 4}}}, 5),
                    ParameterError);
    const auto sc = scaled(3.0, SpaceDescriptor{space::Rademacher{Amplitude::constant(1.0)}});
    const auto y = generate_signal(sc, SignalParams{params::Signs{{1, -1}}}, 2);
    CHECK(y.values == std::vector<cplx>{3.0, -3.0});
    CHECK_THROWS_AS(validate(scaled(0.0, per)), ParameterError);
    const auto u = union_of({SpaceDescriptor{space::Rademacher{Amplitude::constant(1.0)}}, per});
    CHECK_NOTHROW(validate(u));
    const auto z = generate_signal(u, union_choice(1, SignalParams{params::PeriodVector{{5.0}}}), 3);
    CHECK(z.values == std::vector<cplx>{5.0, 5.0, 5.0});
    const auto bad = union_of({SpaceDescriptor{space::Rademacher{Amplitude::constant(1.0)}},
                               SpaceDescriptor{space::Trigonometric{Amplitude::constant(1.0)}}});
    CHECK_THROWS_AS(validate(bad), ParameterError);
    CHECK_THROWS_AS(validate(union_of({})), ParameterError);
  }
  SUBCASE("cantor measure") {
    const SpaceDescriptor d{space::CantorMeasure{3, 2, 3}};
    CHECK_NOTHROW(validate(d));
    CHECK_THROWS_AS(validate(SpaceDescriptor{space::CantorMeasure{3, 3, 3}}), ParameterError);
    const auto tree = sample_random_cantor(3, 2, 3, RngStream{1, 2});
    const auto x = generate_signal(d, SignalParams{params::CantorChoice{tree}}, 27);
    CHECK(std::abs(x.values[0] - cplx(1.0)) < 1e-12);
    CHECK(x.field == ScalarField::complex);
  }
  SUBCASE("determinism") {
    const SpaceDescriptor d{space::Trigonometric{Amplitude::power_law(1.0, 0.3, 1.0)}};
    const auto a = generate_signal(d, SignalParams{params::Rotation{0.377}}, 1000);
    const auto b = generate_signal(d, SignalParams{params::Rotation{0.377}}, 1000);
    CHECK(a.values == b.values);
  }
}

TEST_CASE("union detector is a logical or") {
  DetectionMap no = [](const std::vector<cplx> &) { return false; };
  DetectionMap yes = [](const std::vector<cplx> &) { return true; };
  CHECK_FALSE(combine_union_detector({no, no})({}));
  CHECK(combine_union_detector({no, yes})({}));
  CHECK_THROWS_AS(combine_union_detector({}), ParameterError);
}
